//! Criterion benches for the mode-sum kernels; see `benches/`.
