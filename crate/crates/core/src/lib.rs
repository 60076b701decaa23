//! Double-slit and coherent double-slit states of a free scalar field in a
//! periodic box, and the screen observables they produce.
//!
//! Natural units (c = ħ = 1). The box is [−L/2, L/2)³, the slits sit at
//! (±d/2, 0, 0) and the screen is the plane z = r.

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod lattice;
pub mod sources;
pub mod states;

pub use error::{Error, Result};
pub use experiment::{
    analytic_scan, fringe_analysis, incoherent_average, overlap_curve, reconstruction_error, reconstruction_sweep,
    scan_screen, FringeReport, OverlapPoint, PhaseAveraging, ReconstructionPoint, ScreenGeometry, ScreenPatch,
    ScreenScan,
};
pub use kernel::{FieldJet, ModeSum};
pub use lattice::{build_lattice, LatticeSpec, Mode, ModeLattice, Vec3};
pub use num_complex::Complex64;
pub use sources::{Amplitude, Dispersion, SlitSpec, SourceSpec, Which};
pub use states::{BuildOptions, EnergyMode, Observable, QuantumState, StateKind};
