//! One-particle and coherent states stored as mode-coefficient vectors.
//!
//! Every observable reduces to bilinears in the coefficients. For a one-particle
//! state ⟨a†a⟩ = f*f and ⟨aa⟩ = 0. For a coherent state a|C⟩ = f|C⟩, so the
//! normalization ⟨C|C⟩ cancels and ⟨aa⟩ = ff survives in the energy density.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{deterministic_sum, FieldJet, ModeSum};
use crate::lattice::{mode_function, ModeLattice, Vec3};
use crate::sources::{closed_form_coefficients, SlitSpec, Which};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateKind {
    OneParticle,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EnergyMode {
    Instant,
    PeriodAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Observable {
    Field,
    Current,
    Energy,
    EnergyTimeAveraged,
    /// Classical |F^DS|² from the closed-form sources, no lattice involved.
    Intensity,
}

impl Observable {
    pub fn id(&self) -> &'static str {
        match self {
            Observable::Field => "FIELD",
            Observable::Current => "CURRENT",
            Observable::Energy => "ENERGY",
            Observable::EnergyTimeAveraged => "ENERGY_TIME_AVERAGED",
            Observable::Intensity => "INTENSITY",
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    lattice: Arc<ModeLattice>,
    coeffs: Vec<Complex64>,
    kind: StateKind,
    pub label: String,
}

impl QuantumState {
    pub fn new(
        lattice: Arc<ModeLattice>,
        coeffs: Vec<Complex64>,
        kind: StateKind,
        label: impl Into<String>,
    ) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::CoefficientLength {
                got: coeffs.len(),
                expected: lattice.len(),
            });
        }
        Ok(Self {
            lattice,
            coeffs,
            kind,
            label: label.into(),
        })
    }

    pub fn vacuum(lattice: Arc<ModeLattice>, kind: StateKind) -> Self {
        let n = lattice.len();
        Self {
            lattice,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
            kind,
            label: "vacuum".into(),
        }
    }

    pub fn single_mode(lattice: Arc<ModeLattice>, index: usize, kind: StateKind) -> Self {
        let mut s = Self::vacuum(lattice, kind);
        s.coeffs[index] = Complex64::new(1.0, 0.0);
        s.label = format!("mode {index}");
        s
    }

    pub fn lattice(&self) -> &Arc<ModeLattice> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    /// Σ|f_ℓ|². For a coherent state ⟨C|C⟩ = exp of this; the exponential is never formed.
    pub fn coefficient_norm_sqr(&self) -> f64 {
        deterministic_sum(self.coeffs.len(), |i| Complex64::new(self.coeffs[i].norm_sqr(), 0.0)).re
    }

    /// Rescales to Σ|f|² = 1. The zero vector is returned unchanged.
    pub fn normalized(mut self) -> Self {
        let n = self.coefficient_norm_sqr().sqrt();
        if n > 0.0 {
            self.coeffs.iter_mut().for_each(|c| *c /= n);
        }
        self
    }

    pub fn with_kind(mut self, kind: StateKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn map_coeffs(mut self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c = f(*c));
        self
    }

    pub fn evaluator(&self, t: f64) -> ModeSum<'_> {
        ModeSum::new(&self.lattice, &self.coeffs, t)
    }

    pub fn jet(&self, r: Vec3, t: f64) -> FieldJet {
        self.evaluator(t).jet(r)
    }

    /// Observable value from an already evaluated jet. FIELD is reported by its real part.
    pub fn observable_from_jet(&self, jet: &FieldJet, observable: Observable) -> f64 {
        match observable {
            Observable::Field => jet.value.re,
            Observable::Current => jet.current(),
            Observable::Energy => energy_from_jet(self.kind, self.lattice.spec().mass, jet, EnergyMode::Instant),
            Observable::EnergyTimeAveraged => {
                energy_from_jet(self.kind, self.lattice.spec().mass, jet, EnergyMode::PeriodAveraged)
            }
            Observable::Intensity => jet.value.norm_sqr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildOptions {
    pub normalize: bool,
}

fn build(lattice: &Arc<ModeLattice>, spec: &SlitSpec, which: Which, kind: StateKind, opts: BuildOptions, label: &str) -> QuantumState {
    let coeffs = closed_form_coefficients(lattice, spec, which);
    let s = QuantumState {
        lattice: Arc::clone(lattice),
        coeffs,
        kind,
        label: label.into(),
    };
    if opts.normalize {
        s.normalized()
    } else {
        s
    }
}

/// |DS;k⟩ with closed-form coefficients.
pub fn build_double_slit_state(lattice: &Arc<ModeLattice>, spec: &SlitSpec, opts: BuildOptions) -> QuantumState {
    build(lattice, spec, Which::DoubleSlit, StateKind::OneParticle, opts, "DS")
}

/// |A;k⟩ or |B;k⟩, one slit only.
pub fn build_single_slit_state(lattice: &Arc<ModeLattice>, spec: &SlitSpec, which: Which, opts: BuildOptions) -> QuantumState {
    let label = match which {
        Which::A => "A",
        Which::B => "B",
        Which::DoubleSlit => "DS",
    };
    build(lattice, spec, which, StateKind::OneParticle, opts, label)
}

/// |CDS;k⟩ = exp(Σ a†f^DS)|0⟩.
pub fn build_coherent_state(lattice: &Arc<ModeLattice>, spec: &SlitSpec, opts: BuildOptions) -> QuantumState {
    build(lattice, spec, Which::DoubleSlit, StateKind::Coherent, opts, "CDS")
}

/// Σ f_ℓ u_ℓ(r, t); the same formula serves both kinds.
pub fn field_expectation(state: &QuantumState, r: Vec3, t: f64) -> Complex64 {
    state.jet(r, t).value
}

/// i(F*Ḟ − Ḟ*F). Equals 2ω|F|² on a single frequency shell; mixed shells
/// can make it negative pointwise.
pub fn current_density(state: &QuantumState, r: Vec3, t: f64) -> f64 {
    state.jet(r, t).current()
}

pub fn energy_density(state: &QuantumState, r: Vec3, t: f64, mode: EnergyMode) -> f64 {
    energy_from_jet(state.kind, state.lattice.spec().mass, &state.jet(r, t), mode)
}

pub fn energy_from_jet(kind: StateKind, mass: f64, jet: &FieldJet, mode: EnergyMode) -> f64 {
    let normal = jet.normal_energy(mass);
    match (kind, mode) {
        (StateKind::Coherent, EnergyMode::Instant) => normal + jet.anomalous_energy(mass),
        _ => normal,
    }
}

/// Trapezoidal average of the INSTANT energy over `samples` equally spaced
/// times in one period starting at `t0`.
pub fn trapezoid_period_energy(state: &QuantumState, r: Vec3, t0: f64, period: f64, samples: usize) -> f64 {
    let total: f64 = (0..samples)
        .map(|j| energy_density(state, r, t0 + period * j as f64 / samples as f64, EnergyMode::Instant))
        .sum();
    total / samples as f64
}

/// Σ (f^B_ℓ)* f^A_ℓ.
pub fn state_overlap(a: &QuantumState, b: &QuantumState) -> Result<Complex64> {
    if a.kind != StateKind::OneParticle || b.kind != StateKind::OneParticle {
        return Err(Error::KindMismatch("overlap needs two one-particle states".into()));
    }
    if !Arc::ptr_eq(&a.lattice, &b.lattice) && a.lattice.spec() != b.lattice.spec() {
        return Err(Error::LatticeMismatch);
    }
    Ok(deterministic_sum(a.coeffs.len(), |i| b.coeffs[i].conj() * a.coeffs[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BilinearObservable {
    Current,
    Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeSubset {
    All,
    Indices(Vec<usize>),
    /// Modes with |f_ℓ| ≥ threshold·max|f|.
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixResult {
    pub value: f64,
    pub modes_used: usize,
    /// Coefficient weight Σ|f|² left outside the subset, relative to the total.
    pub uncovered_weight: f64,
    pub warnings: Vec<String>,
}

/// Tr{ρO} with ρ = |ψ⟩⟨ψ| restricted to a mode subset, contracted as an
/// explicit double sum Σ_{ℓℓ'} ρ_{ℓ'ℓ} O_{ℓℓ'}. Cost is quadratic in the subset size.
///
/// Modes outside the subset whose |f| exceeds `warn_threshold`·max|f| produce a warning.
pub fn density_matrix_expectation(
    state: &QuantumState,
    observable: BilinearObservable,
    r: Vec3,
    t: f64,
    subset: &ModeSubset,
    warn_threshold: f64,
) -> Result<DensityMatrixResult> {
    if state.kind != StateKind::OneParticle {
        return Err(Error::KindMismatch("density matrix needs a one-particle state".into()));
    }
    let lat = &state.lattice;
    let fmax = state.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut indices: Vec<usize> = match subset {
        ModeSubset::All => (0..lat.len()).collect(),
        ModeSubset::Indices(v) => {
            if let Some(&bad) = v.iter().find(|&&i| i >= lat.len()) {
                return Err(Error::InvalidParameter(format!("mode index {bad} out of range")));
            }
            v.clone()
        }
        ModeSubset::Relative(th) => (0..lat.len())
            .filter(|&i| fmax > 0.0 && state.coeffs[i].norm() >= th * fmax)
            .collect(),
    };
    indices.sort_unstable();
    indices.dedup();

    let mut inside = vec![false; lat.len()];
    indices.iter().for_each(|&i| inside[i] = true);
    let total = state.coefficient_norm_sqr();
    let mut missed = 0.0;
    let mut largest_missed: f64 = 0.0;
    for (i, c) in state.coeffs.iter().enumerate() {
        if !inside[i] {
            missed += c.norm_sqr();
            largest_missed = largest_missed.max(c.norm());
        }
    }
    let mut warnings = Vec::new();
    if fmax > 0.0 && largest_missed >= warn_threshold * fmax {
        warnings.push(format!(
            "mode subset misses coefficients up to {:.3e} of max |f| (threshold {warn_threshold:.3e})",
            largest_missed / fmax
        ));
    }

    let mass2 = lat.spec().mass.powi(2);
    // per-mode jets of u_ℓ: value, time derivative, gradient
    let jets: Vec<(Complex64, Complex64, [Complex64; 3])> = indices
        .iter()
        .map(|&i| {
            let m = lat.mode(i);
            let u = mode_function(&m, r, t);
            let du = Complex64::new(0.0, -m.omega) * u;
            let g = m.k_vec.map(|k| Complex64::new(0.0, k) * u);
            (u, du, g)
        })
        .collect();
    let rho: Vec<Complex64> = indices.iter().map(|&i| state.coeffs[i]).collect();

    let mut acc = Complex64::new(0.0, 0.0);
    for (p, (ul, dul, gl)) in jets.iter().enumerate() {
        for (q, (um, dum, gm)) in jets.iter().enumerate() {
            // ⟨1_ℓ|O|1_m⟩
            let o = match observable {
                BilinearObservable::Current => {
                    Complex64::new(0.0, 1.0) * (ul.conj() * dum - dul.conj() * um)
                }
                BilinearObservable::Energy => {
                    dul.conj() * dum
                        + gl[0].conj() * gm[0]
                        + gl[1].conj() * gm[1]
                        + gl[2].conj() * gm[2]
                        + mass2 * ul.conj() * um
                }
            };
            // ρ_{mℓ} = f_m f_ℓ*
            acc += rho[q] * rho[p].conj() * o;
        }
    }
    Ok(DensityMatrixResult {
        value: acc.re,
        modes_used: indices.len(),
        uncovered_weight: if total > 0.0 { missed / total } else { 0.0 },
        warnings,
    })
}
