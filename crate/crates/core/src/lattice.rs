//! Periodic-box momentum basis.
//!
//! Modes carry wave vectors `k = 2πn/L` for every integer triple `n ∈ [−N, N]³`,
//! stored in lexicographic order of `n` (x slowest, z fastest). The flat index of
//! `n` is `((nx+N)·S + (ny+N))·S + (nz+N)` with `S = 2N+1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub box_length: f64,
    pub cutoff: u32,
    pub mass: f64,
    pub epsilon: f64,
}

impl LatticeSpec {
    pub fn new(box_length: f64, cutoff: u32, mass: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            box_length,
            cutoff,
            mass,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uses ε = two lattice spacings.
    pub fn with_default_epsilon(box_length: f64, cutoff: u32, mass: f64) -> Result<Self> {
        Self::new(box_length, cutoff, mass, Self::default_epsilon(box_length))
    }

    pub fn default_epsilon(box_length: f64) -> f64 {
        2.0 * (2.0 * PI / box_length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "box_length must be > 0, got {}",
                self.box_length
            )));
        }
        if self.cutoff < 1 {
            return Err(Error::InvalidLattice("cutoff N must be >= 1".into()));
        }
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::InvalidLattice(format!(
                "mass must be >= 0, got {}",
                self.mass
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        2 * self.cutoff as usize + 1
    }

    pub fn mode_count(&self) -> usize {
        self.side().pow(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Momentum spacing 2π/L.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.box_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub index: [i32; 3],
    pub k_vec: Vec3,
    pub omega: f64,
    pub norm: f64,
}

impl Mode {
    pub fn k_sq(&self) -> f64 {
        dot(self.k_vec, self.k_vec)
    }

    /// A massless zero mode has ω = 0 and no normalizable plane wave.
    pub fn is_active(&self) -> bool {
        self.norm > 0.0
    }
}

/// Immutable mode table. Per-mode frequencies and norms are stored; everything
/// else is derived from the flat index on demand.
#[derive(Debug, Clone)]
pub struct ModeLattice {
    spec: LatticeSpec,
    axis: Vec<f64>,
    omega: Vec<f64>,
    norm: Vec<f64>,
}

pub fn build_lattice(spec: LatticeSpec) -> Result<ModeLattice> {
    spec.validate()?;
    let n = spec.cutoff as i32;
    let dk = spec.spacing();
    let axis: Vec<f64> = (-n..=n).map(|i| i as f64 * dk).collect();
    let side = axis.len();
    let volume = spec.volume();
    let mu2 = spec.mass * spec.mass;
    let mut omega = Vec::with_capacity(spec.mode_count());
    let mut norm = Vec::with_capacity(spec.mode_count());
    for ix in 0..side {
        for iy in 0..side {
            let kxy = axis[ix] * axis[ix] + axis[iy] * axis[iy];
            for &kz in &axis {
                let w = (kxy + kz * kz + mu2).sqrt();
                omega.push(w);
                norm.push(if w > 0.0 {
                    1.0 / (2.0 * w * volume).sqrt()
                } else {
                    0.0
                });
            }
        }
    }
    Ok(ModeLattice {
        spec,
        axis,
        omega,
        norm,
    })
}

impl ModeLattice {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn side(&self) -> usize {
        self.axis.len()
    }

    /// Wave numbers along one axis, ordered from −N to N.
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn norms(&self) -> &[f64] {
        &self.norm
    }

    pub fn flat_index(&self, n: [i32; 3]) -> Option<usize> {
        let c = self.spec.cutoff as i32;
        if n.iter().any(|&v| v < -c || v > c) {
            return None;
        }
        let s = self.side();
        let [x, y, z] = n.map(|v| (v + c) as usize);
        Some((x * s + y) * s + z)
    }

    pub fn axis_indices(&self, i: usize) -> [usize; 3] {
        let s = self.side();
        [i / (s * s), (i / s) % s, i % s]
    }

    pub fn integer_index(&self, i: usize) -> [i32; 3] {
        let c = self.spec.cutoff as i32;
        self.axis_indices(i).map(|a| a as i32 - c)
    }

    pub fn k_vec(&self, i: usize) -> Vec3 {
        self.axis_indices(i).map(|a| self.axis[a])
    }

    /// Index of the mode with wave vector −k.
    pub fn negated(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    pub fn mode(&self, i: usize) -> Mode {
        Mode {
            index: self.integer_index(i),
            k_vec: self.k_vec(i),
            omega: self.omega[i],
            norm: self.norm[i],
        }
    }

    pub fn modes(&self) -> impl ExactSizeIterator<Item = Mode> + '_ {
        (0..self.len()).map(move |i| self.mode(i))
    }

    /// Integer radius of the on-shell sphere |k| = `wavenumber`.
    pub fn shell_index(&self, wavenumber: f64) -> f64 {
        wavenumber / self.spec.spacing()
    }

    /// Default quadrature grid: 2N+1 points per axis.
    pub fn quadrature_grid(&self) -> QuadratureGrid {
        QuadratureGrid {
            box_length: self.spec.box_length,
            points: self.side(),
        }
    }
}

pub fn mode_function(mode: &Mode, r: Vec3, t: f64) -> Complex64 {
    let phase = dot(mode.k_vec, r) - mode.omega * t;
    Complex64::from_polar(mode.norm, phase)
}

/// Time derivative of [`mode_function`].
pub fn mode_function_dot(mode: &Mode, r: Vec3, t: f64) -> Complex64 {
    Complex64::new(0.0, -mode.omega) * mode_function(mode, r, t)
}

/// Uniform grid of `points³` nodes covering [−L/2, L/2)³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub box_length: f64,
    pub points: usize,
}

impl QuadratureGrid {
    pub fn step(&self) -> f64 {
        self.box_length / self.points as f64
    }

    pub fn node_count(&self) -> usize {
        self.points.pow(3)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.step()
    }

    pub fn node(&self, i: usize) -> Vec3 {
        let p = self.points;
        [
            self.coordinate(i / (p * p)),
            self.coordinate((i / p) % p),
            self.coordinate(i % p),
        ]
    }

    pub fn cell_volume(&self) -> f64 {
        self.step().powi(3)
    }
}

/// Field value and time derivative on every grid node.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub grid: QuadratureGrid,
    pub value: Vec<Complex64>,
    pub time_derivative: Vec<Complex64>,
}

impl SampledField {
    pub fn from_fn<F>(grid: QuadratureGrid, mut f: F) -> Self
    where
        F: FnMut(Vec3) -> (Complex64, Complex64),
    {
        let (value, time_derivative) = (0..grid.node_count()).map(|i| f(grid.node(i))).unzip();
        Self {
            grid,
            value,
            time_derivative,
        }
    }

    /// Samples u (or u* when `conjugate`) for one mode.
    pub fn mode(mode: &Mode, grid: QuadratureGrid, t: f64, conjugate: bool) -> Self {
        Self::from_fn(grid, |r| {
            let u = mode_function(mode, r, t);
            let du = Complex64::new(0.0, -mode.omega) * u;
            if conjugate {
                (u.conj(), du.conj())
            } else {
                (u, du)
            }
        })
    }

    /// Positive-frequency field Σ f_ℓ u_ℓ.
    pub fn synthesize(
        lattice: &ModeLattice,
        coeffs: &[Complex64],
        grid: QuadratureGrid,
        t: f64,
    ) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::CoefficientLength {
                got: coeffs.len(),
                expected: lattice.len(),
            });
        }
        let sum = crate::kernel::ModeSum::new(lattice, coeffs, t);
        Ok(Self::from_fn(grid, |r| {
            let jet = sum.jet(r);
            (jet.value, jet.time_derivative)
        }))
    }
}

/// i·∫d³x (A*·Ḃ − Ȧ*·B) as a Riemann sum over the grid.
pub fn inner_product(a: &SampledField, b: &SampledField) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch {
            left: a.grid.points,
            right: b.grid.points,
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.value.len() {
        acc += a.value[i].conj() * b.time_derivative[i] - a.time_derivative[i].conj() * b.value[i];
    }
    Ok(Complex64::new(0.0, 1.0) * acc * a.grid.cell_volume())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthonormalityReport {
    /// max |(u_k, u_ℓ) − δ|
    pub direct: f64,
    /// max |(u_k*, u_ℓ*) + δ|
    pub conjugate: f64,
    /// max |(u_k*, u_ℓ)|
    pub mixed: f64,
    pub pairs: usize,
    /// Pairs skipped because a mode is the massless zero mode.
    pub skipped: usize,
}

impl OrthonormalityReport {
    pub fn max_deviation(&self) -> f64 {
        self.direct.max(self.conjugate).max(self.mixed)
    }
}

/// Every ordered pair of active modes.
pub fn all_pairs(lattice: &ModeLattice) -> Vec<(usize, usize)> {
    let n = lattice.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
}

pub fn verify_orthonormality(
    lattice: &ModeLattice,
    pairs: &[(usize, usize)],
) -> Result<OrthonormalityReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("mode-pair sample is empty".into()));
    }
    let grid = lattice.quadrature_grid();
    let mut cache: std::collections::BTreeMap<usize, (SampledField, SampledField)> =
        Default::default();
    let mut report = OrthonormalityReport {
        direct: 0.0,
        conjugate: 0.0,
        mixed: 0.0,
        pairs: 0,
        skipped: 0,
    };
    for &(i, j) in pairs {
        if i >= lattice.len() || j >= lattice.len() {
            return Err(Error::InvalidParameter(format!(
                "mode pair ({i}, {j}) out of range"
            )));
        }
        if !lattice.mode(i).is_active() || !lattice.mode(j).is_active() {
            report.skipped += 1;
            continue;
        }
        for m in [i, j] {
            cache.entry(m).or_insert_with(|| {
                let mode = lattice.mode(m);
                (
                    SampledField::mode(&mode, grid, 0.0, false),
                    SampledField::mode(&mode, grid, 0.0, true),
                )
            });
        }
        let (ui, ci) = &cache[&i];
        let (uj, cj) = &cache[&j];
        let delta = if i == j { 1.0 } else { 0.0 };
        report.direct = report.direct.max((inner_product(ui, uj)? - delta).norm());
        report.conjugate = report.conjugate.max((inner_product(ci, cj)? + delta).norm());
        report.mixed = report.mixed.max(inner_product(ci, uj)?.norm());
        report.pairs += 1;
    }
    Ok(report)
}

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn distance(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(d, d).sqrt()
}
