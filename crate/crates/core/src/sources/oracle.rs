//! Brute-force coefficients by spatial quadrature of the relativistic inner product.
//!
//! At t = 0, (u_ℓ, F/√(2ω_k)) reduces to (ω_ℓ+ω_k)·n_ℓ/√(2ω_k) · ∫ e^{−iℓ·r} F(r) d³r.
//! The integral runs over a cube of side L centred on the source (a translate of
//! the periodic cell) with the wave damped by e^{−ερ}. Nodes are cell midpoints,
//! so the source sits on a cell corner; the 1/ρ singularity then gives an error
//! expansion in even powers of h that Richardson extrapolation removes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SlitSpec, Which};
use crate::error::{Error, Result};
use crate::lattice::{ModeLattice, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleGrid {
    /// Quadrature points per axis on the fine level.
    pub points: usize,
    /// Combine levels `points` and `points/2` as (4·fine − coarse)/3.
    pub richardson: bool,
}

impl OracleGrid {
    pub fn for_cutoff(cutoff: u32) -> Self {
        let points = (8 * cutoff as usize).max(32).next_multiple_of(4);
        Self {
            points,
            richardson: true,
        }
    }

    fn coarsest(&self) -> usize {
        if self.richardson {
            self.points / 2
        } else {
            self.points
        }
    }

    pub fn check(&self, cutoff: u32) -> Result<()> {
        let required = 2 * cutoff as usize + 2;
        let divisor = if self.richardson { 4 } else { 2 };
        if self.points % divisor != 0 {
            return Err(Error::InvalidParameter(format!(
                "oracle grid points must be a multiple of {divisor}, got {}",
                self.points
            )));
        }
        if self.coarsest() < required {
            return Err(Error::GridTooCoarse {
                points: self.coarsest(),
                cutoff,
                required,
            });
        }
        Ok(())
    }
}

fn damped_radial(k: f64, eps: f64, s: [f64; 3]) -> Complex64 {
    let rho = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    Complex64::from_polar((-eps * rho).exp() / rho, k * rho)
}

fn prefactor(mode: &Mode, spec: &SlitSpec) -> f64 {
    (mode.omega + spec.omega_k) * mode.norm / (2.0 * spec.omega_k).sqrt()
}

fn source_phase(mode: &Mode, spec: &SlitSpec, which: Which) -> Complex64 {
    let half = 0.5 * mode.k_vec[0] * spec.separation;
    let a = || spec.source_a.amplitude() * Complex64::from_polar(1.0, -half);
    let b = || spec.source_b.amplitude() * Complex64::from_polar(1.0, half);
    match which {
        Which::A => a(),
        Which::B => b(),
        Which::DoubleSlit => a() + b(),
    }
}

fn check_inputs(lattice: &ModeLattice, spec: &SlitSpec, grid: &OracleGrid) -> Result<()> {
    grid.check(lattice.spec().cutoff)?;
    if spec.separation >= lattice.spec().box_length {
        return Err(Error::InvalidGeometry("sources lie outside the box".into()));
    }
    Ok(())
}

/// Single-mode oracle by a direct triple sum. O(points³) per call.
pub fn oracle_coefficient(
    lattice: &ModeLattice,
    mode_index: usize,
    spec: &SlitSpec,
    which: Which,
    grid: &OracleGrid,
) -> Result<Complex64> {
    check_inputs(lattice, spec, grid)?;
    let mode = lattice.mode(mode_index);
    let l = lattice.spec().box_length;
    let eps = lattice.spec().epsilon;
    let level = |m: usize| {
        let h = l / m as f64;
        let coord = |i: usize| (i as f64 + 0.5) * h - 0.5 * l;
        let mut acc = Complex64::new(0.0, 0.0);
        for ix in 0..m {
            for iy in 0..m {
                for iz in 0..m {
                    let s = [coord(ix), coord(iy), coord(iz)];
                    let phase = -(mode.k_vec[0] * s[0] + mode.k_vec[1] * s[1] + mode.k_vec[2] * s[2]);
                    acc += Complex64::from_polar(1.0, phase) * damped_radial(spec.wavenumber, eps, s);
                }
            }
        }
        acc * h.powi(3)
    };
    let t = extrapolate(grid, level);
    Ok(prefactor(&mode, spec) * source_phase(&mode, spec, which) * t)
}

fn extrapolate<F: Fn(usize) -> Complex64>(grid: &OracleGrid, level: F) -> Complex64 {
    if grid.richardson {
        (4.0 * level(grid.points) - level(grid.points / 2)) / 3.0
    } else {
        level(grid.points)
    }
}

/// ∫ e^{−iℓ·s} e^{(ik−ε)ρ}/ρ d³s over the source-centred cell, for every
/// |n| ∈ [0, N]³. Indexed `(ax·(N+1) + ay)·(N+1) + az`.
///
/// The integrand is even in each coordinate, so only the positive octant is
/// sampled and the exponentials reduce to cosines; the transform is then three
/// separable contractions.
pub fn radial_transform(lattice: &ModeLattice, wavenumber: f64, grid: &OracleGrid) -> Result<Vec<Complex64>> {
    grid.check(lattice.spec().cutoff)?;
    let spec = lattice.spec();
    let n1 = spec.cutoff as usize + 1;
    let kn: Vec<f64> = (0..n1).map(|n| n as f64 * spec.spacing()).collect();
    let level = |m: usize| octant_level(spec.box_length, spec.epsilon, wavenumber, &kn, m);
    if grid.richardson {
        let fine = level(grid.points);
        let coarse = level(grid.points / 2);
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (4.0 * f - c) / 3.0)
            .collect())
    } else {
        Ok(level(grid.points))
    }
}

fn octant_level(l: f64, eps: f64, k: f64, kn: &[f64], m: usize) -> Vec<Complex64> {
    let h = l / m as f64;
    let half = m / 2;
    let n1 = kn.len();
    let s: Vec<f64> = (0..half).map(|i| (i as f64 + 0.5) * h).collect();
    let cos: Vec<f64> = kn
        .iter()
        .flat_map(|&k| s.iter().map(move |&x| (k * x).cos()))
        .collect();
    let plane = half * half;

    let g: Vec<Complex64> = (0..half * plane)
        .into_par_iter()
        .map(|i| damped_radial(k, eps, [s[i / plane], s[(i / half) % half], s[i % half]]))
        .collect();

    // contract x: g1[ax][iy][iz]
    let g1: Vec<Complex64> = (0..n1)
        .into_par_iter()
        .flat_map_iter(|ax| {
            let mut slab = vec![Complex64::new(0.0, 0.0); plane];
            for ix in 0..half {
                let c = cos[ax * half + ix];
                let src = &g[ix * plane..(ix + 1) * plane];
                for (d, v) in slab.iter_mut().zip(src) {
                    *d += v * c;
                }
            }
            slab
        })
        .collect();

    // contract y: g2[ax][ay][iz]
    let g2: Vec<Complex64> = (0..n1 * n1)
        .into_par_iter()
        .flat_map_iter(|axy| {
            let (ax, ay) = (axy / n1, axy % n1);
            let mut row = vec![Complex64::new(0.0, 0.0); half];
            for iy in 0..half {
                let c = cos[ay * half + iy];
                let src = &g1[ax * plane + iy * half..ax * plane + (iy + 1) * half];
                for (d, v) in row.iter_mut().zip(src) {
                    *d += v * c;
                }
            }
            row
        })
        .collect();

    let weight = 8.0 * h.powi(3);
    (0..n1 * n1 * n1)
        .into_par_iter()
        .map(|i| {
            let (axy, az) = (i / n1, i % n1);
            let row = &g2[axy * half..(axy + 1) * half];
            let acc: Complex64 = row
                .iter()
                .zip(&cos[az * half..(az + 1) * half])
                .map(|(v, c)| v * c)
                .sum();
            acc * weight
        })
        .collect()
}

/// Oracle coefficients for every lattice mode, via [`radial_transform`].
pub fn oracle_coefficients(
    lattice: &ModeLattice,
    spec: &SlitSpec,
    which: Which,
    grid: &OracleGrid,
) -> Result<Vec<Complex64>> {
    check_inputs(lattice, spec, grid)?;
    let table = radial_transform(lattice, spec.wavenumber, grid)?;
    let n1 = lattice.spec().cutoff as usize + 1;
    Ok((0..lattice.len())
        .into_par_iter()
        .map(|i| {
            let mode = lattice.mode(i);
            let [ax, ay, az] = mode.index.map(|v| v.unsigned_abs() as usize);
            let t = table[(ax * n1 + ay) * n1 + az];
            prefactor(&mode, spec) * source_phase(&mode, spec, which) * t
        })
        .collect())
}
