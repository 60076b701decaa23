//! Mode-sum kernel.
//!
//! Evaluates F = Σ f_ℓ u_ℓ together with Ḟ and ∇F at a point. The spatial phase
//! factorizes as e^{iℓ·r} = X[nx]·Y[ny]·Z[nz], so each point costs one complex
//! multiply-add per mode. Sums run sequentially in mode order, which keeps every
//! value independent of how callers distribute points over threads.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::lattice::{ModeLattice, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldJet {
    pub value: Complex64,
    pub time_derivative: Complex64,
    pub gradient: [Complex64; 3],
}

impl FieldJet {
    /// Number density i(F*Ḟ − Ḟ*F) of a positive-frequency field.
    pub fn current(&self) -> f64 {
        let z = self.value.conj() * self.time_derivative - self.time_derivative.conj() * self.value;
        -z.im
    }

    /// |Ḟ|² + |∇F|² + μ²|F|².
    pub fn normal_energy(&self, mass: f64) -> f64 {
        self.time_derivative.norm_sqr()
            + self.gradient.iter().map(|g| g.norm_sqr()).sum::<f64>()
            + mass * mass * self.value.norm_sqr()
    }

    /// Re[Ḟ² + (∇F)² + μ²F²], the double-frequency term of a coherent state.
    pub fn anomalous_energy(&self, mass: f64) -> f64 {
        let g2: Complex64 = self.gradient.iter().map(|g| g * g).sum();
        (self.time_derivative * self.time_derivative + g2 + mass * mass * self.value * self.value).re
    }
}

/// Coefficients with norms and time phases folded in, ready for point evaluation.
pub struct ModeSum<'a> {
    lattice: &'a ModeLattice,
    weights: Vec<Complex64>,
}

impl<'a> ModeSum<'a> {
    pub fn new(lattice: &'a ModeLattice, coeffs: &[Complex64], t: f64) -> Self {
        assert_eq!(coeffs.len(), lattice.len(), "coefficient length");
        let weights = coeffs
            .par_iter()
            .zip(lattice.omegas().par_iter().zip(lattice.norms().par_iter()))
            .map(|(&f, (&w, &n))| f * Complex64::from_polar(n, -w * t))
            .collect();
        Self { lattice, weights }
    }

    pub fn lattice(&self) -> &ModeLattice {
        self.lattice
    }

    pub fn jet(&self, r: Vec3) -> FieldJet {
        let axis = self.lattice.axis();
        let s = axis.len();
        let omega = self.lattice.omegas();
        let tables: [Vec<Complex64>; 3] = std::array::from_fn(|a| {
            axis.iter()
                .map(|&k| Complex64::from_polar(1.0, k * r[a]))
                .collect()
        });
        let [xt, yt, zt] = &tables;

        let zero = Complex64::new(0.0, 0.0);
        let (mut s0, mut sw, mut sx, mut sy, mut sz) = (zero, zero, zero, zero, zero);
        for ix in 0..s {
            let (mut p0, mut pw, mut py, mut pz) = (zero, zero, zero, zero);
            for iy in 0..s {
                let base = (ix * s + iy) * s;
                let w = &self.weights[base..base + s];
                let om = &omega[base..base + s];
                let (mut a0, mut aw, mut az) = (zero, zero, zero);
                for iz in 0..s {
                    let t = w[iz] * zt[iz];
                    a0 += t;
                    aw += t * om[iz];
                    az += t * axis[iz];
                }
                let y = yt[iy];
                p0 += y * a0;
                pw += y * aw;
                pz += y * az;
                py += y * a0 * axis[iy];
            }
            let x = xt[ix];
            s0 += x * p0;
            sw += x * pw;
            sz += x * pz;
            sy += x * py;
            sx += x * p0 * axis[ix];
        }
        let i = Complex64::new(0.0, 1.0);
        FieldJet {
            value: s0,
            time_derivative: -i * sw,
            gradient: [i * sx, i * sy, i * sz],
        }
    }

    /// Jets at many points; output order follows `points` for any thread count.
    pub fn jets(&self, points: &[Vec3]) -> Vec<FieldJet> {
        points.par_iter().map(|&r| self.jet(r)).collect()
    }
}

/// Sum with a fixed chunking so the result does not depend on the thread pool.
pub fn deterministic_sum<F>(len: usize, f: F) -> Complex64
where
    F: Fn(usize) -> Complex64 + Sync,
{
    const CHUNK: usize = 1 << 14;
    let partials: Vec<Complex64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            (c * CHUNK..end).fold(Complex64::new(0.0, 0.0), |acc, i| acc + f(i))
        })
        .collect();
    partials.into_iter().sum()
}
