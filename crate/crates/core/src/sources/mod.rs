//! Spherical-wave sources at the two slits and their mode coefficients.

mod oracle;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::FieldJet;
use crate::lattice::{distance, LatticeSpec, Mode, ModeLattice, Vec3};

pub use oracle::{oracle_coefficient, oracle_coefficients, radial_transform, OracleGrid};

/// Complex amplitude kept as magnitude and phase, phase reduced to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitude {
    pub magnitude: f64,
    pub phase: f64,
}

impl Amplitude {
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::InvalidSlit(format!(
                "amplitude magnitude must be finite and >= 0, got {magnitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidSlit("amplitude phase must be finite".into()));
        }
        let mut phase = phase.rem_euclid(TAU);
        if phase >= TAU {
            phase = 0.0;
        }
        Ok(Self { magnitude, phase })
    }

    pub fn unit() -> Self {
        Self {
            magnitude: 1.0,
            phase: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            magnitude: 0.0,
            phase: 0.0,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub position: Vec3,
    pub amplitude: Amplitude,
}

impl SourceSpec {
    pub fn amplitude(&self) -> Complex64 {
        self.amplitude.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// ω_k = √(k² + μ²)
    #[default]
    Relativistic,
    /// ω_k = k²/2μ
    NonRelativistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    A,
    B,
    DoubleSlit,
}

/// Two point sources at (±d/2, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitSpec {
    pub separation: f64,
    pub wavenumber: f64,
    pub mass: f64,
    pub dispersion: Dispersion,
    pub omega_k: f64,
    pub source_a: SourceSpec,
    pub source_b: SourceSpec,
    pub exclusion_radius: f64,
}

impl SlitSpec {
    /// Exclusion radius defaults to λ/10, which is L/100 for the usual ten-wavelength box.
    pub fn new(separation: f64, wavenumber: f64, mass: f64, a: Amplitude, b: Amplitude) -> Result<Self> {
        if !(separation.is_finite() && separation > 0.0) {
            return Err(Error::InvalidSlit(format!(
                "separation d must be > 0, got {separation}"
            )));
        }
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::InvalidSlit(format!(
                "wavenumber k must be > 0, got {wavenumber}"
            )));
        }
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidSlit(format!("mass must be >= 0, got {mass}")));
        }
        let a = Amplitude::new(a.magnitude, a.phase)?;
        let b = Amplitude::new(b.magnitude, b.phase)?;
        let half = 0.5 * separation;
        Ok(Self {
            separation,
            wavenumber,
            mass,
            dispersion: Dispersion::Relativistic,
            omega_k: (wavenumber * wavenumber + mass * mass).sqrt(),
            source_a: SourceSpec {
                position: [half, 0.0, 0.0],
                amplitude: a,
            },
            source_b: SourceSpec {
                position: [-half, 0.0, 0.0],
                amplitude: b,
            },
            exclusion_radius: 0.1 * (TAU / wavenumber),
        })
    }

    pub fn with_dispersion(mut self, dispersion: Dispersion) -> Result<Self> {
        self.omega_k = match dispersion {
            Dispersion::Relativistic => {
                (self.wavenumber * self.wavenumber + self.mass * self.mass).sqrt()
            }
            Dispersion::NonRelativistic => {
                if self.mass <= 0.0 {
                    return Err(Error::InvalidSlit(
                        "non-relativistic dispersion needs mass > 0".into(),
                    ));
                }
                self.wavenumber * self.wavenumber / (2.0 * self.mass)
            }
        };
        self.dispersion = dispersion;
        Ok(self)
    }

    pub fn with_exclusion_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidSlit(format!(
                "exclusion radius must be >= 0, got {radius}"
            )));
        }
        self.exclusion_radius = radius;
        Ok(self)
    }

    pub fn with_amplitudes(mut self, a: Amplitude, b: Amplitude) -> Result<Self> {
        self.source_a.amplitude = Amplitude::new(a.magnitude, a.phase)?;
        self.source_b.amplitude = Amplitude::new(b.magnitude, b.phase)?;
        Ok(self)
    }

    pub fn with_separation(self, separation: f64) -> Result<Self> {
        let fresh = Self::new(
            separation,
            self.wavenumber,
            self.mass,
            self.source_a.amplitude,
            self.source_b.amplitude,
        )?;
        fresh
            .with_dispersion(self.dispersion)?
            .with_exclusion_radius(self.exclusion_radius)
    }

    /// Sets the exclusion radius to L/100 and checks the slits fit the box.
    pub fn bind_to_lattice(self, lattice: &LatticeSpec) -> Result<Self> {
        self.validate_for(lattice)?;
        self.with_exclusion_radius(lattice.box_length / 100.0)
    }

    pub fn validate_for(&self, lattice: &LatticeSpec) -> Result<()> {
        if self.separation > 0.5 * lattice.box_length {
            return Err(Error::InvalidGeometry(format!(
                "slit separation d = {} exceeds L/2 = {}; both sources must sit inside the box",
                self.separation,
                0.5 * lattice.box_length
            )));
        }
        if (self.mass - lattice.mass).abs() > 1e-12 * lattice.mass.max(1.0) {
            return Err(Error::InvalidSlit(format!(
                "source mass {} differs from lattice mass {}",
                self.mass, lattice.mass
            )));
        }
        Ok(())
    }

    pub fn source(&self, which: Which) -> Option<&SourceSpec> {
        match which {
            Which::A => Some(&self.source_a),
            Which::B => Some(&self.source_b),
            Which::DoubleSlit => None,
        }
    }

    /// Far-field fringe period 2πr/(kd).
    pub fn predicted_spacing(&self, screen_distance: f64) -> f64 {
        TAU * screen_distance / (self.wavenumber * self.separation)
    }

    pub fn field(&self, which: Which, r: Vec3, t: f64) -> Result<Complex64> {
        self.damped_field(which, r, t, 0.0)
    }

    /// Field with k → k + iε, i.e. each wave damped by e^{−ερ}.
    pub fn damped_field(&self, which: Which, r: Vec3, t: f64, epsilon: f64) -> Result<Complex64> {
        let wave = |s: &SourceSpec| {
            regularized_spherical_wave(
                s,
                self.wavenumber,
                epsilon,
                self.omega_k,
                r,
                t,
                self.exclusion_radius,
            )
        };
        match which {
            Which::A => wave(&self.source_a),
            Which::B => wave(&self.source_b),
            Which::DoubleSlit => Ok(wave(&self.source_a)? + wave(&self.source_b)?),
        }
    }
}

pub fn spherical_wave(
    src: &SourceSpec,
    k: f64,
    omega: f64,
    r: Vec3,
    t: f64,
    exclusion_radius: f64,
) -> Result<Complex64> {
    regularized_spherical_wave(src, k, 0.0, omega, r, t, exclusion_radius)
}

/// amplitude·exp(−iωt + ikρ − ερ)/ρ
pub fn regularized_spherical_wave(
    src: &SourceSpec,
    k: f64,
    epsilon: f64,
    omega: f64,
    r: Vec3,
    t: f64,
    exclusion_radius: f64,
) -> Result<Complex64> {
    let rho = distance(r, src.position);
    if rho <= exclusion_radius || rho == 0.0 {
        return Err(Error::InsideExclusion {
            distance: rho,
            radius: exclusion_radius,
        });
    }
    let radial = Complex64::from_polar((-epsilon * rho).exp() / rho, k * rho - omega * t);
    Ok(src.amplitude() * radial)
}

/// Value, time derivative and gradient of the damped field scaled by
/// 1/√(2ω_k), the target the lattice state reproduces.
pub fn damped_field_jet(spec: &SlitSpec, which: Which, r: Vec3, t: f64, epsilon: f64) -> Result<FieldJet> {
    let scale = 1.0 / (2.0 * spec.omega_k).sqrt();
    let mut jet = FieldJet::default();
    let sources: &[&SourceSpec] = match which {
        Which::A => &[&spec.source_a],
        Which::B => &[&spec.source_b],
        Which::DoubleSlit => &[&spec.source_a, &spec.source_b],
    };
    for s in sources {
        let f = regularized_spherical_wave(s, spec.wavenumber, epsilon, spec.omega_k, r, t, spec.exclusion_radius)? * scale;
        let rho = distance(r, s.position);
        // d/dρ of e^{(ik−ε)ρ}/ρ
        let radial = f * Complex64::new(-epsilon - 1.0 / rho, spec.wavenumber);
        jet.value += f;
        jet.time_derivative += Complex64::new(0.0, -spec.omega_k) * f;
        for a in 0..3 {
            jet.gradient[a] += radial * ((r[a] - s.position[a]) / rho);
        }
    }
    Ok(jet)
}

pub fn double_slit_field(spec: &SlitSpec, r: Vec3, t: f64) -> Result<Complex64> {
    spec.field(Which::DoubleSlit, r, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceDecomposition {
    pub total: f64,
    pub term_a: f64,
    pub term_b: f64,
    pub cross: f64,
}

impl InterferenceDecomposition {
    fn from_fields(fa: Complex64, fb: Complex64) -> Self {
        let term_a = fa.norm_sqr();
        let term_b = fb.norm_sqr();
        let cross = 2.0 * (fa.conj() * fb).re;
        Self {
            total: term_a + term_b + cross,
            term_a,
            term_b,
            cross,
        }
    }
}

pub fn intensity(spec: &SlitSpec, r: Vec3, t: f64) -> Result<InterferenceDecomposition> {
    damped_intensity(spec, r, t, 0.0)
}

pub fn damped_intensity(
    spec: &SlitSpec,
    r: Vec3,
    t: f64,
    epsilon: f64,
) -> Result<InterferenceDecomposition> {
    Ok(InterferenceDecomposition::from_fields(
        spec.damped_field(Which::A, r, t, epsilon)?,
        spec.damped_field(Which::B, r, t, epsilon)?,
    ))
}

/// 4π n_ℓ(ω_ℓ+ω_k) / (√(2ω_k)(ℓ² − (k+iε)²)), the part shared by both slits.
pub fn radial_factor(mode: &Mode, spec: &SlitSpec, epsilon: f64) -> Complex64 {
    let kc = Complex64::new(spec.wavenumber, epsilon);
    let denom = (mode.k_sq() - kc * kc) * (2.0 * spec.omega_k).sqrt();
    4.0 * PI * mode.norm * (mode.omega + spec.omega_k) / denom
}

pub fn closed_form_coefficient(mode: &Mode, spec: &SlitSpec, epsilon: f64, which: Which) -> Complex64 {
    let radial = radial_factor(mode, spec, epsilon);
    let half = 0.5 * mode.k_vec[0] * spec.separation;
    let a = || spec.source_a.amplitude() * Complex64::from_polar(1.0, -half);
    let b = || spec.source_b.amplitude() * Complex64::from_polar(1.0, half);
    radial
        * match which {
            Which::A => a(),
            Which::B => b(),
            Which::DoubleSlit => a() + b(),
        }
}

/// Closed-form coefficients for every lattice mode in lattice order.
pub fn closed_form_coefficients(lattice: &ModeLattice, spec: &SlitSpec, which: Which) -> Vec<Complex64> {
    let eps = lattice.spec().epsilon;
    (0..lattice.len())
        .into_par_iter()
        .map(|i| closed_form_coefficient(&lattice.mode(i), spec, eps, which))
        .collect()
}
