//! Screen scans, fringe extraction, phase averaging and slit-separation sweeps.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_lattice, distance, LatticeSpec, ModeLattice, Vec3};
use crate::sources::{damped_intensity, Amplitude, SlitSpec, Which};
use crate::states::{build_double_slit_state, build_single_slit_state, state_overlap, BuildOptions, Observable, QuantumState};

/// Row of points (x, y, distance) with x evenly spaced over [x_min, x_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub distance: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y: f64,
    pub samples: usize,
}

impl ScreenGeometry {
    pub fn new(distance: f64, x_min: f64, x_max: f64, y: f64, samples: usize) -> Result<Self> {
        let g = Self {
            distance,
            x_min,
            x_max,
            y,
            samples,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric about x = 0.
    pub fn centered(distance: f64, half_width: f64, y: f64, samples: usize) -> Result<Self> {
        Self::new(distance, -half_width, half_width, y, samples)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "screen distance must be > 0, got {}",
                self.distance
            )));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(Error::InvalidGeometry("x range must satisfy x_min < x_max".into()));
        }
        if !self.y.is_finite() {
            return Err(Error::InvalidGeometry("y must be finite".into()));
        }
        if self.samples < 16 || self.samples % 2 == 0 {
            return Err(Error::InvalidGeometry(format!(
                "samples must be odd and >= 16, got {}",
                self.samples
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.samples - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.samples).map(|j| self.x_min + j as f64 * h).collect()
    }

    pub fn points(&self) -> Vec<Vec3> {
        self.xs().into_iter().map(|x| [x, self.y, self.distance]).collect()
    }

    /// Every point inside the periodic box and clear of both exclusion radii.
    pub fn check_placement(&self, lattice: Option<&LatticeSpec>, slit: Option<&SlitSpec>) -> Result<()> {
        self.validate()?;
        check_points(&self.points(), lattice, slit)
    }
}

fn check_points(points: &[Vec3], lattice: Option<&LatticeSpec>, slit: Option<&SlitSpec>) -> Result<()> {
    if let Some(l) = lattice {
        let half = 0.5 * l.box_length;
        if let Some(p) = points.iter().find(|p| p.iter().any(|c| c.abs() >= half)) {
            return Err(Error::InvalidGeometry(format!(
                "screen point ({}, {}, {}) lies outside the box [-L/2, L/2) with L = {}",
                p[0], p[1], p[2], l.box_length
            )));
        }
    }
    if let Some(s) = slit {
        for p in points {
            for src in [&s.source_a, &s.source_b] {
                let rho = distance(*p, src.position);
                if rho <= s.exclusion_radius {
                    return Err(Error::InsideExclusion {
                        distance: rho,
                        radius: s.exclusion_radius,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Rectangular patch on the plane z = distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenPatch {
    pub distance: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScreenPatch {
    pub fn points(&self) -> Vec<Vec3> {
        let lerp = |a: f64, b: f64, i: usize, n: usize| {
            if n < 2 {
                a
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push([
                    lerp(self.x_min, self.x_max, ix, self.nx),
                    lerp(self.y_min, self.y_max, iy, self.ny),
                    self.distance,
                ]);
            }
        }
        out
    }

    /// Comma-free, so it can sit in a CSV cell unquoted.
    pub fn label(&self) -> String {
        format!(
            "z={};x=[{}:{}];y=[{}:{}];{}x{}",
            self.distance, self.x_min, self.x_max, self.y_min, self.y_max, self.nx, self.ny
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScanMetadata {
    pub label: String,
    pub slit: Option<SlitSpec>,
    pub lattice: Option<LatticeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenScan {
    pub geometry: ScreenGeometry,
    pub observable: Observable,
    pub time: f64,
    pub values: Vec<f64>,
    /// Imaginary part, present for FIELD scans only.
    pub imag: Option<Vec<f64>>,
    pub metadata: ScanMetadata,
}

pub fn scan_screen(state: &QuantumState, geom: &ScreenGeometry, observable: Observable, t: f64) -> Result<ScreenScan> {
    geom.check_placement(Some(state.lattice().spec()), None)?;
    let jets = state.evaluator(t).jets(&geom.points());
    let values = jets.iter().map(|j| state.observable_from_jet(j, observable)).collect();
    let imag = (observable == Observable::Field).then(|| jets.iter().map(|j| j.value.im).collect());
    Ok(ScreenScan {
        geometry: *geom,
        observable,
        time: t,
        values,
        imag,
        metadata: ScanMetadata {
            label: state.label.clone(),
            slit: None,
            lattice: Some(*state.lattice().spec()),
        },
    })
}

/// Closed-form |F^DS|² along the screen, optionally with waves damped by e^{−ερ}.
pub fn analytic_scan(spec: &SlitSpec, geom: &ScreenGeometry, t: f64, epsilon: f64) -> Result<ScreenScan> {
    geom.check_placement(None, Some(spec))?;
    let values = geom
        .points()
        .par_iter()
        .map(|&r| damped_intensity(spec, r, t, epsilon).map(|d| d.total))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScreenScan {
        geometry: *geom,
        observable: Observable::Intensity,
        time: t,
        values,
        imag: None,
        metadata: ScanMetadata {
            label: "analytic".into(),
            slit: Some(*spec),
            lattice: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub index: usize,
    /// Position after parabolic refinement through the three neighbouring samples.
    pub x: f64,
    pub value: f64,
}

/// Interior local extrema by three-point comparison. On a plateau the
/// extremum is assigned to the sample with the smaller x.
pub fn find_extrema(xs: &[f64], values: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    if values.len() < 3 {
        return out;
    }
    for j in 1..values.len() - 1 {
        let (a, b, c) = (values[j - 1], values[j], values[j + 1]);
        let kind = if b > a && b >= c {
            ExtremumKind::Max
        } else if b < a && b <= c {
            ExtremumKind::Min
        } else {
            continue;
        };
        let curvature = a - 2.0 * b + c;
        let (shift, value) = if curvature != 0.0 {
            let s = 0.5 * (a - c) / curvature;
            (s, b - 0.25 * (a - c) * s)
        } else {
            (0.0, b)
        };
        let h = xs[j + 1] - xs[j];
        out.push(Extremum {
            kind,
            index: j,
            x: xs[j] + shift * h,
            value,
        });
    }
    out
}

/// Mean contrast (I_max − I_min)/(I_max + I_min) over adjacent max/min pairs
/// whose positions fall inside [center − half_width, center + half_width].
/// Returns 0 when the window holds no such pair.
pub fn windowed_visibility(extrema: &[Extremum], center: f64, half_width: f64) -> f64 {
    let inside: Vec<&Extremum> = extrema
        .iter()
        .filter(|e| (e.x - center).abs() <= half_width)
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for w in inside.windows(2) {
        if w[0].kind == w[1].kind {
            continue;
        }
        let (hi, lo) = if w[0].kind == ExtremumKind::Max {
            (w[0].value, w[1].value)
        } else {
            (w[1].value, w[0].value)
        };
        if hi + lo > 0.0 {
            sum += ((hi - lo) / (hi + lo)).clamp(0.0, 1.0);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeReport {
    pub fringe_spacing: f64,
    pub visibility: f64,
    pub predicted_spacing: f64,
    pub spacing_error: f64,
    pub n_extrema: usize,
    pub n_maxima: usize,
}

pub fn fringe_analysis(scan: &ScreenScan, spec: &SlitSpec) -> Result<FringeReport> {
    let xs = scan.geometry.xs();
    let extrema = find_extrema(&xs, &scan.values);
    let maxima: Vec<f64> = extrema
        .iter()
        .filter(|e| e.kind == ExtremumKind::Max)
        .map(|e| e.x)
        .collect();
    if maxima.len() < 2 {
        return Err(Error::TooFewMaxima { found: maxima.len() });
    }
    let spacing = (maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64;
    let predicted = spec.predicted_spacing(scan.geometry.distance);
    Ok(FringeReport {
        fringe_spacing: spacing,
        visibility: windowed_visibility(&extrema, 0.0, 3.0 * predicted),
        predicted_spacing: predicted,
        spacing_error: (spacing - predicted).abs() / predicted,
        n_extrema: extrema.len(),
        n_maxima: maxima.len(),
    })
}

/// Visibility of any scan in the central ±3 predicted periods.
pub fn scan_visibility(scan: &ScreenScan, spec: &SlitSpec) -> f64 {
    let xs = scan.geometry.xs();
    let predicted = spec.predicted_spacing(scan.geometry.distance);
    windowed_visibility(&find_extrema(&xs, &scan.values), 0.0, 3.0 * predicted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseAveraging {
    /// θ_A, θ_B ∈ {2πj/n}; exact for observables bilinear in the amplitudes.
    Grid { n_phase: usize },
    /// Independent uniform phases from a seeded ChaCha8 stream.
    MonteCarlo { samples: usize, seed: u64 },
}

impl PhaseAveraging {
    pub fn phases(&self) -> Result<Vec<(f64, f64)>> {
        match *self {
            PhaseAveraging::Grid { n_phase } => {
                if n_phase < 2 {
                    return Err(Error::InvalidParameter(format!("n_phase must be >= 2, got {n_phase}")));
                }
                let th = |j: usize| TAU * j as f64 / n_phase as f64;
                Ok((0..n_phase)
                    .flat_map(|a| (0..n_phase).map(move |b| (th(a), th(b))))
                    .collect())
            }
            PhaseAveraging::MonteCarlo { samples, seed } => {
                if samples == 0 {
                    return Err(Error::InvalidParameter("Monte-Carlo samples must be > 0".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..samples)
                    .map(|_| (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)))
                    .collect())
            }
        }
    }
}

/// Averages a scan over source phases. The lattice is required for every
/// observable except INTENSITY, which is evaluated in closed form.
pub fn incoherent_average(
    lattice: Option<&Arc<ModeLattice>>,
    spec: &SlitSpec,
    observable: Observable,
    geom: &ScreenGeometry,
    t: f64,
    averaging: PhaseAveraging,
) -> Result<ScreenScan> {
    let phases = phases_or_err(averaging)?;
    let mut acc: Option<ScreenScan> = None;
    for &(ta, tb) in &phases {
        let s = spec.with_amplitudes(
            Amplitude::new(spec.source_a.amplitude.magnitude, ta)?,
            Amplitude::new(spec.source_b.amplitude.magnitude, tb)?,
        )?;
        let scan = single_scan(lattice, &s, observable, geom, t)?;
        match acc.as_mut() {
            None => acc = Some(scan),
            Some(a) => {
                a.values.iter_mut().zip(&scan.values).for_each(|(x, y)| *x += y);
                if let (Some(ai), Some(si)) = (a.imag.as_mut(), scan.imag.as_ref()) {
                    ai.iter_mut().zip(si).for_each(|(x, y)| *x += y);
                }
            }
        }
    }
    let mut out = acc.expect("phase list is non-empty");
    let n = phases.len() as f64;
    out.values.iter_mut().for_each(|v| *v /= n);
    if let Some(im) = out.imag.as_mut() {
        im.iter_mut().for_each(|v| *v /= n);
    }
    out.metadata.label = format!("incoherent average over {} phase pairs", phases.len());
    out.metadata.slit = Some(*spec);
    Ok(out)
}

fn phases_or_err(averaging: PhaseAveraging) -> Result<Vec<(f64, f64)>> {
    averaging.phases()
}

fn single_scan(
    lattice: Option<&Arc<ModeLattice>>,
    spec: &SlitSpec,
    observable: Observable,
    geom: &ScreenGeometry,
    t: f64,
) -> Result<ScreenScan> {
    if observable == Observable::Intensity {
        return analytic_scan(spec, geom, t, 0.0);
    }
    let lattice = lattice.ok_or_else(|| Error::InvalidParameter(format!("{} needs a lattice", observable.id())))?;
    geom.check_placement(Some(lattice.spec()), Some(spec))?;
    let state = build_double_slit_state(lattice, spec, BuildOptions::default());
    scan_screen(&state, geom, observable, t)
}

/// Sum of the single-source scans, the target of incoherent averaging.
pub fn single_source_sum(
    lattice: Option<&Arc<ModeLattice>>,
    spec: &SlitSpec,
    observable: Observable,
    geom: &ScreenGeometry,
    t: f64,
) -> Result<ScreenScan> {
    let only_a = spec.with_amplitudes(spec.source_a.amplitude, Amplitude::zero())?;
    let only_b = spec.with_amplitudes(Amplitude::zero(), spec.source_b.amplitude)?;
    let mut a = single_scan(lattice, &only_a, observable, geom, t)?;
    let b = single_scan(lattice, &only_b, observable, geom, t)?;
    a.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x += y);
    a.metadata.label = "single-source sum".into();
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapPoint {
    pub d: f64,
    pub kd: f64,
    /// ⟨B;k|A;k⟩ / ⟨A;k|A;k⟩
    pub ratio: Option<Complex64>,
    pub sinc: f64,
    pub error: Option<String>,
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

pub fn overlap_curve(template: &SlitSpec, d_values: &[f64], lattice: &Arc<ModeLattice>) -> Vec<OverlapPoint> {
    d_values
        .iter()
        .map(|&d| {
            let kd = template.wavenumber * d;
            let point = |ratio, error| OverlapPoint {
                d,
                kd,
                ratio,
                sinc: sinc(kd),
                error,
            };
            let spec = match template
                .with_separation(d)
                .and_then(|s| s.validate_for(lattice.spec()).map(|_| s))
            {
                Ok(s) => s,
                Err(e) => return point(None, Some(e.to_string())),
            };
            let a = build_single_slit_state(lattice, &spec, Which::A, BuildOptions::default());
            let b = build_single_slit_state(lattice, &spec, Which::B, BuildOptions::default());
            let norm = a.coefficient_norm_sqr();
            if norm == 0.0 {
                return point(None, Some("source A has zero amplitude".into()));
            }
            match state_overlap(&a, &b) {
                Ok(ov) => point(Some(ov / norm), None),
                Err(e) => point(None, Some(e.to_string())),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionPoint {
    pub cutoff: u32,
    /// Relative L² error against the regularized field F^DS(k+iε)/√(2ω_k).
    pub l2_error: f64,
    /// Same against the undamped field, for reference.
    pub undamped_l2_error: f64,
}

pub fn reconstruction_error(state: &QuantumState, spec: &SlitSpec, patch: &ScreenPatch, t: f64) -> Result<ReconstructionPoint> {
    let points = patch.points();
    check_points(&points, Some(state.lattice().spec()), Some(spec))?;
    let eps = state.lattice().spec().epsilon;
    let scale = 1.0 / (2.0 * spec.omega_k).sqrt();
    let jets = state.evaluator(t).jets(&points);
    let (mut num, mut den, mut num0, mut den0) = (0.0, 0.0, 0.0, 0.0);
    for (p, jet) in points.iter().zip(&jets) {
        let damped = spec.damped_field(Which::DoubleSlit, *p, t, eps)? * scale;
        let bare = spec.field(Which::DoubleSlit, *p, t)? * scale;
        num += (jet.value - damped).norm_sqr();
        den += damped.norm_sqr();
        num0 += (jet.value - bare).norm_sqr();
        den0 += bare.norm_sqr();
    }
    Ok(ReconstructionPoint {
        cutoff: state.lattice().spec().cutoff,
        l2_error: (num / den).sqrt(),
        undamped_l2_error: (num0 / den0).sqrt(),
    })
}

/// Rebuilds the lattice at each cutoff (box, mass and ε held fixed).
pub fn reconstruction_sweep(
    base: &LatticeSpec,
    cutoffs: &[u32],
    spec: &SlitSpec,
    patch: &ScreenPatch,
    t: f64,
) -> Result<Vec<ReconstructionPoint>> {
    cutoffs
        .iter()
        .map(|&n| {
            let lattice = Arc::new(build_lattice(LatticeSpec { cutoff: n, ..*base })?);
            let state = build_double_slit_state(&lattice, spec, BuildOptions::default());
            reconstruction_error(&state, spec, patch, t)
        })
        .collect()
}

/// Least-squares slope and prefactor of log y against log x.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter("power-law fit needs >= 2 paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}
