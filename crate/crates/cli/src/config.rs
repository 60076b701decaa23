//! Strict JSON run configuration.

use std::fmt;
use std::path::Path;

use fockslit_core::experiment::PhaseAveraging;
use fockslit_core::sources::OracleGrid;
use fockslit_core::{Amplitude, Dispersion, LatticeSpec, Observable, ScreenGeometry, ScreenPatch, SlitSpec, StateKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub box_length: f64,
    pub cutoff: u32,
    pub mass: f64,
    /// Defaults to two lattice spacings, 4π/L.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitConfig {
    pub d: f64,
    pub k: f64,
    pub a_abs: f64,
    pub theta_a: f64,
    pub b_abs: f64,
    pub theta_b: f64,
    #[serde(default)]
    pub dispersion: Dispersion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenConfig {
    pub distance: f64,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default)]
    pub y: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Reconstruct,
    Scan,
    Fringes,
    Incoherent,
    OverlapSweep,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FringeSource {
    #[default]
    Analytic,
    Lattice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

fn default_observable() -> Observable {
    Observable::Current
}

fn default_kind() -> StateKind {
    StateKind::OneParticle
}

fn default_n_phase() -> usize {
    4
}

fn default_orthonormality_cutoff() -> u32 {
    2
}

/// Experiment-specific knobs. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default = "default_observable")]
    pub observable: Observable,
    #[serde(default)]
    pub time: f64,
    #[serde(default = "default_kind")]
    pub state_kind: StateKind,
    #[serde(default)]
    pub normalize: bool,
    #[serde(default = "default_n_phase")]
    pub n_phase: usize,
    /// When set, phases are drawn at random from `seed` instead of the uniform grid.
    #[serde(default)]
    pub monte_carlo_samples: Option<usize>,
    #[serde(default)]
    pub d_values: Vec<f64>,
    #[serde(default)]
    pub cutoffs: Vec<u32>,
    #[serde(default)]
    pub patch: Option<PatchConfig>,
    #[serde(default)]
    pub oracle_points: Option<usize>,
    #[serde(default = "default_orthonormality_cutoff")]
    pub orthonormality_cutoff: u32,
    #[serde(default)]
    pub fringe_source: FringeSource,
}

impl Default for Options {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all option fields have defaults")
    }
}

fn default_output() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub slit: SlitConfig,
    pub experiment: Experiment,
    pub screen: ScreenConfig,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: Options,
}

/// A problem found while loading, anchored to a line of the source text when possible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

/// Core objects derived from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub lattice: LatticeSpec,
    pub slit: SlitSpec,
    pub screen: ScreenGeometry,
    pub patch: ScreenPatch,
    pub averaging: PhaseAveraging,
    pub oracle: OracleGrid,
}

#[derive(Deserialize)]
struct ManifestEnvelope {
    config: RunConfig,
    #[allow(dead_code)]
    #[serde(flatten)]
    rest: serde_json::Map<String, serde_json::Value>,
}

/// Parses a config, or the `config` member of an emitted manifest.
pub fn parse(text: &str) -> Result<RunConfig, Vec<Diagnostic>> {
    match serde_json::from_str::<RunConfig>(text) {
        Ok(c) => Ok(c),
        Err(e) => {
            let is_manifest = serde_json::from_str::<serde_json::Value>(text)
                .ok()
                .and_then(|v| v.get("config").cloned())
                .is_some();
            if is_manifest {
                if let Ok(m) = serde_json::from_str::<ManifestEnvelope>(text) {
                    return Ok(m.config);
                }
            }
            Err(vec![Diagnostic {
                path: "<document>".into(),
                line: Some(e.line()),
                message: e.to_string(),
            }])
        }
    }
}

pub fn load(path: &Path) -> Result<(RunConfig, String), Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Diagnostic {
            path: path.display().to_string(),
            line: None,
            message: format!("cannot read config: {e}"),
        }]
    })?;
    let cfg = parse(&text)?;
    Ok((cfg, text))
}

/// Line of `"key"` searched after the line holding its parent key.
fn locate(text: &str, path: &str) -> Option<usize> {
    let mut from = 0;
    for key in path.split('.') {
        let needle = format!("\"{key}\"");
        from += text[from..].find(&needle)?;
    }
    Some(text[..from].matches('\n').count() + 1)
}

impl RunConfig {
    pub fn epsilon(&self) -> f64 {
        self.lattice
            .epsilon
            .unwrap_or_else(|| LatticeSpec::default_epsilon(self.lattice.box_length))
    }

    /// Closed-form experiments never touch the box, so the screen may lie outside it.
    pub fn uses_lattice_geometry(&self) -> bool {
        match self.experiment {
            Experiment::Fringes => self.options.fringe_source == FringeSource::Lattice,
            Experiment::Scan | Experiment::Incoherent => self.options.observable != Observable::Intensity,
            _ => true,
        }
    }

    /// Checks every invariant. `text` is the source used to anchor messages.
    pub fn resolve(&self, text: Option<&str>) -> Result<Resolved, Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let mut push = |path: &str, message: String| {
            diags.push(Diagnostic {
                path: path.into(),
                line: text.and_then(|t| locate(t, path)),
                message,
            })
        };

        let lc = &self.lattice;
        let lattice = LatticeSpec {
            box_length: lc.box_length,
            cutoff: lc.cutoff,
            mass: lc.mass,
            epsilon: self.epsilon(),
        };
        if !(lc.box_length.is_finite() && lc.box_length > 0.0) {
            push("lattice.box_length", format!("box_length L must be > 0, got {}", lc.box_length));
        }
        if lc.cutoff < 1 {
            push("lattice.cutoff", "cutoff N must be >= 1".into());
        }
        if !(lc.mass.is_finite() && lc.mass >= 0.0) {
            push("lattice.mass", format!("mass must be >= 0, got {}", lc.mass));
        }
        if !(lattice.epsilon.is_finite() && lattice.epsilon > 0.0) {
            push("lattice.epsilon", format!("epsilon must be > 0, got {}", lattice.epsilon));
        }

        let sc = &self.slit;
        let slit = match Amplitude::new(sc.a_abs, sc.theta_a)
            .and_then(|a| Amplitude::new(sc.b_abs, sc.theta_b).map(|b| (a, b)))
            .and_then(|(a, b)| SlitSpec::new(sc.d, sc.k, lc.mass.max(0.0), a, b))
            .and_then(|s| s.with_dispersion(sc.dispersion))
        {
            Ok(s) => Some(s),
            Err(e) => {
                let field = if !(sc.d > 0.0) {
                    "slit.d"
                } else if !(sc.k > 0.0) {
                    "slit.k"
                } else if sc.dispersion == Dispersion::NonRelativistic {
                    "slit.dispersion"
                } else if !(sc.a_abs >= 0.0) {
                    "slit.a_abs"
                } else {
                    "slit.b_abs"
                };
                push(field, e.to_string());
                None
            }
        };
        let lattice_ok = lattice.validate().is_ok();
        let slit = slit.and_then(|s| {
            if lattice_ok && self.uses_lattice_geometry() && sc.d > 0.5 * lc.box_length {
                push(
                    "slit.d",
                    format!(
                        "geometry: slit separation d = {} violates d <= L/2 = {} (both sources must lie inside the box)",
                        sc.d,
                        0.5 * lc.box_length
                    ),
                );
                return None;
            }
            if lattice_ok && self.uses_lattice_geometry() {
                s.bind_to_lattice(&lattice).ok()
            } else {
                Some(s)
            }
        });

        let scr = &self.screen;
        let screen = match ScreenGeometry::new(scr.distance, scr.x_min, scr.x_max, scr.y, scr.samples) {
            Ok(g) => {
                let boxed = (lattice_ok && self.uses_lattice_geometry()).then_some(&lattice);
                if let Err(e) = g.check_placement(boxed, slit.as_ref()) {
                    push("screen.distance", format!("geometry: {e}"));
                }
                Some(g)
            }
            Err(e) => {
                let field = if !(scr.distance > 0.0) {
                    "screen.distance"
                } else if scr.samples < 16 || scr.samples % 2 == 0 {
                    "screen.samples"
                } else {
                    "screen.x_min"
                };
                push(field, e.to_string());
                None
            }
        };

        let o = &self.options;
        let patch = match &o.patch {
            None => ScreenPatch {
                distance: scr.distance,
                x_min: scr.x_min,
                x_max: scr.x_max,
                y_min: scr.y,
                y_max: scr.y,
                nx: scr.samples,
                ny: 1,
            },
            Some(p) => {
                if p.nx < 1 || p.ny < 1 || !(p.y_min <= p.y_max) {
                    push("options.patch", "patch needs nx, ny >= 1 and y_min <= y_max".into());
                }
                ScreenPatch {
                    distance: scr.distance,
                    x_min: scr.x_min,
                    x_max: scr.x_max,
                    y_min: p.y_min,
                    y_max: p.y_max,
                    nx: p.nx,
                    ny: p.ny,
                }
            }
        };
        if lattice_ok && self.uses_lattice_geometry() {
            let half = 0.5 * lc.box_length;
            if patch.y_min.abs().max(patch.y_max.abs()) >= half {
                push("options.patch", "geometry: patch leaves the box".into());
            }
        }

        let averaging = match o.monte_carlo_samples {
            Some(samples) => PhaseAveraging::MonteCarlo {
                samples,
                seed: self.seed,
            },
            None => PhaseAveraging::Grid { n_phase: o.n_phase },
        };
        if let Err(e) = averaging.phases() {
            push(
                if o.monte_carlo_samples.is_some() {
                    "options.monte_carlo_samples"
                } else {
                    "options.n_phase"
                },
                e.to_string(),
            );
        }
        if o.cutoffs.contains(&0) {
            push("options.cutoffs", "every cutoff must be >= 1".into());
        }
        if o.d_values.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            push("options.d_values", "every d must be > 0".into());
        }
        if o.orthonormality_cutoff < 1 {
            push("options.orthonormality_cutoff", "must be >= 1".into());
        }
        let oracle = match o.oracle_points {
            Some(points) => OracleGrid {
                points,
                richardson: true,
            },
            None => OracleGrid::for_cutoff(lc.cutoff),
        };
        if self.experiment == Experiment::Validate {
            if let Err(e) = oracle.check(lc.cutoff) {
                push("options.oracle_points", e.to_string());
            }
        }
        if !o.time.is_finite() {
            push("options.time", "time must be finite".into());
        }

        match (diags.is_empty(), slit, screen) {
            (true, Some(slit), Some(screen)) => Ok(Resolved {
                lattice,
                slit,
                screen,
                patch,
                averaging,
                oracle,
            }),
            _ => Err(diags),
        }
    }
}

/// Full check of a config file; an empty list means valid.
pub fn validate_config(path: &Path) -> Vec<Diagnostic> {
    match load(path) {
        Err(d) => d,
        Ok((cfg, text)) => cfg.resolve(Some(&text)).err().unwrap_or_default(),
    }
}
