//! Experiment orchestration and result bundles.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fockslit_core::experiment::{scan_visibility, single_source_sum};
use fockslit_core::lattice::{all_pairs, verify_orthonormality};
use fockslit_core::sources::{closed_form_coefficients, oracle_coefficients};
use fockslit_core::states::{build_coherent_state, build_double_slit_state};
use fockslit_core::{
    analytic_scan, build_lattice, fringe_analysis, incoherent_average, overlap_curve, reconstruction_sweep,
    scan_screen, BuildOptions, LatticeSpec, ModeLattice, Observable, ScreenScan, StateKind, Which,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, FringeSource, Resolved, RunConfig};
use crate::csv::{num, Table};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub rows: usize,
    #[serde(skip)]
    pub contents: String,
}

/// CSV tables plus the run manifest, held in memory until written.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub files: Vec<OutputFile>,
    pub manifest: serde_json::Value,
}

impl ResultBundle {
    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }

    /// Writes every table and `manifest.json`. On failure, files already
    /// written by this call are removed.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        let result = (|| -> std::io::Result<()> {
            std::fs::create_dir_all(dir)?;
            for f in &self.files {
                let p = dir.join(&f.name);
                std::fs::write(&p, f.contents.as_bytes())?;
                written.push(p);
            }
            let p = dir.join("manifest.json");
            let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
            text.push('\n');
            std::fs::write(&p, text)?;
            written.push(p);
            Ok(())
        })();
        match result {
            Ok(()) => Ok(written),
            Err(e) => {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                Err(CliError::Io(e.to_string()))
            }
        }
    }
}

fn table_file(name: &str, t: &Table) -> OutputFile {
    OutputFile {
        name: name.into(),
        rows: t.rows(),
        contents: t.render(),
    }
}

fn scan_table(scan: &ScreenScan) -> Table {
    let with_im = scan.imag.is_some();
    let mut t = if with_im {
        Table::new(&["x", "y", "z", "t", "value", "observable_id", "value_im"])
    } else {
        Table::new(&["x", "y", "z", "t", "value", "observable_id"])
    };
    for (j, p) in scan.geometry.points().iter().enumerate() {
        let mut row = vec![
            num(p[0]),
            num(p[1]),
            num(p[2]),
            num(scan.time),
            num(scan.values[j]),
            scan.observable.id().to_string(),
        ];
        if let Some(im) = &scan.imag {
            row.push(num(im[j]));
        }
        t.row(&row);
    }
    t
}

fn lattice(spec: LatticeSpec) -> Result<Arc<ModeLattice>, CliError> {
    Ok(Arc::new(build_lattice(spec).map_err(CliError::runtime)?))
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<ResultBundle, CliError> {
    let r = cfg.resolve(None).map_err(CliError::Config)?;
    let o = &cfg.options;
    let mut files = Vec::new();
    let mut extra = serde_json::Map::new();

    match cfg.experiment {
        Experiment::Validate => validate_experiment(cfg, &r, &mut files, &mut extra)?,
        Experiment::Reconstruct => {
            let cutoffs = if o.cutoffs.is_empty() {
                vec![r.lattice.cutoff]
            } else {
                o.cutoffs.clone()
            };
            let pts = reconstruction_sweep(&r.lattice, &cutoffs, &r.slit, &r.patch, o.time).map_err(CliError::runtime)?;
            let mut t = Table::new(&["region", "l2_error", "N"]);
            for p in &pts {
                t.row(&[r.patch.label(), num(p.l2_error), p.cutoff.to_string()]);
            }
            files.push(table_file("reconstruction.csv", &t));
            extra.insert("undamped_l2_error".into(), json!(pts.iter().map(|p| p.undamped_l2_error).collect::<Vec<_>>()));
        }
        Experiment::Scan => {
            let scan = if o.observable == Observable::Intensity {
                analytic_scan(&r.slit, &r.screen, o.time, 0.0).map_err(CliError::runtime)?
            } else {
                let lat = lattice(r.lattice)?;
                let opts = BuildOptions { normalize: o.normalize };
                let state = match o.state_kind {
                    StateKind::OneParticle => build_double_slit_state(&lat, &r.slit, opts),
                    StateKind::Coherent => build_coherent_state(&lat, &r.slit, opts),
                };
                scan_screen(&state, &r.screen, o.observable, o.time).map_err(CliError::runtime)?
            };
            files.push(table_file("scan.csv", &scan_table(&scan)));
        }
        Experiment::Fringes => {
            let scan = match o.fringe_source {
                FringeSource::Analytic => analytic_scan(&r.slit, &r.screen, o.time, 0.0),
                FringeSource::Lattice => {
                    let lat = lattice(r.lattice)?;
                    let state = build_double_slit_state(&lat, &r.slit, BuildOptions::default());
                    scan_screen(&state, &r.screen, Observable::Current, o.time)
                }
            }
            .map_err(CliError::runtime)?;
            let rep = fringe_analysis(&scan, &r.slit).map_err(CliError::runtime)?;
            let mut t = Table::new(&["fringe_spacing", "visibility", "predicted_spacing", "spacing_error", "n_extrema"]);
            t.row(&[
                num(rep.fringe_spacing),
                num(rep.visibility),
                num(rep.predicted_spacing),
                num(rep.spacing_error),
                rep.n_extrema.to_string(),
            ]);
            files.push(table_file("scan.csv", &scan_table(&scan)));
            files.push(table_file("fringes.csv", &t));
        }
        Experiment::Incoherent => {
            let lat = if o.observable == Observable::Intensity {
                None
            } else {
                Some(lattice(r.lattice)?)
            };
            let avg = incoherent_average(lat.as_ref(), &r.slit, o.observable, &r.screen, o.time, r.averaging)
                .map_err(CliError::runtime)?;
            let reference = single_source_sum(lat.as_ref(), &r.slit, o.observable, &r.screen, o.time)
                .map_err(CliError::runtime)?;
            let max_dev = avg
                .values
                .iter()
                .zip(&reference.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let scale = reference.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut t = Table::new(&["visibility", "phase_samples", "max_abs_deviation", "max_relative_deviation"]);
            t.row(&[
                num(scan_visibility(&avg, &r.slit)),
                r.averaging.phases().map_err(CliError::runtime)?.len().to_string(),
                num(max_dev),
                num(if scale > 0.0 { max_dev / scale } else { 0.0 }),
            ]);
            files.push(table_file("scan.csv", &scan_table(&avg)));
            files.push(table_file("summary.csv", &t));
        }
        Experiment::OverlapSweep => {
            let lat = lattice(r.lattice)?;
            let d_values = if o.d_values.is_empty() {
                vec![r.slit.separation]
            } else {
                o.d_values.clone()
            };
            let mut t = Table::new(&["d", "kd", "re_ratio", "im_ratio", "sinc", "status"]);
            for p in overlap_curve(&r.slit, &d_values, &lat) {
                let (re, im) = p.ratio.map_or((f64::NAN, f64::NAN), |z| (z.re, z.im));
                let status = p.error.unwrap_or_else(|| "ok".into()).replace(',', ";");
                t.row(&[num(p.d), num(p.kd), num(re), num(im), num(p.sinc), status]);
            }
            files.push(table_file("overlap.csv", &t));
        }
    }

    let lat_spec = r.lattice;
    let manifest = json!({
        "config": cfg,
        "units": "natural units, c = hbar = 1; lengths in the units of box_length",
        "diagnostics": {
            "modes": lat_spec.mode_count(),
            "epsilon": lat_spec.epsilon,
            "epsilon_in_spacings": lat_spec.epsilon / lat_spec.spacing(),
            "shell_index": r.slit.wavenumber / lat_spec.spacing(),
            "box_in_wavelengths": lat_spec.box_length * r.slit.wavenumber / std::f64::consts::TAU,
            "omega_k": r.slit.omega_k,
            "exclusion_radius": r.slit.exclusion_radius,
            "experiment": extra,
        },
        "tolerances": {
            "orthonormality": 1e-10,
            "oracle_relative": 0.02,
            "reconstruction_l2": 0.05,
        },
        "versions": {
            "fockslit": env!("CARGO_PKG_VERSION"),
            "csv_format": "17 significant digits",
        },
        "files": files,
    });
    Ok(ResultBundle { files, manifest })
}

fn validate_experiment(
    cfg: &RunConfig,
    r: &Resolved,
    files: &mut Vec<OutputFile>,
    extra: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<(), CliError> {
    let small = lattice(LatticeSpec {
        cutoff: cfg.options.orthonormality_cutoff,
        ..r.lattice
    })?;
    let rep = verify_orthonormality(&small, &all_pairs(&small)).map_err(CliError::runtime)?;
    let mut t = Table::new(&["N", "pairs", "skipped", "direct", "conjugate", "mixed", "max_deviation"]);
    t.row(&[
        small.spec().cutoff.to_string(),
        rep.pairs.to_string(),
        rep.skipped.to_string(),
        num(rep.direct),
        num(rep.conjugate),
        num(rep.mixed),
        num(rep.max_deviation()),
    ]);
    files.push(table_file("orthonormality.csv", &t));

    let lat = lattice(r.lattice)?;
    let closed = closed_form_coefficients(&lat, &r.slit, Which::DoubleSlit);
    let oracle = oracle_coefficients(&lat, &r.slit, Which::DoubleSlit, &r.oracle).map_err(CliError::runtime)?;
    let k = r.slit.wavenumber;
    let band = 5.0 * r.lattice.epsilon * k;
    let mut shell = Table::new(&["nx", "ny", "nz", "l", "l2_minus_k2", "re_closed", "im_closed", "re_oracle", "im_oracle", "rel_error"]);
    let (mut off_max, mut off_n, mut on_max, mut on_n) = (0.0f64, 0usize, 0.0f64, 0usize);
    for i in 0..lat.len() {
        let m = lat.mode(i);
        if !m.is_active() || closed[i].norm() == 0.0 {
            continue;
        }
        let err = (oracle[i] - closed[i]).norm() / closed[i].norm();
        let gap = m.k_sq() - k * k;
        if gap.abs() > band {
            off_max = off_max.max(err);
            off_n += 1;
        } else {
            on_max = on_max.max(err);
            on_n += 1;
            shell.row(&[
                m.index[0].to_string(),
                m.index[1].to_string(),
                m.index[2].to_string(),
                num(m.k_sq().sqrt()),
                num(gap),
                num(closed[i].re),
                num(closed[i].im),
                num(oracle[i].re),
                num(oracle[i].im),
                num(err),
            ]);
        }
    }
    let mut summary = Table::new(&["class", "modes", "max_rel_error"]);
    summary.row(&["off_shell".into(), off_n.to_string(), num(off_max)]);
    summary.row(&["on_shell".into(), on_n.to_string(), num(on_max)]);
    files.push(table_file("oracle_summary.csv", &summary));
    files.push(table_file("oracle_on_shell.csv", &shell));
    extra.insert("oracle_grid".into(), json!(r.oracle));
    Ok(())
}

/// Runs on a dedicated pool of `threads` workers, or the global pool when `None`.
pub fn execute_with_threads(cfg: &RunConfig, threads: Option<usize>) -> Result<ResultBundle, CliError> {
    match threads {
        None => execute(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| execute(cfg)),
    }
}

/// Loads, executes and writes. `out` overrides the config's output directory.
pub fn run(path: &Path, out: Option<&Path>, threads: Option<usize>) -> Result<(ResultBundle, PathBuf), CliError> {
    let (cfg, text) = crate::config::load(path).map_err(CliError::Config)?;
    cfg.resolve(Some(&text)).map_err(CliError::Config)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output));
    let bundle = execute_with_threads(&cfg, threads)?;
    bundle.write(&dir)?;
    Ok((bundle, dir))
}
