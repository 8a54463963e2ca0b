//! Batch drivers for the memcoll collision model: single runs that emit the
//! per-collision witness table and sweeps over detuning or coupling
//! anisotropy that emit the aggregate measures per grid point.

pub mod config;
pub mod output;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use memcoll::tomography::{write_map_records, MapRecord};
use memcoll::{analyze, AnalysisError, AnalysisOptions, RunConfig, SmInteractionKind, Summary};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, ExperimentKind, ExperimentSpec, OutputFormat};
pub use output::{CollisionRow, SweepPoint};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),

    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("experiment kind {0} is not valid for this command")]
    WrongKind(&'static str),

    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), RunError> {
    let io_err = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

fn create_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn parameters_json(config: &RunConfig) -> Value {
    let sm = match config.couplings.sm_kind {
        SmInteractionKind::Isotropic => "isotropic",
        SmInteractionKind::Anisotropic => "anisotropic",
    };
    json!({
        "omega_s": config.spins.omega_s,
        "omega_m": config.spins.omega_m,
        "omega_a": config.spins.omega_a,
        "g_sm": config.couplings.g_sm,
        "g_ma": config.couplings.g_ma,
        "tau1": config.couplings.tau1,
        "tau2": config.couplings.tau2,
        "beta": config.thermal.beta(),
        "gamma": config.couplings.gamma,
        "aniso_strength": config.couplings.aniso_strength,
        "sm_interaction": sm,
        "n_max": config.n_max,
    })
}

#[derive(Debug)]
pub struct SingleOutcome {
    pub summary: Summary,
    pub rows: Vec<CollisionRow>,
    /// Set when the analysis stopped early; the files hold the partial result.
    pub halted: Option<AnalysisError>,
    pub files: Vec<PathBuf>,
}

/// Runs the full pipeline once and writes collisions.csv, summary.json and
/// maps.jsonl (the single-step maps) into `out_dir`.
pub fn run_single(spec: &ExperimentSpec, out_dir: &Path) -> Result<SingleOutcome, RunError> {
    if spec.kind != ExperimentKind::SingleRun {
        return Err(RunError::WrongKind(spec.kind.as_str()));
    }
    let analysis = analyze(&spec.base, &AnalysisOptions::default())?;
    let omega_s = spec.base.spins.omega_s;
    let rows: Vec<CollisionRow> = analysis.records.iter().map(|r| CollisionRow::new(r, omega_s)).collect();

    create_dir(out_dir)?;
    let mut files = Vec::new();
    if spec.wants(OutputFormat::Csv) {
        let path = out_dir.join("collisions.csv");
        write_file(&path, |w| output::write_collisions(w, &rows))?;
        files.push(path);
    }
    if spec.wants(OutputFormat::Json) {
        let doc = json!({
            "schema": output::SUMMARY_SCHEMA,
            "kind": spec.kind.as_str(),
            "parameters": parameters_json(&spec.base),
            "summary": analysis.summary,
            "halted": analysis.halted.as_ref().map(|e| e.to_string()),
        });
        let path = out_dir.join("summary.json");
        write_file(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc)?;
            writeln!(w)
        })?;
        files.push(path);

        let maps: Vec<MapRecord> = analysis
            .time_local
            .iter()
            .enumerate()
            .map(|(k, m)| MapRecord::new(k + 1, m))
            .collect();
        let path = out_dir.join("maps.jsonl");
        write_file(&path, |w| write_map_records(w, &maps))?;
        files.push(path);
    }
    Ok(SingleOutcome {
        summary: analysis.summary,
        rows,
        halted: analysis.halted,
        files,
    })
}

fn sweep_point(spec: &ExperimentSpec, index: usize, value: f64) -> SweepPoint {
    let (summary, error) = match analyze(&spec.point_config(value), &AnalysisOptions::default()) {
        Ok(a) => (Some(a.summary), a.halted.map(|e| e.to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    SweepPoint {
        index,
        value,
        summary,
        error,
    }
}

/// Evaluates every grid point on `workers` threads; the result is ordered
/// by grid index.
pub fn sweep_points(spec: &ExperimentSpec, workers: usize) -> Result<Vec<SweepPoint>, RunError> {
    if !spec.kind.is_sweep() {
        return Err(RunError::WrongKind(spec.kind.as_str()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    Ok(pool.install(|| {
        spec.grid
            .par_iter()
            .enumerate()
            .map(|(i, &v)| sweep_point(spec, i, v))
            .collect()
    }))
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub files: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.failed()).count()
    }
}

/// Runs the sweep and writes sweep.csv and sweep.json into `out_dir`.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: &Path, workers: usize) -> Result<SweepOutcome, RunError> {
    let points = sweep_points(spec, workers)?;
    create_dir(out_dir)?;
    let mut files = Vec::new();
    if spec.wants(OutputFormat::Csv) {
        let path = out_dir.join("sweep.csv");
        write_file(&path, |w| output::write_sweep_csv(w, &points))?;
        files.push(path);
    }
    if spec.wants(OutputFormat::Json) {
        let doc = json!({
            "schema": output::SUMMARY_SCHEMA,
            "kind": spec.kind.as_str(),
            "parameters": parameters_json(&spec.base),
            "points": points.iter().map(SweepPoint::to_json).collect::<Vec<_>>(),
        });
        let path = out_dir.join("sweep.json");
        write_file(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &doc)?;
            writeln!(w)
        })?;
        files.push(path);
    }
    Ok(SweepOutcome { points, files })
}
