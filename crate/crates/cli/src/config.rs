//! Experiment configuration: a `key = value` text file plus command-line
//! overrides layered on top of the reference parameters.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use memcoll::model::MAX_BETA;
use memcoll::{RunConfig, SmInteractionKind, ThermalSpec};
use thiserror::Error;

pub const DEFAULT_GRID_POINTS: usize = 101;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing key in `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },

    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn invalid(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SingleRun,
    DetuningSweep,
    AnisotropySweep,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SingleRun => "single_run",
            ExperimentKind::DetuningSweep => "detuning_sweep",
            ExperimentKind::AnisotropySweep => "anisotropy_sweep",
        }
    }

    pub fn is_sweep(self) -> bool {
        self != ExperimentKind::SingleRun
    }

    /// Default (min, max) of the sweep variable.
    pub fn default_range(self) -> (f64, f64) {
        match self {
            ExperimentKind::AnisotropySweep => (-1.0, 1.0),
            _ => (-0.5, 0.5),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single_run" => Ok(ExperimentKind::SingleRun),
            "detuning_sweep" => Ok(ExperimentKind::DetuningSweep),
            "anisotropy_sweep" => Ok(ExperimentKind::AnisotropySweep),
            other => Err(format!(
                "unknown kind `{other}` (expected single_run, detuning_sweep or anisotropy_sweep)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Parses a comma-separated subset of {csv, json}.
pub fn parse_formats(s: &str) -> Result<Vec<OutputFormat>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let f = match part {
            "csv" => OutputFormat::Csv,
            "json" => OutputFormat::Json,
            other => return Err(format!("unknown format `{other}`")),
        };
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err("at least one of csv, json is required".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub base: RunConfig,
    /// Sweep values; empty for single runs.
    pub grid: Vec<f64>,
    /// Set only when the file or an override names it.
    pub output_dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
}

impl ExperimentSpec {
    pub fn wants(&self, format: OutputFormat) -> bool {
        self.formats.contains(&format)
    }

    /// `--out` beats the configuration, which beats the environment.
    pub fn resolve_output_dir(&self, flag: Option<&Path>, env: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .or_else(|| env.map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from("memcoll-out"))
    }

    /// Run configuration for one grid value of a sweep.
    pub fn point_config(&self, value: f64) -> RunConfig {
        let mut config = self.base.clone();
        match self.kind {
            ExperimentKind::SingleRun => {}
            ExperimentKind::DetuningSweep => config.spins.omega_s = config.spins.omega_m + value,
            ExperimentKind::AnisotropySweep => {
                config.couplings.sm_kind = SmInteractionKind::Anisotropic;
                config.couplings.gamma = value;
            }
        }
        config
    }
}

/// `points` uniformly spaced values from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![min];
    }
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}

fn parse_number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| invalid(key, e))
}

fn parse_finite(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_number(key, value)?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

#[derive(Default)]
struct Overlay {
    kind: Option<ExperimentKind>,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: Option<usize>,
    output_dir: Option<PathBuf>,
    formats: Option<Vec<OutputFormat>>,
}

fn apply(key: &str, value: &str, base: &mut RunConfig, overlay: &mut Overlay) -> Result<(), ConfigError> {
    match key {
        "omega_s" => base.spins.omega_s = parse_finite(key, value)?,
        "omega_m" => base.spins.omega_m = parse_finite(key, value)?,
        "omega_a" => base.spins.omega_a = parse_finite(key, value)?,
        "g_sm" => base.couplings.g_sm = parse_finite(key, value)?,
        "g_ma" => base.couplings.g_ma = parse_finite(key, value)?,
        "tau1" => base.couplings.tau1 = parse_finite(key, value)?,
        "tau2" => base.couplings.tau2 = parse_finite(key, value)?,
        "gamma" => base.couplings.gamma = parse_finite(key, value)?,
        "aniso_strength" => base.couplings.aniso_strength = parse_finite(key, value)?,
        "sm_interaction" => {
            base.couplings.sm_kind = match value {
                "isotropic" => SmInteractionKind::Isotropic,
                "anisotropic" => SmInteractionKind::Anisotropic,
                other => return Err(invalid(key, format!("expected isotropic or anisotropic, got `{other}`"))),
            }
        }
        "beta" => {
            let beta: f64 = parse_number(key, value)?;
            base.thermal = ThermalSpec::new(beta)
                .map_err(|_| invalid(key, format!("must be finite and in [0, {MAX_BETA}]")))?;
        }
        "n_max" => base.n_max = parse_number(key, value)?,
        "kind" => overlay.kind = Some(value.parse().map_err(|e: String| invalid(key, e))?),
        "grid_min" => overlay.grid_min = Some(parse_finite(key, value)?),
        "grid_max" => overlay.grid_max = Some(parse_finite(key, value)?),
        "grid_points" => {
            let n: usize = parse_number(key, value)?;
            if n == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
            overlay.grid_points = Some(n);
        }
        "output_dir" => overlay.output_dir = Some(PathBuf::from(value)),
        "formats" => overlay.formats = Some(parse_formats(value).map_err(|e| invalid(key, e))?),
        other => return Err(invalid(other, "unknown key")),
    }
    Ok(())
}

fn split_pair(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    Some((k.trim(), v.trim()))
}

/// Builds a spec from configuration text and `key=value` overrides.
///
/// `default_kind` applies when neither source sets `kind`.
pub fn parse_config(
    text: &str,
    overrides: &[String],
    default_kind: ExperimentKind,
) -> Result<ExperimentSpec, ConfigError> {
    let mut base = RunConfig::default();
    let mut overlay = Overlay::default();

    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = split_pair(line).ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        if k.is_empty() {
            return Err(ConfigError::MissingKey(raw.to_string()));
        }
        apply(k, v, &mut base, &mut overlay)?;
    }
    for o in overrides {
        let (k, v) = split_pair(o).ok_or_else(|| invalid(o, "override must be key=value"))?;
        if k.is_empty() {
            return Err(ConfigError::MissingKey(o.clone()));
        }
        apply(k, v, &mut base, &mut overlay)?;
    }

    base.validate().map_err(|e| invalid("config", e))?;

    let kind = overlay.kind.unwrap_or(default_kind);
    let grid = if kind.is_sweep() {
        let (lo, hi) = kind.default_range();
        let min = overlay.grid_min.unwrap_or(lo);
        let max = overlay.grid_max.unwrap_or(hi);
        if min > max {
            return Err(invalid("grid_min", format!("{min} exceeds grid_max {max}")));
        }
        if kind == ExperimentKind::AnisotropySweep && (min < -1.0 || max > 1.0) {
            return Err(invalid("grid_min", "anisotropy grid must lie within [-1, 1]"));
        }
        uniform_grid(min, max, overlay.grid_points.unwrap_or(DEFAULT_GRID_POINTS))
    } else {
        Vec::new()
    };
    let spec = ExperimentSpec {
        kind,
        base,
        grid,
        output_dir: overlay.output_dir,
        formats: overlay.formats.unwrap_or_else(|| vec![OutputFormat::Csv, OutputFormat::Json]),
    };
    for &value in &spec.grid {
        spec.point_config(value)
            .validate()
            .map_err(|e| invalid("grid", format!("grid value {value}: {e}")))?;
    }
    Ok(spec)
}

/// Reads `path` (if any) and applies the overrides.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
    default_kind: ExperimentKind,
) -> Result<ExperimentSpec, ConfigError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    parse_config(&text, overrides, default_kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(text: &str, overrides: &[&str]) -> Result<ExperimentSpec, ConfigError> {
        let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        parse_config(text, &o, ExperimentKind::SingleRun)
    }

    #[test]
    fn empty_file_gives_reference_parameters() {
        let spec = single("", &[]).unwrap();
        assert_eq!(spec.kind, ExperimentKind::SingleRun);
        assert_eq!(spec.base, RunConfig::default());
        assert!(spec.grid.is_empty());
        assert_eq!(spec.formats, vec![OutputFormat::Csv, OutputFormat::Json]);
        assert_eq!(spec.output_dir, None);
    }

    #[test]
    fn negative_beta_is_invalid() {
        let err = single("beta = -1", &[]).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { ref key, .. } if key == "beta"));
    }

    #[test]
    fn override_wins_over_file() {
        let spec = single("n_max = 500\ng_sm = 0.3 # comment", &["n_max=10"]).unwrap();
        assert_eq!(spec.base.n_max, 10);
        assert_eq!(spec.base.couplings.g_sm, 0.3);
    }

    #[test]
    fn syntax_and_key_errors() {
        assert!(matches!(single("\n\nn_max 10", &[]), Err(ConfigError::Syntax { line: 3, .. })));
        assert!(matches!(single("= 3", &[]), Err(ConfigError::MissingKey(_))));
        assert!(matches!(single("", &["=3"]), Err(ConfigError::MissingKey(_))));
        assert!(matches!(single("colour = red", &[]), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(single("n_max = -3", &[]), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(single("tau1 = nan", &[]), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(single("formats = xml", &[]), Err(ConfigError::InvalidValue { .. })));
    }

    #[test]
    fn sweep_grids() {
        let spec = parse_config("", &[], ExperimentKind::DetuningSweep).unwrap();
        assert_eq!(spec.grid.len(), 101);
        assert_eq!(spec.grid[0], -0.5);
        assert_eq!(spec.grid[50], 0.0);
        assert_eq!(spec.grid[100], 0.5);

        let spec = single("kind = anisotropy_sweep\ngrid_points = 5", &[]).unwrap();
        assert_eq!(spec.grid, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(single("kind = anisotropy_sweep\ngrid_max = 2", &[]).is_err());
        assert!(single("kind = detuning_sweep\ngrid_min = 1\ngrid_max = 0", &[]).is_err());
        assert!(single("kind = detuning_sweep\ngrid_points = 0", &[]).is_err());
    }

    #[test]
    fn point_configs() {
        let spec = parse_config("omega_m = 2", &[], ExperimentKind::DetuningSweep).unwrap();
        assert_eq!(spec.point_config(-0.25).spins.omega_s, 1.75);
        let spec = parse_config("", &[], ExperimentKind::AnisotropySweep).unwrap();
        let c = spec.point_config(0.5);
        assert_eq!(c.couplings.sm_kind, SmInteractionKind::Anisotropic);
        assert_eq!(c.couplings.gamma, 0.5);
    }

    #[test]
    fn output_dir_precedence() {
        let spec = single("output_dir = from-file", &[]).unwrap();
        let env = Path::new("from-env");
        assert_eq!(spec.resolve_output_dir(Some(Path::new("flag")), Some(env)), PathBuf::from("flag"));
        assert_eq!(spec.resolve_output_dir(None, Some(env)), PathBuf::from("from-file"));
        let bare = single("", &[]).unwrap();
        assert_eq!(bare.resolve_output_dir(None, Some(env)), PathBuf::from("from-env"));
        assert_eq!(bare.resolve_output_dir(None, None), PathBuf::from("memcoll-out"));
    }

    #[test]
    fn formats_parse_and_deduplicate() {
        assert_eq!(parse_formats("json, csv,json").unwrap(), vec![OutputFormat::Json, OutputFormat::Csv]);
        assert!(parse_formats("").is_err());
    }
}
