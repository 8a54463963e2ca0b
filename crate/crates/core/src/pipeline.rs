//! Full analysis of one configuration: trajectory, process tomography,
//! time-local maps and the per-collision witnesses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_probe_bundle_with, run_trajectory_with, EngineError, RunConfig, Trajectory};
use crate::tomography::{
    affine_to_superoperator, choi, extract_phase_covariant, reconstruct_family, time_local_family,
    AffineBlochMap, TomographyError, DEFAULT_COND_THRESHOLD,
};
use crate::witnesses::{
    avg_energy_change, choi_spectrum, cp_conditions, half_choi_information, kdq_general, lfs_measure,
    nonpositivity, rhp_measure, EnergyBasis, KdqDistribution, WitnessError, WitnessRecord, TOL_POS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Tomography(#[from] TomographyError),

    #[error("witness evaluation failed at collision {step}: {source}")]
    Witness { step: usize, source: WitnessError },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub cond_threshold: f64,
    /// Tolerance on the phase-covariant pattern residual.
    pub pattern_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            cond_threshold: DEFAULT_COND_THRESHOLD,
            pattern_tol: 1e-10,
        }
    }
}

/// Aggregate measures and the collisions where the witnesses switch on and off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_max: usize,
    /// Collisions actually analysed; smaller than `n_max` when a map was singular.
    pub analysed: usize,
    pub i_rhp: f64,
    pub i_lfs: f64,
    pub sum_nq: f64,
    pub first_nq_positive: Option<usize>,
    pub last_nq_positive: Option<usize>,
    /// First collision after `first_nq_positive` with N_q back below threshold.
    pub first_nq_return: Option<usize>,
    pub first_g_positive: Option<usize>,
    pub last_g_positive: Option<usize>,
    pub first_g_return: Option<usize>,
    pub first_di_positive: Option<usize>,
    pub last_di_positive: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    /// Trajectory of the configured initial state.
    pub trajectory: Trajectory,
    /// Λ_n for n = 0..=n_max.
    pub cumulative: Vec<AffineBlochMap>,
    /// Λ_{n,n−1} for n = 1..=analysed.
    pub time_local: Vec<AffineBlochMap>,
    /// I(ρ_LS^{(n)}) for n = 0..=n_max, or up to the first failure.
    pub information: Vec<f64>,
    pub kdq: Vec<KdqDistribution>,
    pub records: Vec<WitnessRecord>,
    pub summary: Summary,
    /// Why the analysis stopped before `n_max`, if it did.
    pub halted: Option<AnalysisError>,
}

/// Contiguous runs [start, end] of collisions whose value exceeds `TOL_POS`.
pub fn positive_windows(values: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, usize)> {
    let mut windows: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<(usize, usize)> = None;
    for (n, v) in values {
        if v > TOL_POS {
            open = Some(match open {
                Some((start, end)) if end + 1 == n => (start, n),
                Some(w) => {
                    windows.push(w);
                    (n, n)
                }
                None => (n, n),
            });
        } else if let Some(w) = open.take() {
            windows.push(w);
        }
    }
    windows.extend(open);
    windows
}

fn first_after(records: &[WitnessRecord], start: Option<usize>, below: impl Fn(&WitnessRecord) -> bool) -> Option<usize> {
    let start = start?;
    records.iter().find(|r| r.n > start && below(r)).map(|r| r.n)
}

pub fn summarize(n_max: usize, records: &[WitnessRecord]) -> Summary {
    let positive = |f: fn(&WitnessRecord) -> f64| {
        let hits: Vec<usize> = records.iter().filter(|r| f(r) > TOL_POS).map(|r| r.n).collect();
        (hits.first().copied(), hits.last().copied())
    };
    let (first_nq, last_nq) = positive(|r| r.n_q);
    let (first_g, last_g) = positive(|r| r.g_n);
    let (first_di, last_di) = positive(|r| r.delta_i);
    let g: Vec<f64> = records.iter().map(|r| r.g_n).collect();
    let di: Vec<f64> = records.iter().map(|r| r.delta_i).collect();
    Summary {
        n_max,
        analysed: records.len(),
        i_rhp: rhp_measure(&g),
        i_lfs: lfs_measure(&di),
        sum_nq: records.iter().fold(0.0, |acc, r| acc + r.n_q),
        first_nq_positive: first_nq,
        last_nq_positive: last_nq,
        first_nq_return: first_after(records, first_nq, |r| r.n_q <= TOL_POS),
        first_g_positive: first_g,
        last_g_positive: last_g,
        first_g_return: first_after(records, first_g, |r| r.g_n <= TOL_POS),
        first_di_positive: first_di,
        last_di_positive: last_di,
    }
}

/// Runs the engine for the configured state and the four probes, then
/// evaluates every witness collision by collision.
///
/// Engine failures are returned as errors. A singular map or a failed
/// witness evaluation stops the analysis at that collision; everything
/// computed before it is kept and the cause is stored in `halted`.
pub fn analyze(config: &RunConfig, options: &AnalysisOptions) -> Result<Analysis, AnalysisError> {
    config.validate()?;
    let unitaries = config.unitaries()?;
    let trajectory = run_trajectory_with(config, &unitaries, &config.initial_system)?;
    let bundle = run_probe_bundle_with(config, &unitaries)?;
    let cumulative = reconstruct_family(&bundle);
    let (time_local, singular) = time_local_family(&cumulative, options.cond_threshold);
    let mut halted = singular.map(AnalysisError::from);

    let mut information = Vec::with_capacity(cumulative.len());
    for (n, map) in cumulative.iter().enumerate() {
        match half_choi_information(&choi(&affine_to_superoperator(map)), n) {
            Ok(i) => information.push(i),
            Err(source) => {
                if n <= time_local.len() {
                    halted = Some(AnalysisError::Witness { step: n, source });
                }
                break;
            }
        }
    }

    let basis = EnergyBasis::new(config.spins.omega_s);
    let mut records = Vec::with_capacity(time_local.len());
    let mut kdq = Vec::with_capacity(time_local.len());
    for (k, map) in time_local.iter().enumerate() {
        let n = k + 1;
        if n >= information.len() {
            break;
        }
        let sop = affine_to_superoperator(map);
        let entries = extract_phase_covariant(&sop, options.pattern_tol);
        let spectrum = match choi_spectrum(&choi(&sop)) {
            Ok(s) => s,
            Err(source) => {
                halted = Some(AnalysisError::Witness { step: n, source });
                break;
            }
        };
        let rho_pre = trajectory.system(n - 1);
        let (p0, p1) = trajectory.populations(n - 1);
        let dist = kdq_general(&sop, rho_pre, &basis);
        let (_, margins) = cp_conditions(&entries);
        records.push(WitnessRecord {
            n,
            p0,
            p1,
            n_q: nonpositivity(&dist),
            g_n: spectrum.trace_norm / 2.0 - 1.0,
            delta_i: information[n] - information[n - 1],
            avg_de: avg_energy_change(&entries, p0, p1, config.spins.omega_s),
            a: entries.a,
            b: entries.b,
            c_re: entries.c.re,
            c_im: entries.c.im,
            d_re: entries.d.re,
            d_im: entries.d.im,
            c_abs2_margin: margins.c_margin,
            d_abs2_margin: margins.d_margin,
            choi_min_eig: spectrum.min_eigenvalue,
            residual: entries.off_pattern_residual,
        });
        kdq.push(dist);
    }

    let summary = summarize(config.n_max, &records);
    Ok(Analysis {
        trajectory,
        cumulative,
        time_local,
        information,
        kdq,
        records,
        summary,
        halted,
    })
}
