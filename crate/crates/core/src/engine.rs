//! Discrete-time dynamics of the collision model.
//!
//! Each step lets S collide with M (U_SM), then M with a fresh thermal
//! environment spin A (U_MA); A is traced out after each unitary and the
//! reduced S–M state is carried to the next step.

use thiserror::Error;

use crate::model::{
    collision_unitaries, probe_states, thermal_state, CollisionUnitaries, CouplingParams,
    ModelError, SpinParams, ThermalSpec,
};
use crate::numerics::{hermitian_eig, ComplexMatrix, NumericsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("state invariant violated at collision {step}: {what} (deviation {deviation:e})")]
    InvariantViolation {
        step: usize,
        what: &'static str,
        deviation: f64,
    },

    #[error("numerical failure at collision {step}: {source}")]
    Numerics { step: usize, source: NumericsError },

    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed drift of trace, Hermiticity and positivity of evolved states.
    pub state: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { state: 1e-8 }
    }
}

/// Which of the three density-matrix invariants failed, and by how much.
fn density_violation(rho: &ComplexMatrix, tol: f64) -> Result<Option<(&'static str, f64)>, NumericsError> {
    let herm = rho.hermiticity_error();
    if herm > tol {
        return Ok(Some(("not Hermitian", herm)));
    }
    let tr = (rho.trace() - 1.0).norm();
    if tr > tol {
        return Ok(Some(("trace differs from 1", tr)));
    }
    let min = hermitian_eig(rho)?.min_eigenvalue();
    if min < -tol {
        return Ok(Some(("negative eigenvalue", -min)));
    }
    Ok(None)
}

/// Joint system–memory state ρ_SM (4×4).
#[derive(Debug, Clone, PartialEq)]
pub struct JointState(ComplexMatrix);

impl JointState {
    pub fn new(rho_sm: ComplexMatrix) -> Result<Self, EngineError> {
        if rho_sm.rows() != 4 || rho_sm.cols() != 4 {
            return Err(EngineError::InvalidConfig(format!(
                "joint state must be 4x4, got {}x{}",
                rho_sm.rows(),
                rho_sm.cols()
            )));
        }
        Ok(Self(rho_sm))
    }

    /// ρ_S ⊗ ρ_M.
    pub fn product(system: &ComplexMatrix, memory: &ComplexMatrix) -> Self {
        Self(system.kron(memory))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn system(&self) -> ComplexMatrix {
        self.0.partial_trace(&[2, 2], &[0]).expect("4x4 joint state")
    }

    pub fn memory(&self) -> ComplexMatrix {
        self.0.partial_trace(&[2, 2], &[1]).expect("4x4 joint state")
    }
}

fn trace_out_environment(rho_sma: &ComplexMatrix) -> ComplexMatrix {
    rho_sma.partial_trace(&[2, 2, 2], &[0, 1]).expect("8x8 S⊗M⊗A state")
}

/// One full collision: S–M unitary, discard A, M–A unitary with a fresh A, discard A.
///
/// `step` only labels errors.
pub fn collision_step(
    state: &JointState,
    unitaries: &CollisionUnitaries,
    env_state: &ComplexMatrix,
    tolerances: &Tolerances,
    step: usize,
) -> Result<JointState, EngineError> {
    let after_sm = state.0.kron(env_state).conjugate_by(&unitaries.sm);
    let intermediate = trace_out_environment(&after_sm);
    let after_ma = intermediate.kron(env_state).conjugate_by(&unitaries.ma);
    let next = trace_out_environment(&after_ma);

    if let Some((what, deviation)) = density_violation(&next, tolerances.state)
        .map_err(|source| EngineError::Numerics { step, source })?
    {
        return Err(EngineError::InvariantViolation { step, what, deviation });
    }
    Ok(JointState(next))
}

/// Everything needed to run one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spins: SpinParams,
    pub couplings: CouplingParams,
    pub thermal: ThermalSpec,
    /// Initial system state; the memory starts thermal.
    pub initial_system: ComplexMatrix,
    pub n_max: usize,
    pub tolerances: Tolerances,
    /// Keep ρ_SM at every step in the trajectory.
    pub record_joint: bool,
}

impl Default for RunConfig {
    /// Resonant ω = 1, g = 0.2, τ₁ = τ₂ = 0.2, β = 1, ρ_S = I/2, 1000 collisions.
    fn default() -> Self {
        Self {
            spins: SpinParams::default(),
            couplings: CouplingParams::default(),
            thermal: ThermalSpec::default(),
            initial_system: ComplexMatrix::identity(2).scale_real(0.5),
            n_max: 1000,
            tolerances: Tolerances::default(),
            record_joint: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.spins.validate()?;
        self.couplings.validate()?;
        let rho = &self.initial_system;
        if rho.rows() != 2 || rho.cols() != 2 {
            return Err(EngineError::InvalidConfig("initial system state must be 2x2".into()));
        }
        let violation = density_violation(rho, 1e-10)
            .map_err(|source| EngineError::Numerics { step: 0, source })?;
        if let Some((what, deviation)) = violation {
            return Err(EngineError::InvalidConfig(format!(
                "initial system state is not a density matrix: {what} ({deviation:e})"
            )));
        }
        Ok(())
    }

    pub fn unitaries(&self) -> Result<CollisionUnitaries, EngineError> {
        Ok(collision_unitaries(&self.spins, &self.couplings)?)
    }

    pub fn with_initial_system(&self, rho: ComplexMatrix) -> Self {
        Self {
            initial_system: rho,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// ρ_S^{(n)}
    pub system: ComplexMatrix,
    /// ρ_SM^{(n)}, kept only when requested.
    pub joint: Option<ComplexMatrix>,
}

/// Reduced states after each collision; index 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    /// Number of collisions performed.
    pub fn n_max(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn system(&self, n: usize) -> &ComplexMatrix {
        &self.steps[n].system
    }

    /// Diagonal (p₀, p₁) of ρ_S^{(n)}.
    pub fn populations(&self, n: usize) -> (f64, f64) {
        let rho = self.system(n);
        (rho[(0, 0)].re, rho[(1, 1)].re)
    }
}

/// Runs a trajectory from `initial_system` with precomputed unitaries.
pub fn run_trajectory_with(
    config: &RunConfig,
    unitaries: &CollisionUnitaries,
    initial_system: &ComplexMatrix,
) -> Result<Trajectory, EngineError> {
    let memory = thermal_state(&config.thermal, config.spins.omega_m);
    let mut state = JointState::product(initial_system, &memory);
    let mut steps = Vec::with_capacity(config.n_max + 1);
    let record = |s: &JointState| StepRecord {
        system: s.system(),
        joint: config.record_joint.then(|| s.0.clone()),
    };
    steps.push(record(&state));
    for n in 1..=config.n_max {
        // the environment spin is rebuilt fresh for every collision
        let env = thermal_state(&config.thermal, config.spins.omega_a);
        state = collision_step(&state, unitaries, &env, &config.tolerances, n)?;
        steps.push(record(&state));
    }
    Ok(Trajectory { steps })
}

pub fn run_trajectory(config: &RunConfig) -> Result<Trajectory, EngineError> {
    config.validate()?;
    let unitaries = config.unitaries()?;
    run_trajectory_with(config, &unitaries, &config.initial_system)
}

/// Trajectories of the four tomography probes P₀, P₁, P₊, P_R.
#[derive(Debug, Clone)]
pub struct ProbeBundle {
    pub trajectories: [Trajectory; 4],
}

impl ProbeBundle {
    pub fn n_max(&self) -> usize {
        self.trajectories[0].n_max()
    }

    /// Λ_n applied to each probe.
    pub fn images_at(&self, n: usize) -> [&ComplexMatrix; 4] {
        [0, 1, 2, 3].map(|k| self.trajectories[k].system(n))
    }
}

pub fn run_probe_bundle_with(
    config: &RunConfig,
    unitaries: &CollisionUnitaries,
) -> Result<ProbeBundle, EngineError> {
    let [p0, p1, pp, pr] = probe_states();
    Ok(ProbeBundle {
        trajectories: [
            run_trajectory_with(config, unitaries, &p0)?,
            run_trajectory_with(config, unitaries, &p1)?,
            run_trajectory_with(config, unitaries, &pp)?,
            run_trajectory_with(config, unitaries, &pr)?,
        ],
    })
}

pub fn run_probe_bundle(config: &RunConfig) -> Result<ProbeBundle, EngineError> {
    config.validate()?;
    let unitaries = config.unitaries()?;
    run_probe_bundle_with(config, &unitaries)
}
