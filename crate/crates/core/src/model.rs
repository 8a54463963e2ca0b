//! Physical ingredients of the memory-mediated collision model: local
//! Hamiltonians, exchange interactions, collision unitaries and the
//! reference states used by the engine and the tomography.
//!
//! Natural units (ħ = k_B = 1). Composite operators act on S ⊗ M ⊗ A in
//! that order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{exp_hermitian_generator, pauli, ComplexMatrix, NumericsError};

/// Largest inverse temperature accepted; beyond this the Gibbs weights degenerate.
pub const MAX_BETA: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn invalid(name: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

fn require_finite(name: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

/// Angular frequencies of the system, memory and environment spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    pub omega_s: f64,
    pub omega_m: f64,
    pub omega_a: f64,
}

impl SpinParams {
    pub fn resonant(omega: f64) -> Self {
        Self {
            omega_s: omega,
            omega_m: omega,
            omega_a: omega,
        }
    }

    /// System–memory detuning ω_S − ω_M.
    pub fn detuning(&self) -> f64 {
        self.omega_s - self.omega_m
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_finite("omega_s", self.omega_s)?;
        require_finite("omega_m", self.omega_m)?;
        require_finite("omega_a", self.omega_a)
    }
}

impl Default for SpinParams {
    fn default() -> Self {
        Self::resonant(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmInteractionKind {
    /// Heisenberg exchange (g_SM/2)(XX + YY + ZZ).
    Isotropic,
    /// strength·[(1−γ)/2 XX + (1+γ)/2 YY + ZZ].
    Anisotropic,
}

/// Interaction strengths and durations of the two collisions in a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub g_sm: f64,
    pub g_ma: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// Anisotropy of the S–M exchange, only read when `sm_kind` is anisotropic.
    pub gamma: f64,
    pub sm_kind: SmInteractionKind,
    /// Overall multiplier of the anisotropic S–M Hamiltonian.
    pub aniso_strength: f64,
}

impl CouplingParams {
    /// Duration of one full collision step τ₁ + τ₂.
    pub fn step_duration(&self) -> f64 {
        self.tau1 + self.tau2
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [
            ("g_sm", self.g_sm),
            ("g_ma", self.g_ma),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("gamma", self.gamma),
            ("aniso_strength", self.aniso_strength),
        ] {
            require_finite(name, v)?;
        }
        if self.tau1 < 0.0 {
            return Err(invalid("tau1", "must be non-negative"));
        }
        if self.tau2 < 0.0 {
            return Err(invalid("tau2", "must be non-negative"));
        }
        if !(-1.0..=1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("must lie in [-1, 1], got {}", self.gamma)));
        }
        Ok(())
    }

    /// The S–M interaction Hamiltonian on the 4-dimensional S ⊗ M space.
    pub fn sm_hamiltonian(&self) -> ComplexMatrix {
        match self.sm_kind {
            SmInteractionKind::Isotropic => heisenberg_interaction(self.g_sm),
            SmInteractionKind::Anisotropic => {
                anisotropic_sm_interaction(self.gamma, self.aniso_strength)
            }
        }
    }
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            g_sm: 0.2,
            g_ma: 0.2,
            tau1: 0.2,
            tau2: 0.2,
            gamma: 0.0,
            sm_kind: SmInteractionKind::Isotropic,
            aniso_strength: 1.0,
        }
    }
}

/// Inverse temperature of the memory and environment spins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ThermalSpec {
    beta: f64,
}

impl ThermalSpec {
    pub fn new(beta: f64) -> Result<Self, ModelError> {
        require_finite("beta", beta)?;
        if beta < 0.0 {
            return Err(invalid("beta", format!("must be non-negative, got {beta}")));
        }
        if beta > MAX_BETA {
            return Err(invalid("beta", format!("must not exceed {MAX_BETA}, got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for ThermalSpec {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

impl TryFrom<f64> for ThermalSpec {
    type Error = ModelError;

    fn try_from(beta: f64) -> Result<Self, ModelError> {
        Self::new(beta)
    }
}

impl From<ThermalSpec> for f64 {
    fn from(t: ThermalSpec) -> f64 {
        t.beta
    }
}

/// (ω/2)·σ_z.
pub fn local_hamiltonian(omega: f64) -> ComplexMatrix {
    pauli::z().scale_real(omega / 2.0)
}

fn pauli_pairs() -> [ComplexMatrix; 3] {
    let [x, y, z] = pauli::xyz();
    [x.kron(&x), y.kron(&y), z.kron(&z)]
}

/// (g/2)(σ_x⊗σ_x + σ_y⊗σ_y + σ_z⊗σ_z).
pub fn heisenberg_interaction(g: f64) -> ComplexMatrix {
    let [xx, yy, zz] = pauli_pairs();
    (&(&xx + &yy) + &zz).scale_real(g / 2.0)
}

/// strength·[(1−γ)/2 σ_x⊗σ_x + (1+γ)/2 σ_y⊗σ_y + σ_z⊗σ_z].
pub fn anisotropic_sm_interaction(gamma: f64, strength: f64) -> ComplexMatrix {
    let [xx, yy, zz] = pauli_pairs();
    let h = &(&xx.scale_real((1.0 - gamma) / 2.0) + &yy.scale_real((1.0 + gamma) / 2.0)) + &zz;
    h.scale_real(strength)
}

/// H_S + H_M + H_A on S ⊗ M ⊗ A.
pub fn free_hamiltonian(spins: &SpinParams) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    let hs = local_hamiltonian(spins.omega_s).kron(&id).kron(&id);
    let hm = id.kron(&local_hamiltonian(spins.omega_m)).kron(&id);
    let ha = id.kron(&id).kron(&local_hamiltonian(spins.omega_a));
    &(&hs + &hm) + &ha
}

/// The pair of 8×8 unitaries applied in each collision step.
#[derive(Debug, Clone)]
pub struct CollisionUnitaries {
    /// exp(−i(H₀ + H_SM ⊗ I_A)τ₁)
    pub sm: ComplexMatrix,
    /// exp(−i(H₀ + I_S ⊗ H_MA)τ₂)
    pub ma: ComplexMatrix,
}

pub fn collision_unitaries(
    spins: &SpinParams,
    couplings: &CouplingParams,
) -> Result<CollisionUnitaries, ModelError> {
    spins.validate()?;
    couplings.validate()?;
    let id = ComplexMatrix::identity(2);
    let h0 = free_hamiltonian(spins);
    let h_sm = &h0 + &couplings.sm_hamiltonian().kron(&id);
    let h_ma = &h0 + &id.kron(&heisenberg_interaction(couplings.g_ma));
    Ok(CollisionUnitaries {
        sm: exp_hermitian_generator(&h_sm, couplings.tau1)?,
        ma: exp_hermitian_generator(&h_ma, couplings.tau2)?,
    })
}

/// Gibbs populations (p₀, p₁) of (ω/2)σ_z at inverse temperature β.
pub fn thermal_populations(spec: &ThermalSpec, omega: f64) -> (f64, f64) {
    let x = spec.beta * omega;
    // logistic form avoids overflow for large β·ω
    let p0 = 1.0 / (1.0 + x.exp());
    let p1 = 1.0 / (1.0 + (-x).exp());
    (p0, p1)
}

/// exp(−βH)/Z for H = (ω/2)σ_z.
pub fn thermal_state(spec: &ThermalSpec, omega: f64) -> ComplexMatrix {
    let (p0, p1) = thermal_populations(spec, omega);
    ComplexMatrix::from_real_diag(&[p0, p1])
}

pub const PROBE_LABELS: [&str; 4] = ["P0", "P1", "P+", "PR"];

/// Tomography probes |0⟩⟨0|, |1⟩⟨1|, |+⟩⟨+|, |R⟩⟨R| in that order.
pub fn probe_states() -> [ComplexMatrix; 4] {
    let h = Complex64::new(0.5, 0.0);
    let ih = Complex64::new(0.0, 0.5);
    [
        ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, 0.0]]),
        ComplexMatrix::from_real_rows(&[[0.0, 0.0], [0.0, 1.0]]),
        ComplexMatrix::from_rows(&[[h, h], [h, h]]),
        ComplexMatrix::from_rows(&[[h, -ih], [ih, h]]),
    ]
}

/// Projector onto (|00⟩ + |11⟩)/√2.
pub fn maximally_entangled_state() -> ComplexMatrix {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    ComplexMatrix::outer(&[s, z, z, s])
}
