//! Non-Markovianity witnesses evaluated per collision: the Kirkwood-Dirac
//! quasiprobabilities of the system's energy change and their
//! non-positivity, complete-positivity conditions of the single-step map,
//! the RHP increments, the LFS mutual-information increments and the
//! average energy change.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{entropy_of_spectrum, hermitian_eig, ComplexMatrix, NumericsError};
use crate::tomography::{ChoiMatrix, PhaseCovariantEntries, SuperOperator};

/// Threshold for declaring N_q, g_n or ΔI strictly positive.
pub const TOL_POS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("populations must be in [0, 1] and sum to 1 (got p0 = {p0}, p1 = {p1})")]
    PopulationNormalization { p0: f64, p1: f64 },

    #[error("system-ancilla state at collision {step} is not a density matrix: {reason}")]
    InvalidBipartiteState { step: usize, reason: String },

    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Eigenbasis of H_S = (ω_S/2)σ_z.
///
/// Outcome index ℓ refers to the computational basis vector |ℓ⟩; its energy
/// follows H_S literally, so |0⟩ carries +ω_S/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBasis {
    pub omega_s: f64,
}

impl EnergyBasis {
    pub fn new(omega_s: f64) -> Self {
        Self { omega_s }
    }

    pub fn energy(&self, level: usize) -> f64 {
        match level {
            0 => self.omega_s / 2.0,
            1 => -self.omega_s / 2.0,
            _ => panic!("qubit has two levels, got {level}"),
        }
    }

    pub fn projector(&self, level: usize) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(2, 2);
        p[(level, level)] = Complex64::new(1.0, 0.0);
        p
    }

    /// u(ℓ_in, ℓ_fin) = E_fin − E_in.
    pub fn energy_changes(&self) -> [[f64; 2]; 2] {
        [0, 1].map(|i| [0, 1].map(|f| self.energy(f) - self.energy(i)))
    }
}

/// Quasiprobabilities q[ℓ_in][ℓ_fin] of the energy change u[ℓ_in][ℓ_fin].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdqDistribution {
    pub q: [[Complex64; 2]; 2],
    pub u: [[f64; 2]; 2],
}

impl KdqDistribution {
    pub fn total(&self) -> Complex64 {
        self.q.iter().flatten().sum()
    }

    /// Σ_fin q[ℓ_in][fin].
    pub fn initial_marginal(&self, level_in: usize) -> Complex64 {
        self.q[level_in][0] + self.q[level_in][1]
    }

    pub fn max_abs_diff(&self, other: &KdqDistribution) -> f64 {
        self.q
            .iter()
            .flatten()
            .zip(other.q.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// q[in][fin] = Tr[Π_fin Λ[Π_in ρ]].
pub fn kdq_general(sop: &SuperOperator, rho_pre: &ComplexMatrix, basis: &EnergyBasis) -> KdqDistribution {
    let mut q = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (l_in, row) in q.iter_mut().enumerate() {
        let image = sop.apply(&(&basis.projector(l_in) * rho_pre));
        for (l_fin, entry) in row.iter_mut().enumerate() {
            *entry = (&basis.projector(l_fin) * &image).trace();
        }
    }
    KdqDistribution {
        q,
        u: basis.energy_changes(),
    }
}

fn check_populations(p0: f64, p1: f64) -> Result<(), WitnessError> {
    let valid = (0.0..=1.0).contains(&p0) && (0.0..=1.0).contains(&p1) && (p0 + p1 - 1.0).abs() <= 1e-9;
    if valid {
        Ok(())
    } else {
        Err(WitnessError::PopulationNormalization { p0, p1 })
    }
}

/// Closed form for phase-covariant maps and a pre-collision state with
/// populations (p₀, p₁): q = {a·p₀, (1−a)p₀; b·p₁, (1−b)p₁}.
pub fn kdq_closed_form(a: f64, b: f64, p0: f64, p1: f64, basis: &EnergyBasis) -> Result<KdqDistribution, WitnessError> {
    check_populations(p0, p1)?;
    let re = |x: f64| Complex64::new(x, 0.0);
    Ok(KdqDistribution {
        q: [[re(a * p0), re((1.0 - a) * p0)], [re(b * p1), re((1.0 - b) * p1)]],
        u: basis.energy_changes(),
    })
}

/// N_q = −1 + Σ|q|, floored at zero against rounding.
pub fn nonpositivity(kdq: &KdqDistribution) -> f64 {
    let s: f64 = kdq.q.iter().flatten().map(|z| z.norm()).sum();
    (s - 1.0).max(0.0)
}

/// Signed slack of each complete-positivity condition; CP iff all are ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpMargins {
    /// min(a, 1 − a)
    pub a_interval: f64,
    /// min(b, 1 − b)
    pub b_interval: f64,
    /// a(1 − b) − |c|²
    pub c_margin: f64,
    /// b(1 − a) − |d|²
    pub d_margin: f64,
}

impl CpMargins {
    pub fn min(&self) -> f64 {
        self.a_interval
            .min(self.b_interval)
            .min(self.c_margin)
            .min(self.d_margin)
    }
}

/// Complete positivity of the phase-covariant map with the given entries.
pub fn cp_conditions(entries: &PhaseCovariantEntries) -> (bool, CpMargins) {
    let (a, b) = (entries.a, entries.b);
    let margins = CpMargins {
        a_interval: a.min(1.0 - a),
        b_interval: b.min(1.0 - b),
        c_margin: a * (1.0 - b) - entries.c.norm_sqr(),
        d_margin: b * (1.0 - a) - entries.d.norm_sqr(),
    };
    (margins.min() >= 0.0, margins)
}

/// Spectral data of a Choi matrix needed per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiSpectrum {
    pub min_eigenvalue: f64,
    pub trace_norm: f64,
}

pub fn choi_spectrum(choi: &ChoiMatrix) -> Result<ChoiSpectrum, WitnessError> {
    let eig = hermitian_eig(choi.matrix())?;
    Ok(ChoiSpectrum {
        min_eigenvalue: eig.min_eigenvalue(),
        trace_norm: eig.eigenvalues.iter().map(|l| l.abs()).sum(),
    })
}

/// g_n = ‖J‖₁/2 − 1, the trace-norm excess of (Λ ⊗ I)[|Ψ⟩⟨Ψ|].
pub fn rhp_increment(choi: &ChoiMatrix) -> Result<f64, WitnessError> {
    Ok(choi_spectrum(choi)?.trace_norm / 2.0 - 1.0)
}

/// Σ_n max(g_n, 0).
pub fn rhp_measure(increments: &[f64]) -> f64 {
    increments.iter().fold(0.0, |acc, g| acc + g.max(0.0))
}

/// ω_S·[(a − 1)p₀ + b·p₁].
pub fn avg_energy_change(entries: &PhaseCovariantEntries, p0: f64, p1: f64, omega_s: f64) -> f64 {
    omega_s * ((entries.a - 1.0) * p0 + entries.b * p1)
}

/// Tr[H_S(Λ[ρ] − ρ)]. Cross-check for [`avg_energy_change`].
pub fn avg_energy_change_trace(sop: &SuperOperator, rho: &ComplexMatrix, omega_s: f64) -> f64 {
    let h = ComplexMatrix::from_real_diag(&[omega_s / 2.0, -omega_s / 2.0]);
    let delta = &sop.apply(rho) - rho;
    (&h * &delta).trace().re
}

/// I(L:S) = S(ρ_L) + S(ρ_S) − S(ρ_LS) in bits.
pub fn qmi(rho_ls: &ComplexMatrix) -> Result<f64, WitnessError> {
    let rho_l = rho_ls.partial_trace(&[2, 2], &[0])?;
    let rho_s = rho_ls.partial_trace(&[2, 2], &[1])?;
    let s = |m: &ComplexMatrix| -> Result<f64, WitnessError> {
        Ok(entropy_of_spectrum(&hermitian_eig(m)?.eigenvalues)?)
    };
    Ok(s(&rho_l)? + s(&rho_s)? - s(rho_ls)?)
}

/// Mutual information along the cumulative maps and its increments.
#[derive(Debug, Clone, PartialEq)]
pub struct LfsSeries {
    /// I(ρ_LS^{(n)}) for n = 0..=n_max.
    pub information: Vec<f64>,
    /// `increments[k] = information[k+1] − information[k]`.
    pub increments: Vec<f64>,
    /// Sum of increments above `TOL_POS`.
    pub measure: f64,
}

/// I(ρ_LS) for ρ_LS = J/2, after checking that J/2 is a density matrix.
pub fn half_choi_information(choi: &ChoiMatrix, step: usize) -> Result<f64, WitnessError> {
    let rho = choi.matrix().scale_real(0.5);
    if !rho.is_hermitian(1e-8) || !rho.is_unit_trace(1e-8) {
        return Err(WitnessError::InvalidBipartiteState {
            step,
            reason: "not Hermitian with unit trace".into(),
        });
    }
    let min = hermitian_eig(&rho)?.min_eigenvalue();
    if min < -1e-8 {
        return Err(WitnessError::InvalidBipartiteState {
            step,
            reason: format!("eigenvalue {min:e}"),
        });
    }
    qmi(&rho)
}

/// Σ ΔI over increments above `TOL_POS`.
pub fn lfs_measure(increments: &[f64]) -> f64 {
    increments.iter().filter(|&&d| d > TOL_POS).fold(0.0, |acc, d| acc + d)
}

/// ρ_LS^{(n)} = J(Λ_n)/2 for each cumulative Choi matrix.
pub fn lfs_series(chois: &[ChoiMatrix]) -> Result<LfsSeries, WitnessError> {
    let information = chois
        .iter()
        .enumerate()
        .map(|(n, j)| half_choi_information(j, n))
        .collect::<Result<Vec<_>, _>>()?;
    let increments: Vec<f64> = information.windows(2).map(|w| w[1] - w[0]).collect();
    let measure = lfs_measure(&increments);
    Ok(LfsSeries {
        information,
        increments,
        measure,
    })
}

/// Witness values for collision n (n ≥ 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub n: usize,
    /// Populations of ρ_S^{(n−1)}.
    pub p0: f64,
    pub p1: f64,
    pub n_q: f64,
    pub g_n: f64,
    /// I^{(n)} − I^{(n−1)}.
    pub delta_i: f64,
    pub avg_de: f64,
    pub a: f64,
    pub b: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub d_re: f64,
    pub d_im: f64,
    pub c_abs2_margin: f64,
    pub d_abs2_margin: f64,
    pub choi_min_eig: f64,
    pub residual: f64,
}
