//! Process tomography of the reduced dynamics.
//!
//! The cumulative maps Λ_n are reconstructed as affine maps on Bloch vectors
//! r ↦ M·r + c from the evolution of the four probes P₀, P₁, P₊, P_R. From
//! them we get inverses, the single-step maps Λ_{n,n−1} = Λ_n ∘ Λ_{n−1}⁻¹,
//! their 4×4 superoperators on (ρ₀₀, ρ₀₁, ρ₁₀, ρ₁₁) and Choi matrices.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::ProbeBundle;
use crate::numerics::{pauli, ComplexMatrix};

pub type Vector3 = [f64; 3];
pub type Matrix3 = [[f64; 3]; 3];

/// Default bound on ‖M‖_F·‖M⁻¹‖_F before a map is declared non-invertible.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e8;

const SINGULAR_DET: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error(
        "map{} is not invertible (det {det:e}, condition estimate {cond:e})",
        step.map(|n| format!(" at collision {n}")).unwrap_or_default()
    )]
    SingularMap {
        step: Option<usize>,
        det: f64,
        cond: f64,
    },
}

impl TomographyError {
    pub fn at_step(self, n: usize) -> Self {
        match self {
            TomographyError::SingularMap { det, cond, .. } => TomographyError::SingularMap {
                step: Some(n),
                det,
                cond,
            },
        }
    }
}

/// Bloch vector (Tr[σ_x ρ], Tr[σ_y ρ], Tr[σ_z ρ]) of a 2×2 matrix.
pub fn bloch_vector(rho: &ComplexMatrix) -> Vector3 {
    let x = rho[(0, 1)] + rho[(1, 0)];
    let y = Complex64::new(0.0, 1.0) * (rho[(0, 1)] - rho[(1, 0)]);
    let z = rho[(0, 0)] - rho[(1, 1)];
    [x.re, y.re, z.re]
}

/// (I + r·σ)/2.
pub fn density_from_bloch(r: &Vector3) -> ComplexMatrix {
    let [sx, sy, sz] = pauli::xyz();
    let sum = &(&ComplexMatrix::identity(2) + &sx.scale_real(r[0]))
        + &(&sy.scale_real(r[1]) + &sz.scale_real(r[2]));
    sum.scale_real(0.5)
}

fn mat_vec(m: &Matrix3, v: &Vector3) -> Vector3 {
    [0, 1, 2].map(|i| (0..3).map(|j| m[i][j] * v[j]).sum())
}

fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn frobenius(m: &Matrix3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

fn determinant(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn adjugate(m: &Matrix3) -> Matrix3 {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    // transpose of the cofactor matrix
    [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ]
}

/// Qubit channel as an affine map r ↦ M·r + c on Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineBlochMap {
    pub m: Matrix3,
    pub c: Vector3,
}

impl AffineBlochMap {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            c: [0.0; 3],
        }
    }

    pub fn apply(&self, r: &Vector3) -> Vector3 {
        let mr = mat_vec(&self.m, r);
        [0, 1, 2].map(|i| mr[i] + self.c[i])
    }

    pub fn apply_to_state(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        density_from_bloch(&self.apply(&bloch_vector(rho)))
    }

    /// `self ∘ inner`: r ↦ M(M' r + c') + c.
    pub fn compose(&self, inner: &AffineBlochMap) -> AffineBlochMap {
        let mc = mat_vec(&self.m, &inner.c);
        AffineBlochMap {
            m: mat_mul(&self.m, &inner.m),
            c: [0, 1, 2].map(|i| mc[i] + self.c[i]),
        }
    }

    pub fn max_abs_diff(&self, other: &AffineBlochMap) -> f64 {
        let dm = self
            .m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs());
        let dc = self.c.iter().zip(&other.c).map(|(a, b)| (a - b).abs());
        dm.chain(dc).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().chain(&self.c).all(|x| x.is_finite())
    }

    /// Checks that the images of the Bloch-sphere poles along ±x, ±y, ±z
    /// stay inside the unit ball.
    pub fn maps_vertices_into_ball(&self, tol: f64) -> bool {
        let mut ok = true;
        for axis in 0..3 {
            for sign in [-1.0, 1.0] {
                let mut r = [0.0; 3];
                r[axis] = sign;
                let img = self.apply(&r);
                ok &= img.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1.0 + tol;
            }
        }
        ok
    }
}

/// Affine map from the Bloch vectors of Λ[P₀], Λ[P₁], Λ[P₊], Λ[P_R].
///
/// Uses I = P₀ + P₁, σ_x = 2P₊ − I, σ_y = 2P_R − I, σ_z = P₀ − P₁ and
/// c_i = ½Tr[σ_i Λ[I]], M_ij = ½Tr[σ_i Λ[σ_j]].
pub fn reconstruct_affine(images: &[Vector3; 4]) -> AffineBlochMap {
    let [r0, r1, rp, rr] = images;
    // ½Tr[σ_i Λ[P]] is half the Bloch component of Λ[P] (which has unit trace)
    let c: Vector3 = [0, 1, 2].map(|i| 0.5 * (r0[i] + r1[i]));
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        // Λ[σ_x] = 2Λ[P₊] − Λ[I] contributes ½(2·r₊ − (r₀ + r₁))
        m[i][0] = rp[i] - c[i];
        m[i][1] = rr[i] - c[i];
        m[i][2] = 0.5 * (r0[i] - r1[i]);
    }
    AffineBlochMap { m, c }
}

/// Reconstruction straight from the evolved probe density matrices.
pub fn reconstruct_from_states(images: [&ComplexMatrix; 4]) -> AffineBlochMap {
    reconstruct_affine(&images.map(bloch_vector))
}

/// Λ_n for every n = 0..=n_max of a probe bundle.
pub fn reconstruct_family(bundle: &ProbeBundle) -> Vec<AffineBlochMap> {
    (0..=bundle.n_max())
        .map(|n| reconstruct_from_states(bundle.images_at(n)))
        .collect()
}

/// ‖M‖_F·‖M⁻¹‖_F, infinite for singular M.
pub fn condition_estimate(m: &Matrix3) -> f64 {
    let det = determinant(m);
    if det == 0.0 {
        return f64::INFINITY;
    }
    let adj = adjugate(m);
    frobenius(m) * frobenius(&adj) / det.abs()
}

/// (M⁻¹, −M⁻¹c).
pub fn invert_affine(map: &AffineBlochMap, cond_threshold: f64) -> Result<AffineBlochMap, TomographyError> {
    let det = determinant(&map.m);
    let cond = condition_estimate(&map.m);
    if det.abs() < SINGULAR_DET || cond.is_nan() || cond > cond_threshold {
        return Err(TomographyError::SingularMap {
            step: None,
            det,
            cond,
        });
    }
    let adj = adjugate(&map.m);
    let inv: Matrix3 = adj.map(|row| row.map(|x| x / det));
    let ic = mat_vec(&inv, &map.c);
    Ok(AffineBlochMap {
        m: inv,
        c: ic.map(|x| -x),
    })
}

/// Λ_{n,n−1} = Λ_n ∘ Λ_{n−1}⁻¹: M_n·M_{n−1}⁻¹ and M_n·c̃_{n−1} + c_n.
pub fn time_local_map(
    lambda_n: &AffineBlochMap,
    lambda_nm1: &AffineBlochMap,
    cond_threshold: f64,
) -> Result<AffineBlochMap, TomographyError> {
    let inverse = invert_affine(lambda_nm1, cond_threshold)?;
    Ok(lambda_n.compose(&inverse))
}

/// Single-step maps Λ_{n,n−1} for n = 1..=n_max, stopping at the first
/// non-invertible Λ_{n−1}. The error carries the collision index n.
pub fn time_local_family(
    cumulative: &[AffineBlochMap],
    cond_threshold: f64,
) -> (Vec<AffineBlochMap>, Option<TomographyError>) {
    let mut out = Vec::with_capacity(cumulative.len().saturating_sub(1));
    for n in 1..cumulative.len() {
        match time_local_map(&cumulative[n], &cumulative[n - 1], cond_threshold) {
            Ok(map) => out.push(map),
            Err(e) => return (out, Some(e.at_step(n))),
        }
    }
    (out, None)
}

/// Linear map on vectorized 2×2 operators ordered (ρ₀₀, ρ₀₁, ρ₁₀, ρ₁₁).
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator(pub ComplexMatrix);

impl SuperOperator {
    pub fn identity() -> Self {
        Self(ComplexMatrix::identity(4))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = self.0.mul_vec(&x.vectorize());
        ComplexMatrix::unvectorize(2, 2, &v).expect("2x2 operator")
    }

    /// Largest deviation from trace preservation: rows 0 and 3 must sum to
    /// (1, 0, 0, 1) column-wise.
    pub fn trace_preservation_error(&self) -> f64 {
        let target = [1.0, 0.0, 0.0, 1.0];
        (0..4)
            .map(|j| (self.0[(0, j)] + self.0[(3, j)] - target[j]).norm())
            .fold(0.0, f64::max)
    }

    /// Deviation from mapping Hermitian inputs to Hermitian outputs,
    /// S[(k,l),(i,j)] = conj(S[(l,k),(j,i)]).
    pub fn hermiticity_preservation_error(&self) -> f64 {
        let swap = [0, 2, 1, 3];
        let mut err: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                err = err.max((self.0[(r, c)] - self.0[(swap[r], swap[c])].conj()).norm());
            }
        }
        err
    }
}

/// Superoperator of an affine Bloch map, using Λ[I] = I + c·σ and Λ[σ_j] = Σ_i M_ij σ_i.
pub fn affine_to_superoperator(map: &AffineBlochMap) -> SuperOperator {
    let sigma = pauli::xyz();
    let id = ComplexMatrix::identity(2);
    let image_of_identity = sigma
        .iter()
        .zip(&map.c)
        .fold(id.clone(), |acc, (s, &ci)| &acc + &s.scale_real(ci));
    let image_of_pauli: Vec<ComplexMatrix> = (0..3)
        .map(|j| {
            sigma
                .iter()
                .enumerate()
                .fold(ComplexMatrix::zeros(2, 2), |acc, (i, s)| &acc + &s.scale_real(map.m[i][j]))
        })
        .collect();

    // E_ij = ½(a·I + Σ_k b_k σ_k) with (a, b) coefficients listed per basis element
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let basis: [(Complex64, [Complex64; 3]); 4] = [
        (one, [zero, zero, one]),   // |0⟩⟨0| = (I + σ_z)/2
        (zero, [one, i, zero]),     // |0⟩⟨1| = (σ_x + iσ_y)/2
        (zero, [one, -i, zero]),    // |1⟩⟨0| = (σ_x − iσ_y)/2
        (one, [zero, zero, -one]),  // |1⟩⟨1| = (I − σ_z)/2
    ];

    let mut sop = ComplexMatrix::zeros(4, 4);
    for (col, (a, b)) in basis.iter().enumerate() {
        let mut image = image_of_identity.scale(*a);
        for k in 0..3 {
            image = &image + &image_of_pauli[k].scale(b[k]);
        }
        let v = image.scale_real(0.5).vectorize();
        for row in 0..4 {
            sop[(row, col)] = v[row];
        }
    }
    SuperOperator(sop)
}

/// Entries of the phase-covariant form
/// ```text
/// [ a    0   0   b   ]
/// [ 0    c   d   0   ]
/// [ 0    d*  c*  0   ]
/// [ 1−a  0   0   1−b ]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCovariantEntries {
    pub a: f64,
    pub b: f64,
    pub c: Complex64,
    pub d: Complex64,
    /// Largest deviation of the superoperator from the pattern above,
    /// including the imaginary parts of a and b.
    pub off_pattern_residual: f64,
    /// Residual was within the tolerance given at extraction.
    pub pattern_ok: bool,
}

impl PhaseCovariantEntries {
    /// Exact phase-covariant entries (zero residual).
    pub fn new(a: f64, b: f64, c: Complex64, d: Complex64) -> Self {
        Self {
            a,
            b,
            c,
            d,
            off_pattern_residual: 0.0,
            pattern_ok: true,
        }
    }

    pub fn matches_pattern(&self, tol: f64) -> bool {
        self.off_pattern_residual <= tol
    }

    pub fn to_superoperator(&self) -> SuperOperator {
        let re = |x: f64| Complex64::new(x, 0.0);
        let z = re(0.0);
        SuperOperator(ComplexMatrix::from_rows(&[
            [re(self.a), z, z, re(self.b)],
            [z, self.c, self.d, z],
            [z, self.d.conj(), self.c.conj(), z],
            [re(1.0 - self.a), z, z, re(1.0 - self.b)],
        ]))
    }
}

/// Reads a, b, c, d off a superoperator. Entries are returned even when the
/// residual exceeds `tol`; the miss is recorded in `pattern_ok`.
pub fn extract_phase_covariant(sop: &SuperOperator, tol: f64) -> PhaseCovariantEntries {
    let s = &sop.0;
    let a = s[(0, 0)];
    let b = s[(0, 3)];
    let c = s[(1, 1)];
    let d = s[(1, 2)];

    let zero_positions = [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2)];
    let mut residual = zero_positions
        .iter()
        .map(|&p| s[p].norm())
        .fold(0.0, f64::max);
    for dev in [
        a.im.abs(),
        b.im.abs(),
        (s[(2, 2)] - c.conj()).norm(),
        (s[(2, 1)] - d.conj()).norm(),
        (s[(3, 0)] - (1.0 - a)).norm(),
        (s[(3, 3)] - (1.0 - b)).norm(),
    ] {
        residual = residual.max(dev);
    }
    PhaseCovariantEntries {
        a: a.re,
        b: b.re,
        c,
        d,
        off_pattern_residual: residual,
        pattern_ok: residual <= tol,
    }
}

/// Choi matrix J = Σ_ij |i⟩⟨j| ⊗ Λ[|i⟩⟨j|], ancilla index first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix(pub ComplexMatrix);

impl ChoiMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// (Λ ⊗ I)[|Ψ⟩⟨Ψ|] with the channel acting on the first factor, i.e. the
    /// Choi matrix with subsystem order swapped, halved.
    pub fn swapped_state(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        out[(b * 2 + a, d * 2 + c)] = self.0[(a * 2 + b, c * 2 + d)] * 0.5;
                    }
                }
            }
        }
        out
    }
}

pub fn choi(sop: &SuperOperator) -> ChoiMatrix {
    let s = &sop.0;
    let mut j = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for jj in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    // block (i, jj) holds Λ[|i⟩⟨jj|], whose (k, l) entry is S[(k,l),(i,jj)]
                    j[(i * 2 + k, jj * 2 + l)] = s[(k * 2 + l, i * 2 + jj)];
                }
            }
        }
    }
    ChoiMatrix(j)
}

/// One line of the map-family JSON-lines export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct MapRecord {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: [f64; 9],
    pub c: [f64; 3],
    pub a: f64,
    pub b: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub d_re: f64,
    pub d_im: f64,
    pub residual: f64,
}

impl MapRecord {
    pub fn new(n: usize, map: &AffineBlochMap) -> Self {
        let entries = extract_phase_covariant(&affine_to_superoperator(map), 0.0);
        let mut m = [0.0; 9];
        for (i, row) in map.m.iter().enumerate() {
            m[i * 3..i * 3 + 3].copy_from_slice(row);
        }
        Self {
            n,
            m,
            c: map.c,
            a: entries.a,
            b: entries.b,
            c_re: entries.c.re,
            c_im: entries.c.im,
            d_re: entries.d.re,
            d_im: entries.d.im,
            residual: entries.off_pattern_residual,
        }
    }
}

/// Writes one JSON object per line.
pub fn write_map_records<W: Write>(mut out: W, records: &[MapRecord]) -> io::Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eig;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag_map(m: [f64; 3], cz: f64) -> AffineBlochMap {
        AffineBlochMap {
            m: [[m[0], 0.0, 0.0], [0.0, m[1], 0.0], [0.0, 0.0, m[2]]],
            c: [0.0, 0.0, cz],
        }
    }

    #[test]
    fn unevolved_probes_give_identity() {
        let probes = crate::model::probe_states();
        let map = reconstruct_from_states([&probes[0], &probes[1], &probes[2], &probes[3]]);
        assert!(map.max_abs_diff(&AffineBlochMap::identity()) < 1e-15);
    }

    #[test]
    fn bloch_roundtrip() {
        let r = [0.3, -0.2, 0.5];
        let back = bloch_vector(&density_from_bloch(&r));
        for i in 0..3 {
            assert!((back[i] - r[i]).abs() < 1e-15);
        }
        assert_eq!(bloch_vector(&crate::model::probe_states()[3]), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn inverse_examples() {
        let id = invert_affine(&AffineBlochMap::identity(), DEFAULT_COND_THRESHOLD).unwrap();
        assert!(id.max_abs_diff(&AffineBlochMap::identity()) < 1e-15);

        let inv = invert_affine(&diag_map([0.5, 0.5, 0.25], 0.1), DEFAULT_COND_THRESHOLD).unwrap();
        assert!(inv.max_abs_diff(&diag_map([2.0, 2.0, 4.0], -0.4)) < 1e-15);
    }

    #[test]
    fn singular_map_is_reported() {
        let err = invert_affine(&diag_map([0.0, 0.0, 0.0], -0.46), DEFAULT_COND_THRESHOLD).unwrap_err();
        assert!(matches!(err, TomographyError::SingularMap { step: None, .. }));
        // well above the determinant floor but badly conditioned
        let err = invert_affine(&diag_map([1e3, 1e3, 1e-6], 0.0), 1e8).unwrap_err();
        assert!(matches!(err, TomographyError::SingularMap { .. }));
        assert!(matches!(
            err.at_step(7),
            TomographyError::SingularMap { step: Some(7), .. }
        ));
    }

    #[test]
    fn time_local_of_equal_maps_is_identity() {
        let map = AffineBlochMap {
            m: [[0.9, 0.1, 0.0], [-0.1, 0.9, 0.0], [0.0, 0.0, 0.8]],
            c: [0.0, 0.0, -0.1],
        };
        let tl = time_local_map(&map, &map, DEFAULT_COND_THRESHOLD).unwrap();
        assert!(tl.max_abs_diff(&AffineBlochMap::identity()) < 1e-15);
    }

    #[test]
    fn time_local_family_halts_at_singular_step() {
        let good = AffineBlochMap::identity();
        let bad = diag_map([0.0, 0.0, 0.0], 0.0);
        let (maps, err) = time_local_family(&[good, good, bad, good], DEFAULT_COND_THRESHOLD);
        assert_eq!(maps.len(), 2);
        assert!(matches!(err, Some(TomographyError::SingularMap { step: Some(3), .. })));
    }

    #[test]
    fn identity_superoperator_and_choi() {
        let sop = affine_to_superoperator(&AffineBlochMap::identity());
        assert!(sop.0.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let e = extract_phase_covariant(&sop, 1e-10);
        assert_eq!((e.a, e.b), (1.0, 0.0));
        assert_eq!((e.c, e.d), (c(1.0, 0.0), c(0.0, 0.0)));
        assert_eq!(e.off_pattern_residual, 0.0);

        let j = choi(&sop);
        let eig = hermitian_eig(&j.0).unwrap();
        let expected = [0.0, 0.0, 0.0, 2.0];
        for (l, e) in eig.eigenvalues.iter().zip(expected) {
            assert!((l - e).abs() < 1e-14);
        }
    }

    #[test]
    fn thermal_replacement_channel() {
        // every input goes to the thermal state at β = ω = 1
        let map = diag_map([0.0, 0.0, 0.0], -(0.5f64).tanh());
        let sop = affine_to_superoperator(&map);
        let e = extract_phase_covariant(&sop, 1e-10);
        let p0 = 1.0 / (1.0 + std::f64::consts::E);
        assert!((e.a - p0).abs() < 1e-15 && (e.b - p0).abs() < 1e-15);
        assert!(e.c.norm() < 1e-15 && e.d.norm() < 1e-15);
        assert!(e.off_pattern_residual < 1e-15);
        // Λ[|0⟩⟨0|] and Λ[|1⟩⟨1|] are both thermal
        for basis in [[1.0, 0.0], [0.0, 1.0]] {
            let out = sop.apply(&ComplexMatrix::from_real_diag(&basis));
            assert!((out[(0, 0)].re - p0).abs() < 1e-15);
        }
    }

    #[test]
    fn superoperator_matches_affine_action() {
        let map = AffineBlochMap {
            m: [[0.7, -0.2, 0.05], [0.2, 0.7, -0.01], [0.03, 0.0, 0.6]],
            c: [0.01, -0.02, -0.3],
        };
        let sop = affine_to_superoperator(&map);
        assert!(sop.trace_preservation_error() < 1e-15);
        assert!(sop.hermiticity_preservation_error() < 1e-15);
        let rho = density_from_bloch(&[0.2, 0.4, -0.5]);
        assert!(sop.apply(&rho).max_abs_diff(&map.apply_to_state(&rho)) < 1e-12);
    }

    #[test]
    fn choi_of_substituted_entries() {
        let entries = PhaseCovariantEntries::new(1.1, 0.0, c(0.0, 0.0), c(0.0, 0.0));
        let j = choi(&entries.to_superoperator());
        assert!(j.0.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.1, -0.1, 0.0, 1.0])) < 1e-15);
        assert!((j.0.trace().re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn choi_pattern_with_coherence_entries() {
        let entries = PhaseCovariantEntries::new(0.8, 0.1, c(0.3, 0.2), c(0.05, -0.01));
        let j = choi(&entries.to_superoperator()).0;
        assert_eq!(j[(0, 0)], c(0.8, 0.0));
        assert_eq!(j[(0, 3)], c(0.3, 0.2));
        assert_eq!(j[(3, 0)], c(0.3, -0.2));
        assert_eq!(j[(1, 2)], c(0.05, 0.01));
        assert_eq!(j[(2, 1)], c(0.05, -0.01));
        assert!(j.is_hermitian(1e-15));
    }

    #[test]
    fn residual_flags_non_covariant_map() {
        let map = AffineBlochMap {
            m: [[0.9, 0.0, 0.1], [0.0, 0.9, 0.0], [0.0, 0.0, 0.9]],
            c: [0.0, 0.0, 0.0],
        };
        let e = extract_phase_covariant(&affine_to_superoperator(&map), 1e-10);
        assert!(!e.pattern_ok && !e.matches_pattern(1e-10));
        assert!(e.off_pattern_residual > 0.01);
    }

    #[test]
    fn map_record_jsonl() {
        let rec = MapRecord::new(3, &AffineBlochMap::identity());
        let mut buf = Vec::new();
        write_map_records(&mut buf, &[rec.clone(), rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        for key in ["n", "M", "c", "a", "b", "c_re", "c_im", "d_re", "d_im", "residual"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["M"].as_array().unwrap().len(), 9);
        assert_eq!(v["n"], 3);
    }
}
