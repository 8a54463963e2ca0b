//! Dense complex linear algebra for the small (2–16 dimensional) operators
//! that appear in the collision model.
//!
//! Everything here is a pure function over value types. The Hermitian
//! eigensolver is a cyclic complex Jacobi iteration, which is plenty for
//! matrices of this size and keeps the crate free of LAPACK bindings.

mod matrix;

pub use matrix::ComplexMatrix;

use num_complex::Complex64;
use thiserror::Error;

/// Absolute max-entry deviation tolerated before a matrix is declared non-Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Eigenvalues in `[-EIGEN_CLIP, 0)` are treated as zero for entropies.
pub const EIGEN_CLIP: f64 = 1e-10;

const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("eigenvalue {value:e} is below the clipping window; not a valid state")]
    NegativeEigenvalue { value: f64 },
}

/// Pauli matrices in the computational basis, σ_z|0⟩ = |0⟩.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64;

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        let i = Complex64::new(0.0, 1.0);
        let o = Complex64::new(0.0, 0.0);
        ComplexMatrix::from_rows(&[[o, -i], [i, o]])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]])
    }

    /// (σ_x, σ_y, σ_z)
    pub fn xyz() -> [ComplexMatrix; 3] {
        [x(), y(), z()]
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V·diag(f(λ))·V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| v[(i, k)] * weights[k] * v[(j, k)].conj()).sum();
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| Complex64::new(l, 0.0))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<(), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let deviation = m.hermiticity_error();
    if deviation > HERMITICITY_TOL {
        return Err(NumericsError::NotHermitian { deviation });
    }
    Ok(())
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen, NumericsError> {
    check_hermitian(m)?;
    let n = m.rows();
    // symmetrize so the iteration works on an exactly Hermitian matrix
    let mut a = (m + &m.adjoint()).scale_real(0.5);
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFF_DIAGONAL_TOL * a.frobenius_norm().max(1.0);

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b < f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / b;
                let alpha = a[(p, p)].re;
                let delta = a[(q, q)].re;
                let theta = 0.5 * (2.0 * b).atan2(delta - alpha);
                let (s, c) = theta.sin_cos();
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] in the (p, q) plane
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }
    if !converged {
        let off_norm = off_diagonal_norm(&a);
        if off_norm > threshold {
            return Err(NumericsError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off_norm,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(−i·h·t)` for Hermitian `h`, via its spectral decomposition.
pub fn exp_hermitian_generator(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, NumericsError> {
    let eig = hermitian_eig(h)?;
    Ok(eig.reconstruct_with(|l| Complex64::from_polar(1.0, -l * t)))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64, NumericsError> {
    Ok(hermitian_eig(m)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Entropy in bits from a spectrum, clipping `[-EIGEN_CLIP, 0)` to zero.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64, NumericsError> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -EIGEN_CLIP {
            return Err(NumericsError::NegativeEigenvalue { value: l });
        }
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s)
}

/// −Tr[ρ log₂ ρ].
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64, NumericsError> {
    entropy_of_spectrum(&hermitian_eig(rho)?.eigenvalues)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pauli_x_spectrum() {
        let eig = hermitian_eig(&pauli::x()).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let eig = hermitian_eig(&ComplexMatrix::from_real_diag(&[0.7, 0.3])).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.3, 0.7]);
    }

    #[test]
    fn eigenpairs_satisfy_definition() {
        let m = ComplexMatrix::from_rows(&[
            [c(2.0, 0.0), c(0.5, -0.3), c(0.0, 1.0)],
            [c(0.5, 0.3), c(-1.0, 0.0), c(0.2, 0.2)],
            [c(0.0, -1.0), c(0.2, -0.2), c(0.5, 0.0)],
        ]);
        let eig = hermitian_eig(&m).unwrap();
        let v = &eig.eigenvectors;
        for k in 0..3 {
            let col: Vec<Complex64> = (0..3).map(|i| v[(i, k)]).collect();
            let av = m.mul_vec(&col);
            for i in 0..3 {
                assert!((av[i] - col[i] * eig.eigenvalues[k]).norm() < 1e-13);
            }
        }
        let vv = &v.adjoint() * v;
        assert!(vv.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(hermitian_eig(&m), Err(NumericsError::NotHermitian { .. })));
        assert!(matches!(trace_norm(&m), Err(NumericsError::NotHermitian { .. })));
    }

    #[test]
    fn exp_of_sigma_z_quarter_turn() {
        let u = exp_hermitian_generator(&pauli::z(), FRAC_PI_2).unwrap();
        let expected = ComplexMatrix::from_diag(&[c(0.0, -1.0), c(0.0, 1.0)]);
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn exp_at_zero_time_is_identity() {
        let h = ComplexMatrix::from_rows(&[[c(0.3, 0.0), c(0.1, 0.4)], [c(0.1, -0.4), c(-1.2, 0.0)]]);
        let u = exp_hermitian_generator(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn trace_norm_diagonal_cases() {
        let t = trace_norm(&ComplexMatrix::from_real_diag(&[0.3, -0.7])).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        let t = trace_norm(&ComplexMatrix::from_real_diag(&[1.1, -0.1, 0.0, 1.0])).unwrap();
        assert!((t - 2.2).abs() < 1e-15);
    }

    #[test]
    fn trace_norm_of_density_matrix_is_one() {
        let rho = ComplexMatrix::from_rows(&[[c(0.6, 0.0), c(0.2, 0.1)], [c(0.2, -0.1), c(0.4, 0.0)]]);
        assert!((trace_norm(&rho).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn entropy_values() {
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pure = ComplexMatrix::outer(&[c(s, 0.0), c(0.0, s)]);
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);

        // -Σ p log2 p evaluated directly
        let (p, q): (f64, f64) = (0.2689, 0.7311);
        let direct = -(p * p.log2() + q * q.log2());
        let s = von_neumann_entropy(&ComplexMatrix::from_real_diag(&[p, q])).unwrap();
        assert!((s - direct).abs() < 1e-14);
        assert!((s - 0.8399).abs() < 1e-4);
    }

    #[test]
    fn entropy_clips_tiny_negatives_and_rejects_large_ones() {
        let ok = ComplexMatrix::from_real_diag(&[1.0 + 5e-11, -5e-11]);
        assert!(von_neumann_entropy(&ok).unwrap().abs() < 1e-9);
        let bad = ComplexMatrix::from_real_diag(&[1.1, -0.1]);
        assert!(matches!(
            von_neumann_entropy(&bad),
            Err(NumericsError::NegativeEigenvalue { .. })
        ));
    }
}
