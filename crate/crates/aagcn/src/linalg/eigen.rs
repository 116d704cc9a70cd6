//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Each sweep visits every off-diagonal pair `(p, q)` once and applies the
//! plane rotation that zeroes `a[p][q]`. Sweeps repeat until the
//! off-diagonal Frobenius norm falls below `1e-12` relative to the input
//! norm, capped at 100 sweeps. Robust and simple; cubic cost per sweep keeps
//! it for desk-scale matrices, which is all the spectral pipeline asks for.

use super::DenseMatrix;
use crate::error::{Error, Result};

const REL_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Result of [`sym_eig`]: eigenvalues ascending, eigenvectors as the
/// matching columns of an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            let v = a[p * n + q];
            s += v * v;
        }
    }
    (2.0 * s).sqrt()
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Rejects non-square input and matrices whose asymmetry exceeds `1e-12`
/// relative to the largest entry. Fails with a numerical error if the sweep
/// cap is reached without convergence.
pub fn sym_eig(m: &DenseMatrix) -> Result<SymEig> {
    let n = m.rows();
    if n != m.cols() {
        return Err(Error::Invalid(format!(
            "sym_eig needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_REL_TOL * scale {
                return Err(Error::Invalid(format!(
                    "sym_eig input is not symmetric at ({i},{j}): {} vs {}",
                    m.get(i, j),
                    m.get(j, i)
                )));
            }
        }
    }

    let mut a: Vec<f64> = m.data().to_vec();
    let mut v = DenseMatrix::identity(n);
    let norm0 = m.frobenius_norm();
    let threshold = REL_TOLERANCE * norm0;

    let mut converged = norm0 == 0.0 || off_diagonal_norm(&a, n) <= threshold;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Small-angle root of t^2 + 2*theta*t - 1 = 0; the guard
                // avoids overflow in theta^2 for nearly-converged pairs.
                let t = if theta.abs() > 1e150 {
                    1.0 / (2.0 * theta)
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- A J (columns p and q).
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                // A <- J^T A (rows p and q).
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                // V <- V J accumulates the eigenvectors.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        converged = off_diagonal_norm(&a, n) <= threshold;
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors.set(k, new_col, v.get(k, old_col));
        }
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{glorot_uniform, Prng};

    /// Independent reconstruction check: V diag(l) V^T entry by entry.
    fn reconstruction_error(m: &DenseMatrix, eig: &SymEig) -> f64 {
        let n = m.rows();
        let mut worst_num = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += eig.eigenvectors.get(i, k) * eig.eigenvalues[k] * eig.eigenvectors.get(j, k);
                }
                worst_num = worst_num.max((s - m.get(i, j)).abs());
            }
        }
        worst_num
    }

    fn orthonormality_error(eig: &SymEig) -> f64 {
        let n = eig.eigenvectors.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dot = 0.0;
                for k in 0..n {
                    dot += eig.eigenvectors.get(k, i) * eig.eigenvectors.get(k, j);
                }
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    fn random_symmetric(n: usize, prng: &mut Prng) -> DenseMatrix {
        let g = glorot_uniform(n, n, prng);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, 0.5 * (g.get(i, j) + g.get(j, i)));
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_sorted_with_permuted_identity() {
        let m = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ])
        .unwrap();
        let eig = sym_eig(&m).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        // No rotations run on a diagonal input, so columns are exact
        // permuted identity columns.
        let expect = [(1usize, 0usize), (2, 1), (0, 2)]; // (row of the 1, column)
        for &(r, c) in &expect {
            assert_eq!(eig.eigenvectors.get(r, c), 1.0);
        }
    }

    #[test]
    fn two_node_swap_spectrum() {
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let eig = sym_eig(&m).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let mut p = Prng::new(11);
        let m = random_symmetric(20, &mut p);
        let eig = sym_eig(&m).unwrap();
        let scale = m.frobenius_norm().max(1e-300);
        assert!(reconstruction_error(&m, &eig) / scale < 1e-8);
        assert!(orthonormality_error(&eig) < 1e-8);
    }

    #[test]
    fn trace_equals_eigenvalue_sum() {
        let mut p = Prng::new(13);
        for _ in 0..5 {
            let m = random_symmetric(12, &mut p);
            let eig = sym_eig(&m).unwrap();
            let trace: f64 = (0..12).map(|i| m.get(i, i)).sum();
            let lsum: f64 = eig.eigenvalues.iter().sum();
            assert!((trace - lsum).abs() <= 1e-9 * trace.abs().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_ascending() {
        let mut p = Prng::new(17);
        let m = random_symmetric(15, &mut p);
        let eig = sym_eig(&m).unwrap();
        for w in eig.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        assert!(sym_eig(&DenseMatrix::zeros(2, 3)).is_err());
        let m = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(matches!(sym_eig(&m), Err(Error::Invalid(_))));
    }

    #[test]
    fn zero_matrix_is_fine() {
        let eig = sym_eig(&DenseMatrix::zeros(4, 4)).unwrap();
        assert_eq!(eig.eigenvalues, vec![0.0; 4]);
    }
}
