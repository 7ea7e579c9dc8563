//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by descending eigenvalue; row k of `vectors` belongs to
/// `values[k]`, so `vectors · A · vectorsᵀ` is diagonal.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

pub fn symmetric_eigendecomposition(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::LengthMismatch { expected: n, actual: a.ncols() });
    }
    let scale = a.norm();
    if !scale.is_finite() {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                return Err(Error::Domain(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut m = a.clone();
    // columns of v are eigenvectors while iterating
    let mut v = DMatrix::<f64>::identity(n, n);
    let threshold = 1e-12 * scale;
    let mut sweeps = 0;
    while off_diagonal_norm(&m) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NotConverged { sweeps, off_norm: off_diagonal_norm(&m) });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |row, col| v[(col, order[row])]);
    Ok(SymmetricEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&b + b.transpose()) * 0.5
    }

    fn check_orthogonal(v: &DMatrix<f64>) {
        let n = v.nrows();
        let residual = v * v.transpose() - DMatrix::<f64>::identity(n, n);
        assert!(residual.amax() < 1e-10, "{}", residual.amax());
    }

    #[test]
    fn identity() {
        let e = symmetric_eigendecomposition(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(e.values, vec![1.0; 4]);
        check_orthogonal(&e.vectors);
    }

    #[test]
    fn diagonal_is_sorted() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let e = symmetric_eigendecomposition(&a).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[(0, 0)].abs(), 1.0);
        assert_eq!(e.vectors[(1, 2)].abs(), 1.0);
        assert_eq!(e.vectors[(2, 1)].abs(), 1.0);
    }

    #[test]
    fn random_matrix_is_reconstructed() {
        let a = random_symmetric(15, 7);
        let e = symmetric_eigendecomposition(&a).unwrap();
        check_orthogonal(&e.vectors);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone()));
        let back = e.vectors.transpose() * &lambda * &e.vectors;
        assert!((back - &a).amax() < 1e-9);
        let diag = &e.vectors * &a * e.vectors.transpose();
        let lmax = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(off_diagonal_norm(&diag) < 1e-9 * lmax);
    }

    #[test]
    fn agrees_with_library_solver() {
        let a = random_symmetric(9, 11);
        let ours = symmetric_eigendecomposition(&a).unwrap();
        let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in ours.values.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigendecomposition(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_matrix() {
        let e = symmetric_eigendecomposition(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
    }
}
