use faer::Side;

use super::Matrix;
use crate::error::{GeloError, Result};

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in the order of `eigenvalues`.
    pub eigenvectors: Matrix,
}

impl EigDecomposition {
    /// `V·diag(Λ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        scaled * self.eigenvectors.transpose()
    }
}

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `σ_max / σ_min`; `+∞` when the matrix is singular.
pub fn condition_number(m: &Matrix) -> Result<f64> {
    if !m.is_square() || m.is_empty() {
        return Err(GeloError::InvalidDimension(format!(
            "condition number needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let s = singular_values(m);
    let (max, min) = (s[0], s[s.len() - 1]);
    if min <= 0.0 || !min.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(max / min)
}

/// Solves `a·X = y` by LU factorization.
pub fn solve(a: &Matrix, y: &Matrix) -> Result<Matrix> {
    if !a.is_square() || a.nrows() != y.nrows() || a.is_empty() {
        return Err(GeloError::InvalidDimension(format!(
            "solve with a {}x{} system and a {}x{} right-hand side",
            a.nrows(),
            a.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    let x = a.clone().lu().solve(y).ok_or(GeloError::SingularMatrix)?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(GeloError::SingularMatrix)
    }
}

const SYMMETRY_TOL: f64 = 1e-9;

/// Eigendecomposition of a symmetric positive semidefinite matrix.
///
/// The input is symmetrized before factoring; negative eigenvalues produced by
/// rounding are clamped to zero.
pub fn eigh(m: &Matrix) -> Result<EigDecomposition> {
    if !m.is_square() || m.is_empty() {
        return Err(GeloError::InvalidDimension(format!(
            "eigh needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.norm();
    let asym = (m - m.transpose()).norm();
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(GeloError::InvalidInput(format!(
            "matrix is not symmetric (relative asymmetry {:.3e})",
            asym / scale
        )));
    }
    let n = m.nrows();
    let sym = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| GeloError::InvalidInput(format!("eigendecomposition failed: {e:?}")))?;
    let values = evd.S().column_vector();
    let vectors = evd.U();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let eigenvalues = order.iter().map(|&i| values[i].max(0.0)).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(EigDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin-QR orthonormal basis of the column space of `m` (rows ≥ cols).
pub fn orthonormal_columns(m: &Matrix) -> Matrix {
    m.clone().qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, rng_from_seed, sample_invertible, sample_orthogonal};

    #[test]
    fn condition_of_simple_matrices() {
        assert!((condition_number(&Matrix::identity(4, 4)).unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![10.0, 1.0]));
        assert!((condition_number(&d).unwrap() - 10.0).abs() < 1e-12);
        let singular = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(condition_number(&singular).unwrap() > 1e15);
        assert_eq!(condition_number(&Matrix::zeros(3, 3)).unwrap(), f64::INFINITY);
        assert!(condition_number(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn condition_of_haar_matches_svd() {
        let q = sample_orthogonal(32, 5).unwrap();
        // independent route: singular values of QᵀQ are the squares of those of Q
        let gram_sv = singular_values(&(q.matrix().transpose() * q.matrix()));
        assert!((gram_sv[0] - 1.0).abs() < 1e-8 && (gram_sv[31] - 1.0).abs() < 1e-8);
        assert!((condition_number(q.matrix()).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn solve_examples() {
        let y = gaussian_matrix(3, 2, &mut rng_from_seed(1));
        assert_eq!(solve(&Matrix::identity(3, 3), &y).unwrap(), y);

        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let y = Matrix::from_row_slice(2, 1, &[2.0, 8.0]);
        let x = solve(&a, &y).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_round_trip() {
        let a = sample_invertible(48, 100.0, 3).unwrap();
        let x0 = gaussian_matrix(48, 7, &mut rng_from_seed(4));
        let x = solve(a.matrix(), &(a.matrix() * &x0)).unwrap();
        assert!((&x - &x0).norm() / x0.norm() < 1e-8);
    }

    #[test]
    fn solve_errors() {
        let singular = Matrix::zeros(2, 2);
        assert!(matches!(
            solve(&singular, &Matrix::zeros(2, 1)),
            Err(GeloError::SingularMatrix)
        ));
        assert!(matches!(
            solve(&Matrix::identity(2, 2), &Matrix::zeros(3, 1)),
            Err(GeloError::InvalidDimension(_))
        ));
    }

    #[test]
    fn eigh_diagonal() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let e = eigh(&m).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-12);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!((e.eigenvectors[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((e.eigenvectors[(0, 1)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_rank_one() {
        let v = nalgebra::DVector::from_vec(vec![1.0, -2.0, 2.0]);
        let m = &v * v.transpose();
        let e = eigh(&m).unwrap();
        assert!((e.eigenvalues[0] - 9.0).abs() < 1e-12);
        assert!(e.eigenvalues[1].abs() < 1e-12 && e.eigenvalues[2].abs() < 1e-12);
        assert!(e.eigenvalues.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn eigh_spd_reconstruction() {
        let g = gaussian_matrix(16, 16, &mut rng_from_seed(9));
        let m = &g * g.transpose() + Matrix::identity(16, 16) * 0.1;
        let e = eigh(&m).unwrap();
        assert!((e.reconstruct() - &m).norm() / m.norm() <= 1e-6);
        let vtv = e.eigenvectors.transpose() * &e.eigenvectors;
        assert!((vtv - Matrix::identity(16, 16)).norm() <= 1e-8);
        assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn eigh_rejects_asymmetric() {
        let m = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigh(&m), Err(GeloError::InvalidInput(_))));
    }
}
