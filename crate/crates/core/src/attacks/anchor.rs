use crate::error::{GeloError, Result};
use crate::numerics::{gaussian_matrix, orthonormal_columns, rng_from_seed, Matrix};

use super::{Regularization, ResidualMethod};

/// Rank tolerance for the anchor span, relative to the largest singular value.
const RANK_TOL: f64 = 1e-8;

fn ridge_solve(gram: &Matrix, lambda: f64, rhs: &Matrix) -> Result<Matrix> {
    let k = gram.nrows();
    let regularized = gram + Matrix::identity(k, k) * lambda;
    let chol = regularized.cholesky().ok_or(GeloError::SingularMatrix)?;
    Ok(chol.solve(rhs))
}

/// Ridge estimate `A_K = U·H_Kᵀ·(H_K·H_Kᵀ + λI)⁻¹` of the mixing columns that
/// belong to the anchor rows.
pub fn estimate_anchor_mixing(u: &Matrix, h_k: &Matrix, lambda_reg: f64) -> Result<Matrix> {
    if h_k.nrows() == 0 {
        return Err(GeloError::InvalidParameter("at least one anchor row is required".into()));
    }
    if h_k.ncols() != u.ncols() {
        return Err(GeloError::InvalidDimension(format!(
            "anchors have width {} but observations have width {}",
            h_k.ncols(),
            u.ncols()
        )));
    }
    if !(lambda_reg > 0.0) {
        return Err(GeloError::InvalidParameter(format!("lambda_reg {lambda_reg} must be positive")));
    }
    let gram = h_k * h_k.transpose();
    let rhs = h_k * u.transpose();
    Ok(ridge_solve(&gram, lambda_reg, &rhs)?.transpose())
}

#[derive(Clone, Debug)]
pub struct Residual {
    pub u_res: Matrix,
    /// `B = [Q, Q⊥]` for the constrained scheme.
    pub basis: Option<Matrix>,
    pub k_eff: usize,
}

/// Orthonormal basis of the numerical column span of `a` and its rank.
fn anchor_span(a: &Matrix) -> (Matrix, usize) {
    let svd = a.clone().svd(true, false);
    let sigma_max = svd.singular_values.max();
    let k_eff = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * sigma_max)
        .count();
    if k_eff == a.ncols() {
        return (orthonormal_columns(a), k_eff);
    }
    let u = svd.u.expect("requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let q = Matrix::from_fn(a.nrows(), k_eff, |i, j| u[(i, idx[j])]);
    (q, k_eff)
}

/// Orthonormal complement of `q` from a projected Gaussian matrix.
fn complement(q: &Matrix, seed: u64) -> Matrix {
    let n = q.nrows();
    let r = gaussian_matrix(n, n - q.ncols(), &mut rng_from_seed(seed));
    let mut perp = &r - q * (q.transpose() * &r);
    for _ in 0..2 {
        perp = orthonormal_columns(&perp);
        perp -= q * (q.transpose() * &perp);
    }
    orthonormal_columns(&perp)
}

/// Removes the anchor contribution from `u`.
///
/// Subtraction returns `U − A_K·H_K`. Projection returns `(I − P_A)·U` with
/// the ridge projector `P_A = A_K(A_KᵀA_K + λI)⁻¹A_Kᵀ`. The constrained scheme
/// rotates into `B = [Q, Q⊥]` and keeps the `n − k_eff` complement rows of
/// `BᵀU`.
pub fn residualize(
    u: &Matrix,
    a_k: &Matrix,
    h_k: &Matrix,
    method: ResidualMethod,
    lambda_reg: Regularization,
    seed: u64,
) -> Result<Residual> {
    let (n, k) = a_k.shape();
    if n != u.nrows() || h_k.nrows() != k || h_k.ncols() != u.ncols() {
        return Err(GeloError::InvalidDimension(format!(
            "u {:?}, a_k {:?}, h_k {:?}",
            u.shape(),
            a_k.shape(),
            h_k.shape()
        )));
    }
    match method {
        ResidualMethod::Subtraction => Ok(Residual {
            u_res: u - a_k * h_k,
            basis: None,
            k_eff: k,
        }),
        ResidualMethod::Projection => {
            let gram = a_k.transpose() * a_k;
            let lambda = lambda_reg.resolve(gram.trace(), k);
            let coeffs = ridge_solve(&gram, lambda, &(a_k.transpose() * u))?;
            Ok(Residual {
                u_res: u - a_k * coeffs,
                basis: None,
                k_eff: k,
            })
        }
        ResidualMethod::Constrained => {
            let (q, k_eff) = anchor_span(a_k);
            if k_eff >= n {
                return Err(GeloError::EmptyResidual { k_eff, n });
            }
            let q_perp = complement(&q, seed);
            let u_res = q_perp.transpose() * u;
            let mut basis = Matrix::zeros(n, n);
            basis.columns_mut(0, k_eff).copy_from(&q);
            basis.columns_mut(k_eff, n - k_eff).copy_from(&q_perp);
            Ok(Residual {
                u_res,
                basis: Some(basis),
                k_eff,
            })
        }
    }
}

/// `A_K(A_KᵀA_K + λI)⁻¹A_Kᵀ`.
pub fn ridge_projector(a_k: &Matrix, lambda: f64) -> Result<Matrix> {
    let gram = a_k.transpose() * a_k;
    Ok(a_k * ridge_solve(&gram, lambda, &a_k.transpose())?)
}
