use crate::error::Result;
use crate::numerics::{eigh, Matrix};

use super::joint_diagonalize;

/// Fourth-order cumulants of whitened data as an `r²×r²` matrix indexed by
/// `(i·r + j, k·r + l)`.
fn cumulant_matrix(z: &Matrix) -> Matrix {
    let (r, d) = z.shape();
    let products = Matrix::from_fn(r * r, d, |ij, t| z[(ij / r, t)] * z[(ij % r, t)]);
    let mut q = &products * products.transpose() / d as f64;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                for l in 0..r {
                    q[(i * r + j, k * r + l)] -= delta(i, j) * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
                }
            }
        }
    }
    q
}

/// JADE: joint diagonalization of the `r` dominant eigen-matrices of the
/// cumulant tensor, each weighted by its eigenvalue.
pub(super) fn jade(z: &Matrix, max_sweeps: usize) -> Result<(Matrix, bool, usize)> {
    let (r, d) = z.shape();
    let q = cumulant_matrix(z);
    let q = (&q + q.transpose()) * 0.5;
    let eig = eigh_signed(&q)?;
    let mut slices: Vec<Matrix> = eig
        .into_iter()
        .take(r)
        .map(|(value, vec)| {
            let m = Matrix::from_fn(r, r, |i, j| vec[i * r + j]);
            (&m + m.transpose()) * (0.5 * value)
        })
        .collect();
    let threshold = 1.0 / (d as f64).sqrt() / 100.0;
    let (v, converged, sweeps) = joint_diagonalize(&mut slices, threshold, max_sweeps);
    Ok((v.transpose(), converged, sweeps))
}

/// Eigenpairs of a symmetric, possibly indefinite matrix sorted by
/// decreasing `|λ|`.
fn eigh_signed(q: &Matrix) -> Result<Vec<(f64, Vec<f64>)>> {
    // eigh clamps negative eigenvalues, so shift by a bound on the spectral
    // radius to keep every eigenvalue nonnegative, then undo the shift.
    let n = q.nrows();
    let shift = q.norm();
    let shifted = q + Matrix::identity(n, n) * shift;
    let eig = eigh(&shifted)?;
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&l, v)| (l - shift, v.iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.abs().total_cmp(&a.0.abs()));
    Ok(pairs)
}
