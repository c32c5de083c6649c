use crate::error::Result;
use crate::numerics::{eigh, sample_orthogonal, Matrix};

/// `(W·Wᵀ)^{-1/2}·W`.
fn symmetric_decorrelation(w: &Matrix) -> Result<Matrix> {
    let eig = eigh(&(w * w.transpose()))?;
    let floor = 1e-12 * eig.eigenvalues[0].max(f64::MIN_POSITIVE);
    let mut scaled = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.max(floor).powf(-0.5));
    }
    Ok(scaled * eig.eigenvectors.transpose() * w)
}

/// Symmetric fixed-point FastICA with the logcosh contrast.
///
/// Each step sets `W ← E[g(WZ)·Zᵀ] − diag(E[g′(WZ)])·W` with `g = tanh` and
/// re-orthogonalizes. It stops once `max |1 − |diag(W_new·W_oldᵀ)||` falls
/// below `tol`.
pub(super) fn fastica(z: &Matrix, tol: f64, max_iter: usize, seed: u64) -> Result<(Matrix, bool, usize)> {
    let (r, d) = z.shape();
    let inv_d = 1.0 / d as f64;
    let mut w = sample_orthogonal(r, seed)?.matrix().clone();
    for iter in 1..=max_iter {
        let mut g = &w * z;
        let mut g_prime_mean = vec![0.0; r];
        for (i, mean) in g_prime_mean.iter_mut().enumerate() {
            let mut row = g.row_mut(i);
            let mut acc = 0.0;
            for x in row.iter_mut() {
                let t = x.tanh();
                *x = t;
                acc += 1.0 - t * t;
            }
            *mean = acc * inv_d;
        }
        let mut w_new = g * z.transpose() * inv_d;
        for i in 0..r {
            let scaled = w.row(i) * g_prime_mean[i];
            let mut row = w_new.row_mut(i);
            row -= scaled;
        }
        let w_new = symmetric_decorrelation(&w_new)?;
        let lim = (0..r)
            .map(|i| (1.0 - w_new.row(i).dot(&w.row(i)).abs()).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < tol {
            return Ok((w, true, iter));
        }
    }
    Ok((w, false, max_iter))
}
