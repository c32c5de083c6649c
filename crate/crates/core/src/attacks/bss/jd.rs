use crate::numerics::Matrix;

use super::{joint_diagonalize, weighted_moment};

/// Number of quadratically weighted covariance slices used as targets.
const MAX_TARGETS: usize = 16;

/// Joint diagonalization of `E[z·zᵀ·z_j²]` for the leading coordinates `j`.
pub(super) fn jd(z: &Matrix, max_sweeps: usize) -> (Matrix, bool, usize) {
    let (r, d) = z.shape();
    let mut targets: Vec<Matrix> = (0..r.min(MAX_TARGETS))
        .map(|j| weighted_moment(z, |t| z[(j, t)] * z[(j, t)]))
        .collect();
    let threshold = 1.0 / (d as f64).sqrt() / 100.0;
    let (v, converged, sweeps) = joint_diagonalize(&mut targets, threshold, max_sweeps);
    (v.transpose(), converged, sweeps)
}
