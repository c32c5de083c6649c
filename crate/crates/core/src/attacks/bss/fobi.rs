use crate::error::Result;
use crate::numerics::{eigh, Matrix};

use super::weighted_moment;

/// Eigenvectors of `E[‖z‖²·z·zᵀ]`, as rows.
pub(super) fn fobi(z: &Matrix) -> Result<Matrix> {
    let norms: Vec<f64> = z.column_iter().map(|c| c.norm_squared()).collect();
    let m = weighted_moment(z, |t| norms[t]);
    Ok(eigh(&m)?.eigenvectors.transpose())
}
