//! Evaluation: matched-row cosine statistics, Gram error, covariance leak,
//! participation ratio and the per-token cost model.

mod complexity;
mod matching;

pub use complexity::{crossover_length, ComplexityModel, CrossoverReport};
pub use matching::{match_rows, RowMatch};

use crate::error::{GeloError, Result};
use crate::numerics::{center_columns, Matrix};

/// Median and 95th percentile of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineStats {
    pub median: f64,
    pub p95: f64,
}

/// Percentile by linear interpolation between order statistics at position
/// `q·(N−1)` (the inclusive method). `sorted` must be ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn cosine_stats(cosines: &[f64]) -> Result<CosineStats> {
    if cosines.is_empty() {
        return Err(GeloError::InvalidInput("no cosines".into()));
    }
    let mut v = cosines.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(CosineStats {
        median: percentile_sorted(&v, 0.5),
        p95: percentile_sorted(&v, 0.95),
    })
}

/// `‖E·Eᵀ − T·Tᵀ‖_F / ‖T·Tᵀ‖_F` on row-side Gram matrices of matched rows.
pub fn gram_error(truth_sub: &Matrix, est_sub: &Matrix) -> Result<f64> {
    if truth_sub.shape() != est_sub.shape() {
        return Err(GeloError::InvalidDimension(format!(
            "truth {:?} vs estimate {:?}",
            truth_sub.shape(),
            est_sub.shape()
        )));
    }
    let g_true = truth_sub * truth_sub.transpose();
    let denom = g_true.norm();
    if denom == 0.0 {
        return Err(GeloError::UndefinedMetric("truth Gram matrix is zero".into()));
    }
    let g_est = est_sub * est_sub.transpose();
    Ok((g_est - g_true).norm() / denom)
}

/// `‖UᵀU − HᵀH‖_F / ‖HᵀH‖_F`: zero means the feature covariance is exposed
/// exactly by the observation.
pub fn covariance_leak(u: &Matrix, h: &Matrix) -> Result<f64> {
    if u.ncols() != h.ncols() {
        return Err(GeloError::InvalidDimension(format!(
            "observation width {} vs data width {}",
            u.ncols(),
            h.ncols()
        )));
    }
    let hth = h.transpose() * h;
    let denom = hth.norm();
    if denom == 0.0 {
        return Err(GeloError::UndefinedMetric("data covariance is zero".into()));
    }
    Ok(((u.transpose() * u) - hth).norm() / denom)
}

/// `(Σλ)² / Σλ²` over eigenvalues of the mean-centered covariance.
///
/// Computed from `tr(C)² / ‖C‖_F²`, which equals the eigenvalue form for a
/// symmetric `C`; the smaller of the two Gram sides is used.
pub fn participation_ratio(h: &Matrix) -> Result<f64> {
    if h.nrows() < 2 {
        return Err(GeloError::InvalidInput("participation ratio needs at least 2 rows".into()));
    }
    let x = center_columns(h);
    let c = if x.nrows() < x.ncols() {
        &x * x.transpose()
    } else {
        x.transpose() * &x
    };
    let sq = c.norm_squared();
    if sq == 0.0 {
        return Err(GeloError::UndefinedMetric("covariance is zero".into()));
    }
    Ok(c.trace().powi(2) / sq)
}
