use crate::error::{GeloError, Result};
use crate::numerics::{hungarian, Assignment, Matrix};

/// Hungarian pairing of truth rows to estimate rows by absolute cosine.
#[derive(Clone, Debug)]
pub struct RowMatch {
    /// `(truth row, estimate row)` pairs.
    pub assignment: Assignment,
    /// Sign of the raw cosine per pair (`+1` for zero).
    pub signs: Vec<f64>,
    /// Absolute cosine per pair.
    pub cosines: Vec<f64>,
}

fn unit_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        let norm = m.row(i).norm();
        if norm > 0.0 {
            out.row_mut(i).unscale_mut(norm);
        } else {
            out.row_mut(i).fill(0.0);
        }
    }
    out
}

/// Cost `1 − |cos(truthᵢ, estⱼ)|`; zero-norm rows have cosine 0.
pub fn match_rows(truth: &Matrix, estimates: &Matrix) -> Result<RowMatch> {
    if truth.ncols() != estimates.ncols() {
        return Err(GeloError::InvalidDimension(format!(
            "truth width {} vs estimate width {}",
            truth.ncols(),
            estimates.ncols()
        )));
    }
    if truth.nrows() == 0 || estimates.nrows() == 0 {
        return Err(GeloError::InvalidInput("nothing to match".into()));
    }
    let cos = unit_rows(truth) * unit_rows(estimates).transpose();
    let cost = cos.map(|c| 1.0 - c.abs().min(1.0));
    let assignment = hungarian(&cost)?;
    let (signs, cosines) = assignment
        .pairs
        .iter()
        .map(|&(i, j)| {
            let c = cos[(i, j)];
            (if c < 0.0 { -1.0 } else { 1.0 }, c.abs())
        })
        .unzip();
    Ok(RowMatch {
        assignment,
        signs,
        cosines,
    })
}
