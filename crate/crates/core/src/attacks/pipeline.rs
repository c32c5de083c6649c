use std::collections::HashSet;

use crate::error::{GeloError, Result};
use crate::metrics::{cosine_stats, gram_error, match_rows};
use crate::numerics::{select_rows, Assignment, Matrix};

use super::{
    backproject, estimate_anchor_mixing, residualize, run_bss, whiten_reduce, AttackConfig, RecoveryResult,
    RecoverySummary,
};

/// Scores estimates against the selected rows of `h_true`.
///
/// Rows are paired by absolute cosine, estimates are sign-flipped onto their
/// partners, and the Gram error is taken over the matched subsets.
pub fn evaluate_estimates(
    h_true: &Matrix,
    truth_rows: &[usize],
    estimates: &Matrix,
) -> Result<(Assignment, Vec<f64>, Vec<f64>, RecoverySummary)> {
    let truth = select_rows(h_true, truth_rows);
    let matched = match_rows(&truth, estimates)?;
    let pairs = &matched.assignment.pairs;
    let truth_sub = select_rows(&truth, &pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let mut est_sub = select_rows(estimates, &pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    for (i, &s) in matched.signs.iter().enumerate() {
        est_sub.row_mut(i).scale_mut(s);
    }
    let stats = cosine_stats(&matched.cosines)?;
    let summary = RecoverySummary {
        median_cos: stats.median,
        p95_cos: stats.p95,
        gram_error: gram_error(&truth_sub, &est_sub)?,
    };
    let pairing = Assignment {
        pairs: pairs.iter().map(|&(t, e)| (truth_rows[t], e)).collect(),
        total_cost: matched.assignment.total_cost,
    };
    Ok((pairing, matched.signs, matched.cosines, summary))
}

fn separate_and_score(
    u_res: &Matrix,
    r: usize,
    h_true: &Matrix,
    truth_rows: &[usize],
    cfg: &AttackConfig,
) -> Result<RecoveryResult> {
    let r = r.min(u_res.nrows());
    let (z_r, state) = whiten_reduce(u_res, r)?;
    let out = run_bss(&z_r, cfg.bss, cfg)?;
    let estimates = backproject(&out.w, &state, u_res)?;
    let (pairing, signs, cosines, summary) = evaluate_estimates(h_true, truth_rows, &estimates)?;
    Ok(RecoveryResult {
        estimates,
        pairing,
        signs,
        cosines,
        summary,
        converged: out.converged,
        rank_warning: state.rank_warning,
    })
}

/// Single-batch separation of all of `u`, scored against every row of
/// `h_true` (the data rows; shield rows are not part of the truth).
pub fn bss_attack(u: &Matrix, h_true: &Matrix, cfg: &AttackConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    check_widths(u, h_true)?;
    if u.nrows() < 2 {
        return Err(GeloError::InvalidDimension("need at least two observed rows".into()));
    }
    let r = cfg.r.unwrap_or(u.nrows() - 1);
    let all: Vec<usize> = (0..h_true.nrows()).collect();
    separate_and_score(u, r, h_true, &all, cfg)
}

/// Anchor-assisted recovery of the non-anchor rows.
///
/// With no anchors this is exactly [`bss_attack`] with `r = n − 1`.
pub fn anchor_attack(u: &Matrix, h_true: &Matrix, anchor_idx: &[usize], cfg: &AttackConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    check_widths(u, h_true)?;
    let n = h_true.nrows();
    let k = anchor_idx.len();
    if k + 1 >= n {
        return Err(GeloError::InsufficientUnknowns { k, n });
    }
    let mut seen = HashSet::new();
    for &i in anchor_idx {
        if i >= n || !seen.insert(i) {
            return Err(GeloError::InvalidInput(format!("anchor index {i} is out of range or repeated")));
        }
    }
    if k == 0 {
        return bss_attack(u, h_true, cfg);
    }
    let h_k = select_rows(h_true, anchor_idx);
    let gram_trace = h_k.norm_squared();
    let a_k = estimate_anchor_mixing(u, &h_k, cfg.lambda_reg.resolve(gram_trace, k))?;
    let residual = residualize(u, &a_k, &h_k, cfg.method, cfg.lambda_reg, cfg.seed)?;
    let unknown: Vec<usize> = (0..n).filter(|i| !seen.contains(i)).collect();
    let r = cfg.r.unwrap_or(u.nrows() - k - 1);
    separate_and_score(&residual.u_res, r, h_true, &unknown, cfg)
}

fn check_widths(u: &Matrix, h_true: &Matrix) -> Result<()> {
    if u.ncols() != h_true.ncols() {
        return Err(GeloError::InvalidDimension(format!(
            "observation width {} vs truth width {}",
            u.ncols(),
            h_true.ncols()
        )));
    }
    Ok(())
}
