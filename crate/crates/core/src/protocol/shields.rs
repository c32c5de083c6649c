use rand_distr::{Distribution, StandardNormal};

use super::HiddenBatch;
use crate::error::{GeloError, Result};
use crate::numerics::{rng_from_seed, Matrix};

/// Shield padding parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShieldConfig {
    /// Shield rows as a fraction of the padded batch, in `[0, 1)`.
    pub fraction: f64,
    /// Shield row norm as a multiple of the mean data row norm.
    pub scale: f64,
    pub seed: u64,
}

impl Default for ShieldConfig {
    fn default() -> Self {
        Self {
            fraction: 0.05,
            scale: 10.0,
            seed: 0,
        }
    }
}

impl ShieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.fraction) {
            return Err(GeloError::InvalidParameter(format!(
                "shield fraction must be in [0, 1), got {}",
                self.fraction
            )));
        }
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(GeloError::InvalidParameter(format!(
                "shield scale must be finite and >= 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Number of shield rows appended to `n_data` rows, so that shields make up
/// `fraction` of the padded batch (padded size rounded half-up).
pub fn shield_count(n_data: usize, fraction: f64) -> usize {
    if fraction <= 0.0 {
        return 0;
    }
    let n_final = (n_data as f64 / (1.0 - fraction) + 0.5).floor() as usize;
    n_final.saturating_sub(n_data)
}

/// Appends Gaussian shield rows `S` below the data: `[H_data; S]`.
///
/// Every shield row has norm exactly `scale × mean data row norm`.
pub fn pad_shields(data: &HiddenBatch, cfg: &ShieldConfig) -> Result<HiddenBatch> {
    cfg.validate()?;
    data.validate()?;
    if data.shield_rows() > 0 {
        return Err(GeloError::InvalidInput("batch already carries shield rows".into()));
    }
    let (n, d) = (data.rows(), data.cols());
    let k = shield_count(n, cfg.fraction);

    let mean_norm = if n == 0 {
        0.0
    } else {
        (0..n).map(|i| data.h.row(i).norm()).sum::<f64>() / n as f64
    };
    let target = cfg.scale * mean_norm;

    let mut rng = rng_from_seed(cfg.seed);
    let mut h = Matrix::zeros(n + k, d);
    h.rows_mut(0, n).copy_from(&data.h);
    for i in n..n + k {
        let mut row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let factor = if norm > 0.0 { target / norm } else { 0.0 };
        row.iter_mut().for_each(|v| *v *= factor);
        for (j, v) in row.into_iter().enumerate() {
            h[(i, j)] = v;
        }
    }

    let mut mask = data.shield_mask.clone().unwrap_or_else(|| vec![false; n]);
    mask.resize(n + k, true);
    let token_ids = data.token_ids.clone().map(|mut t| {
        t.resize(n + k, None);
        t
    });
    Ok(HiddenBatch {
        h,
        token_ids,
        shield_mask: Some(mask),
    })
}

/// Keeps the rows whose mask entry is `false`, in order.
pub fn strip_shields(q: &Matrix, mask: &[bool]) -> Result<Matrix> {
    if mask.len() != q.nrows() {
        return Err(GeloError::InvalidDimension(format!(
            "mask of length {} for {} rows",
            mask.len(),
            q.nrows()
        )));
    }
    let keep: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (!s).then_some(i))
        .collect();
    Ok(crate::numerics::select_rows(q, &keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, sample_orthogonal};
    use crate::protocol::{mix, unmix};

    fn data(n: usize, d: usize) -> HiddenBatch {
        HiddenBatch::new(gaussian_matrix(n, d, &mut rng_from_seed(n as u64)))
    }

    #[test]
    fn zero_fraction_is_identity() {
        let batch = data(10, 4);
        let cfg = ShieldConfig { fraction: 0.0, ..Default::default() };
        let padded = pad_shields(&batch, &cfg).unwrap();
        assert_eq!(padded.h, batch.h);
        assert_eq!(padded.shield_rows(), 0);
    }

    #[test]
    fn count_for_243_rows() {
        assert_eq!(shield_count(243, 0.05), 13);
        let padded = pad_shields(&data(243, 8), &ShieldConfig::default()).unwrap();
        assert_eq!(padded.rows(), 256);
        assert_eq!(padded.shield_rows(), 13);
        assert!(padded.shield_mask.as_ref().unwrap()[243..].iter().all(|&s| s));
    }

    #[test]
    fn bad_fraction_rejected() {
        let cfg = ShieldConfig { fraction: 1.0, ..Default::default() };
        assert!(matches!(pad_shields(&data(4, 2), &cfg), Err(GeloError::InvalidParameter(_))));
    }

    #[test]
    fn already_shielded_rejected() {
        let padded = pad_shields(&data(40, 4), &ShieldConfig::default()).unwrap();
        assert!(pad_shields(&padded, &ShieldConfig::default()).is_err());
    }

    #[test]
    fn shield_norms_are_exact() {
        let batch = data(100, 16);
        let cfg = ShieldConfig { fraction: 0.1, scale: 4.0, seed: 3 };
        let padded = pad_shields(&batch, &cfg).unwrap();
        let mean: f64 = (0..100).map(|i| batch.h.row(i).norm()).sum::<f64>() / 100.0;
        for i in 100..padded.rows() {
            let ratio = padded.h.row(i).norm() / (4.0 * mean);
            assert!((0.999..=1.001).contains(&ratio));
        }
    }

    #[test]
    fn gram_sum_identity() {
        let batch = data(60, 12);
        let padded = pad_shields(&batch, &ShieldConfig { seed: 9, ..Default::default() }).unwrap();
        let a = sample_orthogonal(padded.rows(), 4).unwrap();
        let u = mix(&a, &padded).unwrap().u;
        let s = padded.h.rows(60, padded.rows() - 60).into_owned();
        let expected = batch.h.transpose() * &batch.h + s.transpose() * &s;
        assert!((u.transpose() * &u - &expected).norm() / expected.norm() <= 1e-9);
    }

    #[test]
    fn strip_examples() {
        let q = gaussian_matrix(5, 3, &mut rng_from_seed(1));
        assert_eq!(strip_shields(&q, &[false; 5]).unwrap(), q);
        let stripped = strip_shields(&q, &[false, false, false, true, true]).unwrap();
        assert_eq!(stripped, q.rows(0, 3).into_owned());
        assert!(matches!(strip_shields(&q, &[false; 4]), Err(GeloError::InvalidDimension(_))));
    }

    #[test]
    fn pad_mix_unmix_strip_round_trip() {
        let batch = data(37, 9);
        let padded = pad_shields(&batch, &ShieldConfig { fraction: 0.2, scale: 10.0, seed: 2 }).unwrap();
        let a = sample_orthogonal(padded.rows(), 5).unwrap();
        let back = unmix(&a, &mix(&a, &padded).unwrap().u).unwrap();
        let data_rows = strip_shields(&back, padded.shield_mask.as_ref().unwrap()).unwrap();
        assert!((data_rows - &batch.h).norm() / batch.h.norm() <= 1e-10);
    }
}
