use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{GeloError, Result};
use crate::numerics::{Dtype, Matrix, MixingKind, MixingMatrix};

/// Unmixing refuses general matrices at or above this condition number.
pub const DEFAULT_KAPPA_MAX: f64 = 100.0;

static NEXT_BATCH_ID: AtomicU64 = AtomicU64::new(1);

/// Hidden-state rows of one batch, optionally annotated with token ids and a
/// shield mask.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenBatch {
    pub h: Matrix,
    /// One entry per row; shield rows carry `None`.
    pub token_ids: Option<Vec<Option<u32>>>,
    /// `true` marks a shield row.
    pub shield_mask: Option<Vec<bool>>,
}

impl HiddenBatch {
    pub fn new(h: Matrix) -> Self {
        Self {
            h,
            token_ids: None,
            shield_mask: None,
        }
    }

    pub fn with_tokens(h: Matrix, tokens: Vec<u32>) -> Result<Self> {
        if tokens.len() != h.nrows() {
            return Err(GeloError::InvalidDimension(format!(
                "{} token ids for {} rows",
                tokens.len(),
                h.nrows()
            )));
        }
        Ok(Self {
            h,
            token_ids: Some(tokens.into_iter().map(Some).collect()),
            shield_mask: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn cols(&self) -> usize {
        self.h.ncols()
    }

    pub fn shield_rows(&self) -> usize {
        self.shield_mask
            .as_ref()
            .map_or(0, |m| m.iter().filter(|&&s| s).count())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows();
        if let Some(mask) = &self.shield_mask {
            if mask.len() != n {
                return Err(GeloError::InvalidDimension(format!(
                    "shield mask has {} entries for {n} rows",
                    mask.len()
                )));
            }
        }
        if let Some(tokens) = &self.token_ids {
            if tokens.len() != n {
                return Err(GeloError::InvalidDimension(format!(
                    "{} token ids for {n} rows",
                    tokens.len()
                )));
            }
            if let Some(mask) = &self.shield_mask {
                if mask.iter().zip(tokens).any(|(&s, t)| s && t.is_some()) {
                    return Err(GeloError::InvalidInput("shield row carries a token id".into()));
                }
            }
        }
        Ok(())
    }
}

/// What the untrusted side gets to see.
#[derive(Clone, Debug, PartialEq)]
pub struct ObfuscatedBatch {
    pub u: Matrix,
    pub batch_id: u64,
    pub dtype: Dtype,
}

/// `U = A·H` under a fresh batch id.
pub fn mix(a: &MixingMatrix, batch: &HiddenBatch) -> Result<ObfuscatedBatch> {
    if a.n() != batch.rows() {
        return Err(GeloError::InvalidDimension(format!(
            "{}x{} mixing for a batch of {} rows",
            a.n(),
            a.n(),
            batch.rows()
        )));
    }
    Ok(ObfuscatedBatch {
        u: a.matrix() * &batch.h,
        batch_id: NEXT_BATCH_ID.fetch_add(1, Ordering::Relaxed),
        dtype: Dtype::F64,
    })
}

/// `A⁻¹·y` with the default conditioning limit.
pub fn unmix(a: &MixingMatrix, y: &Matrix) -> Result<Matrix> {
    unmix_with_limit(a, y, DEFAULT_KAPPA_MAX)
}

/// `A⁻¹·y`; orthogonal matrices use `Aᵀ·y`, general ones a cached LU solve.
/// General matrices with `κ(A) ≥ kappa_max` are refused.
pub fn unmix_with_limit(a: &MixingMatrix, y: &Matrix, kappa_max: f64) -> Result<Matrix> {
    if a.kind() == MixingKind::General && !(a.condition() < kappa_max) {
        return Err(GeloError::IllConditioned {
            condition: a.condition(),
            limit: kappa_max,
        });
    }
    a.apply_inverse(y)
}
