//! The adversary: anchor-based recovery and single-batch blind source
//! separation against obfuscated batches.
//!
//! Every attack works on the untrusted view `U` only. Ground truth enters in
//! two places: the declared anchor rows, and the final matching step that
//! scores recovered rows against the true ones.

mod anchor;
pub mod bss;
mod pipeline;
pub mod sweep;
mod whiten;

pub use anchor::{estimate_anchor_mixing, residualize, ridge_projector, Residual};
pub use bss::{run_bss, BssOutput};
pub use pipeline::{anchor_attack, bss_attack, evaluate_estimates};
pub use whiten::{backproject, whiten_reduce, WhitenerState, EIGEN_FLOOR};

use std::fmt;
use std::str::FromStr;

use crate::error::{GeloError, Result};
use crate::numerics::{Assignment, Matrix};

/// How the anchor contribution is removed before separation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResidualMethod {
    Subtraction,
    Projection,
    Constrained,
}

impl ResidualMethod {
    pub const ALL: [ResidualMethod; 3] = [Self::Subtraction, Self::Projection, Self::Constrained];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Subtraction => "subtraction",
            Self::Projection => "projection",
            Self::Constrained => "constrained",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BssMethod {
    FastIca,
    Fobi,
    Jade,
    Jd,
}

impl BssMethod {
    pub const ALL: [BssMethod; 4] = [Self::FastIca, Self::Fobi, Self::Jade, Self::Jd];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FastIca => "fastica",
            Self::Fobi => "fobi",
            Self::Jade => "jade",
            Self::Jd => "jd",
        }
    }
}

macro_rules! parse_by_name {
    ($ty:ty) => {
        impl FromStr for $ty {
            type Err = GeloError;

            fn from_str(s: &str) -> Result<Self> {
                <$ty>::ALL
                    .into_iter()
                    .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| GeloError::InvalidParameter(format!("unknown method {s:?}")))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

parse_by_name!(ResidualMethod);
parse_by_name!(BssMethod);

/// Ridge strength, either absolute or relative to `trace(G)/k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularization {
    Absolute(f64),
    Relative(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Relative(1e-3)
    }
}

impl Regularization {
    /// Resolves against a `k×k` Gram matrix with the given trace.
    pub fn resolve(self, trace: f64, k: usize) -> f64 {
        match self {
            Regularization::Absolute(l) => l,
            Regularization::Relative(rel) => {
                let scale = trace / k.max(1) as f64;
                if scale > 0.0 {
                    rel * scale
                } else {
                    rel
                }
            }
        }
    }

    fn validate(self) -> Result<()> {
        let v = match self {
            Regularization::Absolute(v) | Regularization::Relative(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(GeloError::InvalidParameter(format!("regularization {v} must be positive")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackConfig {
    pub method: ResidualMethod,
    pub bss: BssMethod,
    pub lambda_reg: Regularization,
    /// Reduced row dimension; defaults to `n − k − 1`.
    pub r: Option<usize>,
    pub ica_tol: f64,
    pub ica_max_iter: usize,
    /// Largest whitened dimension JADE accepts; its cumulant matrix is `r²×r²`.
    pub jade_max_dim: usize,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            method: ResidualMethod::Subtraction,
            bss: BssMethod::FastIca,
            lambda_reg: Regularization::default(),
            r: None,
            ica_tol: 1e-5,
            ica_max_iter: 500,
            jade_max_dim: 40,
            seed: 0,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        self.lambda_reg.validate()?;
        if !(self.ica_tol > 0.0) {
            return Err(GeloError::InvalidParameter("ica_tol must be positive".into()));
        }
        if self.ica_max_iter == 0 {
            return Err(GeloError::InvalidParameter("ica_max_iter must be positive".into()));
        }
        if self.r == Some(0) {
            return Err(GeloError::InvalidParameter("r must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoverySummary {
    pub median_cos: f64,
    pub p95_cos: f64,
    pub gram_error: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    /// Back-projected rows, one per residual row.
    pub estimates: Matrix,
    /// `(row of h_true, row of estimates)`.
    pub pairing: Assignment,
    pub signs: Vec<f64>,
    pub cosines: Vec<f64>,
    pub summary: RecoverySummary,
    pub converged: bool,
    /// Set when `r` exceeded the numerical rank of the residual.
    pub rank_warning: bool,
}
