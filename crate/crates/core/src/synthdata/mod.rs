//! Synthetic hidden states and token streams.
//!
//! Hidden states follow two structural priors of real decoder activations:
//! rows sit on a thin norm shell and the batch covariance has a small
//! participation ratio. Factors can be made super-Gaussian so that ICA has
//! something to find.

mod dataset;
mod tokens;

pub use dataset::{read_dataset, read_token_stream, write_dataset, write_token_stream, GELD_MAGIC, GELD_VERSION};
pub use tokens::{duplicate_report, gen_token_stream, DuplicateReport, TokenStreamSpec};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{GeloError, Result};
use crate::numerics::{derive_seed, rng_from_seed, sample_orthogonal, Matrix};
use crate::protocol::HiddenBatch;

#[derive(Clone, Debug, PartialEq)]
pub struct HiddenStatePrior {
    pub d: usize,
    /// Target participation ratio of the covariance spectrum.
    pub r_eff: f64,
    /// Target mean row norm.
    pub radius: f64,
    /// Target coefficient of variation of row norms.
    pub norm_cv: f64,
    /// 0 gives Gaussian factors; larger values give heavier tails.
    pub heavy_tail: f64,
    pub seed: u64,
}

impl Default for HiddenStatePrior {
    fn default() -> Self {
        Self {
            d: 256,
            r_eff: 16.0,
            radius: 24.0,
            norm_cv: 0.039,
            heavy_tail: 0.5,
            seed: 0,
        }
    }
}

impl HiddenStatePrior {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(GeloError::InvalidDimension("d must be positive".into()));
        }
        if !(self.r_eff >= 1.0 && self.r_eff <= self.d as f64) {
            return Err(GeloError::InvalidParameter(format!(
                "r_eff {} must lie in [1, d={}]",
                self.r_eff, self.d
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GeloError::InvalidParameter(format!("radius {} must be positive", self.radius)));
        }
        if !(self.norm_cv >= 0.0 && self.norm_cv.is_finite()) {
            return Err(GeloError::InvalidParameter(format!("norm_cv {} must be nonnegative", self.norm_cv)));
        }
        if !(self.heavy_tail >= 0.0 && self.heavy_tail.is_finite()) {
            return Err(GeloError::InvalidParameter(format!(
                "heavy_tail {} must be nonnegative",
                self.heavy_tail
            )));
        }
        Ok(())
    }

    fn factor_law(&self) -> (Gamma<f64>, f64) {
        let beta = 2.0 / (1.0 + self.heavy_tail);
        (Gamma::new(1.0 / beta, 1.0).expect("shape is positive"), beta)
    }

    /// Per-factor standard deviations `λ_j = ρ^{j/2}`.
    ///
    /// Rescaling rows onto the norm shell flattens the covariance spectrum, so
    /// `ρ` is bisected against the participation ratio of the normalized
    /// covariance rather than of `λ²` itself. That covariance is diagonal in
    /// expectation with entries `E[λᵢ²zᵢ² / Σⱼλⱼ²zⱼ²]`, estimated here from a
    /// fixed calibration draw.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let d = self.d;
        let rho = if self.r_eff >= d as f64 {
            1.0
        } else {
            let (gamma, beta) = self.factor_law();
            let mut rng = rng_from_seed(derive_seed(self.seed, 3));
            let sq: Vec<f64> = (0..CALIBRATION_ROWS * d)
                .map(|_| generalized_gaussian(&gamma, beta, &mut rng).powi(2))
                .collect();
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if normalized_pr(&sq, d, mid) < self.r_eff {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        Ok((0..d).map(|j| rho.powf(j as f64 / 2.0)).collect())
    }
}

const CALIBRATION_ROWS: usize = 2048;

/// Participation ratio of `E[y yᵀ/‖y‖²]` with `yⱼ² = ρʲ·zⱼ²`.
fn normalized_pr(sq: &[f64], d: usize, rho: f64) -> f64 {
    let weights: Vec<f64> = (0..d).map(|j| rho.powi(j as i32)).collect();
    let mut diag = vec![0.0; d];
    for row in sq.chunks_exact(d) {
        let total: f64 = row.iter().zip(&weights).map(|(z, w)| z * w).sum();
        if total > 0.0 {
            for ((acc, z), w) in diag.iter_mut().zip(row).zip(&weights) {
                *acc += z * w / total;
            }
        }
    }
    let s1: f64 = diag.iter().sum();
    let s2: f64 = diag.iter().map(|x| x * x).sum();
    s1 * s1 / s2
}

/// Generalized Gaussian variate with density proportional to `exp(−|x|^β)`.
fn generalized_gaussian<R: Rng + ?Sized>(gamma: &Gamma<f64>, beta: f64, rng: &mut R) -> f64 {
    let magnitude = gamma.sample(rng).powf(1.0 / beta);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Draws `n` rows `x = V·(λ ⊙ z)` and rescales each to norm
/// `radius·(1 + norm_cv·g)`.
///
/// `V` is a Haar-random `d×d` basis fixed by the seed. The shape parameter of
/// the factors is `β = 2/(1 + heavy_tail)`.
pub fn gen_hidden_states(n: usize, prior: &HiddenStatePrior) -> Result<HiddenBatch> {
    prior.validate()?;
    if n < 2 {
        return Err(GeloError::InvalidDimension(format!("need at least 2 rows, got {n}")));
    }
    let d = prior.d;
    let lambda = prior.spectrum()?;
    let basis = sample_orthogonal(d, derive_seed(prior.seed, 0))?;

    let mut factor_rng = rng_from_seed(derive_seed(prior.seed, 1));
    let (gamma, beta) = prior.factor_law();
    let z = Matrix::from_fn(n, d, |_, j| lambda[j] * generalized_gaussian(&gamma, beta, &mut factor_rng));
    let mut h = z * basis.matrix().transpose();

    let mut norm_rng = rng_from_seed(derive_seed(prior.seed, 2));
    for i in 0..n {
        let g: f64 = StandardNormal.sample(&mut norm_rng);
        let target = prior.radius * (1.0 + prior.norm_cv * g);
        let norm = h.row(i).norm();
        if norm > 0.0 {
            h.row_mut(i).scale_mut(target / norm);
        }
    }
    Ok(HiddenBatch::new(h))
}
