use nalgebra::{DVector, Dyn, LU};
use rand::Rng;

use super::{condition_number, gaussian_matrix, orthogonality_defect, rng_from_seed, derive_seed, Matrix};
use crate::error::{GeloError, Result};

/// Headroom kept below `kappa_max` so rounding never pushes κ over the bound.
pub const KAPPA_MARGIN: f64 = 0.01;

const ORTHOGONAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingKind {
    Orthogonal,
    General,
}

/// A per-batch secret `n×n` invertible transform.
#[derive(Clone, Debug)]
pub struct MixingMatrix {
    a: Matrix,
    kind: MixingKind,
    condition: f64,
    seed: u64,
    lu: Option<LU<f64, Dyn, Dyn>>,
}

impl MixingMatrix {
    /// Wraps a known orthogonal matrix (permutations, identity, test fixtures).
    pub fn orthogonal(a: Matrix) -> Result<Self> {
        check_square(&a)?;
        let defect = orthogonality_defect(&a);
        if defect > ORTHOGONAL_TOL {
            return Err(GeloError::InvalidInput(format!(
                "matrix is not orthogonal (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            a,
            kind: MixingKind::Orthogonal,
            condition: 1.0,
            seed: 0,
            lu: None,
        })
    }

    /// Wraps an arbitrary invertible matrix, measuring its condition number.
    pub fn general(a: Matrix) -> Result<Self> {
        check_square(&a)?;
        let condition = condition_number(&a)?;
        if !condition.is_finite() {
            return Err(GeloError::SingularMatrix);
        }
        let lu = Some(a.clone().lu());
        Ok(Self {
            a,
            kind: MixingKind::General,
            condition,
            seed: 0,
            lu,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn kind(&self) -> MixingKind {
        self.kind
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Solves `A·X = y` using the transpose for orthogonal matrices and the
    /// cached LU factors otherwise.
    pub fn apply_inverse(&self, y: &Matrix) -> Result<Matrix> {
        if y.nrows() != self.n() {
            return Err(GeloError::InvalidDimension(format!(
                "{} rows against a {}x{} mixing matrix",
                y.nrows(),
                self.n(),
                self.n()
            )));
        }
        match self.kind {
            MixingKind::Orthogonal => Ok(self.a.transpose() * y),
            MixingKind::General => {
                let lu = self.lu.as_ref().expect("general mixing caches its LU factors");
                let x = lu.solve(y).ok_or(GeloError::SingularMatrix)?;
                if x.iter().all(|v| v.is_finite()) {
                    Ok(x)
                } else {
                    Err(GeloError::SingularMatrix)
                }
            }
        }
    }
}

fn check_square(a: &Matrix) -> Result<()> {
    if !a.is_square() || a.is_empty() {
        return Err(GeloError::InvalidDimension(format!(
            "mixing matrix must be square and non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn haar(n: usize, seed: u64) -> Matrix {
    // O(1) = {±1}; the 1×1 case is pinned to +1.
    if n == 1 {
        return Matrix::identity(1, 1);
    }
    let g = gaussian_matrix(n, n, &mut rng_from_seed(seed));
    let qr = faer::Mat::<f64>::from_fn(n, n, |i, j| g[(i, j)]).qr();
    let r = qr.R();
    let q = qr.compute_Q();
    Matrix::from_fn(n, n, |i, j| if r[(j, j)] < 0.0 { -q[(i, j)] } else { q[(i, j)] })
}

/// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian
/// matrix, with the sign of each column fixed so that `R` has a nonnegative
/// diagonal.
pub fn sample_orthogonal(n: usize, seed: u64) -> Result<MixingMatrix> {
    if n == 0 {
        return Err(GeloError::InvalidDimension("n must be at least 1".into()));
    }
    Ok(MixingMatrix {
        a: haar(n, seed),
        kind: MixingKind::Orthogonal,
        condition: 1.0,
        seed,
        lu: None,
    })
}

/// General invertible matrix `Q₁·diag(σ)·Q₂ᵀ` with κ below `kappa_max`.
///
/// `σ` spans `[1, kappa_max·(1 − KAPPA_MARGIN)]`: the two extremes are pinned
/// and the interior values are log-uniform. The condition number is then
/// measured from the product and checked against the bound.
pub fn sample_invertible(n: usize, kappa_max: f64, seed: u64) -> Result<MixingMatrix> {
    if n == 0 {
        return Err(GeloError::InvalidDimension("n must be at least 1".into()));
    }
    if !(kappa_max >= 1.0) || !kappa_max.is_finite() {
        return Err(GeloError::InvalidParameter(format!(
            "kappa_max must be a finite value >= 1, got {kappa_max}"
        )));
    }
    let upper = (kappa_max * (1.0 - KAPPA_MARGIN)).max(1.0);
    let log_upper = upper.ln();
    let mut rng = rng_from_seed(derive_seed(seed, 2));
    let sigma: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => upper,
            _ if i == n - 1 => 1.0,
            _ => (rng.random::<f64>() * log_upper).exp(),
        })
        .collect();
    let sigma = if n == 1 { vec![1.0] } else { sigma };

    let q1 = haar(n, derive_seed(seed, 0));
    let q2 = haar(n, derive_seed(seed, 1));
    let a = q1 * Matrix::from_diagonal(&DVector::from_vec(sigma)) * q2.transpose();

    let condition = condition_number(&a)?;
    // kappa_max == 1 can only be met with equality; anything above must be strict.
    let within = condition < kappa_max || (kappa_max - 1.0).abs() < 1e-9 && condition < 1.0 + 1e-9;
    if !within {
        return Err(GeloError::IllConditioned {
            condition,
            limit: kappa_max,
        });
    }
    let lu = Some(a.clone().lu());
    Ok(MixingMatrix {
        a,
        kind: MixingKind::General,
        condition,
        seed,
        lu,
    })
}
