use crate::error::{GeloError, Result};
use crate::numerics::{eigh, Matrix};

/// Eigenvalues below this fraction of the largest are floored to it.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Whitening factors needed to lift separated components back.
#[derive(Clone, Debug)]
pub struct WhitenerState {
    /// Eigenvectors of `U_res·U_resᵀ/d`, descending.
    pub v: Matrix,
    /// Eigenvalues after flooring.
    pub lambda: Vec<f64>,
    /// Leading `r` columns of `v`.
    pub u_r: Matrix,
    /// Sample count `d` the covariance was normalized by.
    pub d: usize,
    pub rank_warning: bool,
}

impl WhitenerState {
    fn scaled(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let mut vs = self.v.clone();
        for (j, &l) in self.lambda.iter().enumerate() {
            vs.column_mut(j).scale_mut(f(l));
        }
        vs * self.v.transpose()
    }

    /// `V·Λ^{-1/2}·Vᵀ`.
    pub fn whitener(&self) -> Matrix {
        self.scaled(|l| l.powf(-0.5))
    }

    /// `√d·V·Λ^{1/2}·Vᵀ`.
    pub fn dewhitener(&self) -> Matrix {
        self.scaled(|l| l.sqrt()) * (self.d as f64).sqrt()
    }
}

/// ZCA whitening of the rows of `u_res` followed by projection onto the `r`
/// leading eigen-directions: `Z_r = U_rᵀ·W·U_res`.
pub fn whiten_reduce(u_res: &Matrix, r: usize) -> Result<(Matrix, WhitenerState)> {
    let (m, d) = u_res.shape();
    if r == 0 || r > m {
        return Err(GeloError::InvalidParameter(format!("r={r} outside 1..={m}")));
    }
    if d == 0 {
        return Err(GeloError::InvalidDimension("residual has no columns".into()));
    }
    let cov = (u_res * u_res.transpose()) / d as f64;
    let eig = eigh(&cov)?;
    let lambda_max = eig.eigenvalues[0];
    if !(lambda_max > 0.0) {
        return Err(GeloError::UndefinedMetric("residual has zero energy".into()));
    }
    let floor = EIGEN_FLOOR * lambda_max;
    let rank = eig.eigenvalues.iter().filter(|&&l| l > floor).count();
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(floor)).collect();
    let u_r = eig.eigenvectors.columns(0, r).into_owned();
    let state = WhitenerState {
        v: eig.eigenvectors,
        lambda,
        u_r,
        d,
        rank_warning: r > rank,
    };
    let z = state.whitener() * u_res;
    Ok((state.u_r.transpose() * &z, state))
}

/// Lifts a whitened-space rotation back to row estimates:
/// `R_full = U_r·W_r·U_rᵀ + (I − U_r·U_rᵀ)`, `Â = W⁻¹·R_fullᵀ`, `X̂ = Âᵀ·U`.
pub fn backproject(w_r: &Matrix, state: &WhitenerState, u_for_lift: &Matrix) -> Result<Matrix> {
    let m = state.v.nrows();
    let r = state.u_r.ncols();
    if w_r.shape() != (r, r) || u_for_lift.nrows() != m {
        return Err(GeloError::InvalidDimension(format!(
            "w_r {:?} and lift rows {} for a whitener of {m} rows and r={r}",
            w_r.shape(),
            u_for_lift.nrows()
        )));
    }
    let u_r = &state.u_r;
    let r_full = u_r * w_r * u_r.transpose() + Matrix::identity(m, m) - u_r * u_r.transpose();
    let a_hat = state.dewhitener() * r_full.transpose();
    Ok(a_hat.transpose() * u_for_lift)
}
