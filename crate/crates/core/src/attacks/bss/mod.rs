//! Separation in whitened space. Every method returns an orthogonal `r×r`
//! unmixing matrix.

mod fastica;
mod fobi;
mod jacobi;
mod jade;
mod jd;

pub use jacobi::joint_diagonalize;

use crate::error::{GeloError, Result};
use crate::numerics::Matrix;

use super::{AttackConfig, BssMethod};

#[derive(Clone, Debug)]
pub struct BssOutput {
    /// Orthogonal unmixing matrix in whitened space.
    pub w: Matrix,
    /// Components `w·z`.
    pub s: Matrix,
    pub converged: bool,
    pub iterations: usize,
}

/// Rotation sweeps allowed for the Jacobi-based methods.
const JACOBI_MAX_SWEEPS: usize = 100;

pub fn run_bss(z_r: &Matrix, bss: BssMethod, cfg: &AttackConfig) -> Result<BssOutput> {
    let (r, d) = z_r.shape();
    if r == 0 || d == 0 {
        return Err(GeloError::InvalidDimension(format!("cannot separate a {r}x{d} input")));
    }
    let (w, converged, iterations) = match bss {
        BssMethod::FastIca => fastica::fastica(z_r, cfg.ica_tol, cfg.ica_max_iter, cfg.seed)?,
        BssMethod::Fobi => (fobi::fobi(z_r)?, true, 1),
        BssMethod::Jade => {
            if r > cfg.jade_max_dim {
                return Err(GeloError::DimensionTooLarge {
                    method: "jade",
                    dim: r,
                    limit: cfg.jade_max_dim,
                });
            }
            jade::jade(z_r, JACOBI_MAX_SWEEPS)?
        }
        BssMethod::Jd => jd::jd(z_r, JACOBI_MAX_SWEEPS),
    };
    let s = &w * z_r;
    Ok(BssOutput {
        w,
        s,
        converged,
        iterations,
    })
}

/// `E[z zᵀ·f(t)]` over sample columns `t`, with per-sample weights.
fn weighted_moment(z: &Matrix, weights: impl Fn(usize) -> f64) -> Matrix {
    let d = z.ncols();
    let mut scaled = z.clone();
    for t in 0..d {
        scaled.column_mut(t).scale_mut(weights(t));
    }
    scaled * z.transpose() / d as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, rng_from_seed};
    use crate::attacks::whiten_reduce;

    #[test]
    fn every_method_is_orthogonal_and_unit_variance() {
        use rand::Rng;
        let mut rng = rng_from_seed(1);
        let src = Matrix::from_fn(4, 3000, |i, _| match i {
            0 => rng.random_range(-1.0..1.0),
            1 => {
                let u: f64 = rng.random_range(-0.5..0.5);
                -u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            _ => rng.random::<f64>().powi(3),
        });
        let mixing = gaussian_matrix(4, 4, &mut rng_from_seed(2));
        let (z, _) = whiten_reduce(&(mixing * src), 4).unwrap();
        for bss in BssMethod::ALL {
            let out = run_bss(&z, bss, &AttackConfig::default()).unwrap();
            let defect = (&out.w * out.w.transpose() - Matrix::identity(4, 4)).norm();
            assert!(defect <= 1e-6, "{bss}: {defect}");
            let var = &out.s * out.s.transpose() / 3000.0;
            for i in 0..4 {
                assert!((var[(i, i)] - 1.0).abs() < 0.05, "{bss}");
            }
        }
    }

    #[test]
    fn jade_dimension_cap() {
        let z = gaussian_matrix(6, 50, &mut rng_from_seed(3));
        let cfg = AttackConfig { jade_max_dim: 5, ..Default::default() };
        assert!(matches!(
            run_bss(&z, BssMethod::Jade, &cfg),
            Err(GeloError::DimensionTooLarge { method: "jade", dim: 6, limit: 5 })
        ));
    }
}
