//! Dense linear algebra shared by the protocol and the attacks.
//!
//! All computation happens in `f64`. [`Dtype::F32`] exists only so that
//! payloads can be narrowed on the wire.

mod assignment;
mod linalg;
mod mixing;
mod rng;

pub use assignment::{hungarian, Assignment};
pub use linalg::{condition_number, eigh, orthonormal_columns, singular_values, solve, EigDecomposition};
pub use mixing::{sample_invertible, sample_orthogonal, MixingKind, MixingMatrix, KAPPA_MARGIN};
pub use rng::{derive_seed, gaussian_matrix, rng_from_seed, Rng64};

use crate::error::{GeloError, Result};

/// Dense real matrix. Storage is column-major; wire and file formats are
/// row-major and convert explicitly.
pub type Matrix = nalgebra::DMatrix<f64>;

/// Element type of a serialized matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Dtype {
    F32,
    #[default]
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }
}

/// Builds a matrix from row-major values, rejecting wrong lengths and
/// non-finite entries.
pub fn matrix_from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix> {
    if data.len() != rows * cols {
        return Err(GeloError::InvalidDimension(format!(
            "{} values for a {rows}x{cols} matrix",
            data.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, data);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn ensure_finite(m: &Matrix) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GeloError::InvalidInput("matrix has non-finite entries".into()))
    }
}

/// `‖a − b‖_F / ‖b‖_F`.
pub fn relative_error(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}

/// Row-major copy of the matrix values.
pub fn to_row_major(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter().copied());
    }
    out
}

/// Stack the selected rows in the given order.
pub fn select_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

/// Subtract the per-column mean from every row.
pub fn center_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    let n = m.nrows() as f64;
    for j in 0..m.ncols() {
        let mean = m.column(j).sum() / n;
        out.column_mut(j).add_scalar_mut(-mean);
    }
    out
}

pub fn row_norms(m: &Matrix) -> Vec<f64> {
    (0..m.nrows()).map(|i| m.row(i).norm()).collect()
}

/// `‖AᵀA − I‖_F / √n`.
pub fn orthogonality_defect(a: &Matrix) -> f64 {
    let n = a.ncols();
    let gram = a.transpose() * a;
    (gram - Matrix::identity(n, n)).norm() / (n as f64).sqrt()
}
