use crate::numerics::Matrix;

/// Approximate joint diagonalization of symmetric matrices by Givens
/// rotations (Cardoso–Souloumiac).
///
/// Returns `V` with every `Vᵀ·Mₖ·V` as diagonal as possible, whether the
/// sweeps met `threshold`, and the number of sweeps run. `mats` is rotated in
/// place.
pub fn joint_diagonalize(mats: &mut [Matrix], threshold: f64, max_sweeps: usize) -> (Matrix, bool, usize) {
    let m = mats.first().map_or(0, |a| a.nrows());
    let mut v = Matrix::identity(m, m);
    for sweep in 1..=max_sweeps {
        let mut rotated = false;
        for p in 0..m {
            for q in p + 1..m {
                let (mut g00, mut g01, mut g11) = (0.0, 0.0, 0.0);
                for a in mats.iter() {
                    let x = a[(p, p)] - a[(q, q)];
                    let y = a[(p, q)] + a[(q, p)];
                    g00 += x * x;
                    g01 += x * y;
                    g11 += y * y;
                }
                let ton = g00 - g11;
                let toff = 2.0 * g01;
                let theta = 0.5 * toff.atan2(ton + (ton * ton + toff * toff).sqrt());
                let (s, c) = theta.sin_cos();
                if s.abs() <= threshold {
                    continue;
                }
                rotated = true;
                rotate_columns(&mut v, p, q, c, s);
                for a in mats.iter_mut() {
                    rotate_rows(a, p, q, c, s);
                    rotate_columns(a, p, q, c, s);
                }
            }
        }
        if !rotated {
            return (v, true, sweep);
        }
    }
    (v, false, max_sweeps)
}

fn rotate_columns(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..a.nrows() {
        let (x, y) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = c * x + s * y;
        a[(i, q)] = c * y - s * x;
    }
}

fn rotate_rows(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for j in 0..a.ncols() {
        let (x, y) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = c * x + s * y;
        a[(q, j)] = c * y - s * x;
    }
}
