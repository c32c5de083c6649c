use super::HiddenBatch;
use crate::error::{GeloError, Result};
use crate::numerics::{select_rows, Matrix};

/// A batch assembled from several users' requests, with the bookkeeping to
/// split results back out.
#[derive(Clone, Debug)]
pub struct Interleaved {
    pub batch: HiddenBatch,
    /// For each row of `batch`, the `(request index, row within request)` it came from.
    pub origin: Vec<(usize, usize)>,
    pub user_ids: Vec<u64>,
    request_rows: Vec<usize>,
}

impl Interleaved {
    /// Splits a result with one row per interleaved row back into per-request
    /// matrices, in the original request order.
    pub fn deinterleave(&self, m: &Matrix) -> Result<Vec<(u64, Matrix)>> {
        if m.nrows() != self.origin.len() {
            return Err(GeloError::InvalidDimension(format!(
                "{} rows to de-interleave, expected {}",
                m.nrows(),
                self.origin.len()
            )));
        }
        let mut per_request: Vec<Vec<usize>> =
            self.request_rows.iter().map(|&n| vec![usize::MAX; n]).collect();
        for (pos, &(req, row)) in self.origin.iter().enumerate() {
            per_request[req][row] = pos;
        }
        Ok(per_request
            .iter()
            .zip(&self.user_ids)
            .map(|(idx, &user)| (user, select_rows(m, idx)))
            .collect())
    }
}

/// Round-robin merge: one row from each user with rows remaining, per pass.
pub fn interleave_users(requests: &[(u64, HiddenBatch)]) -> Result<Interleaved> {
    let d = requests.first().map_or(0, |(_, b)| b.cols());
    if let Some((user, b)) = requests.iter().find(|(_, b)| b.cols() != d) {
        return Err(GeloError::InvalidDimension(format!(
            "user {user} has width {}, expected {d}",
            b.cols()
        )));
    }
    let request_rows: Vec<usize> = requests.iter().map(|(_, b)| b.rows()).collect();
    let longest = request_rows.iter().copied().max().unwrap_or(0);

    let mut origin = Vec::with_capacity(request_rows.iter().sum());
    for row in 0..longest {
        for (req, &n) in request_rows.iter().enumerate() {
            if row < n {
                origin.push((req, row));
            }
        }
    }

    let mut h = Matrix::zeros(origin.len(), d);
    for (pos, &(req, row)) in origin.iter().enumerate() {
        h.row_mut(pos).copy_from(&requests[req].1.h.row(row));
    }
    let all_tokens = requests.iter().all(|(_, b)| b.token_ids.is_some());
    let token_ids = all_tokens.then(|| {
        origin
            .iter()
            .map(|&(req, row)| requests[req].1.token_ids.as_ref().unwrap()[row])
            .collect()
    });

    Ok(Interleaved {
        batch: HiddenBatch {
            h,
            token_ids,
            shield_mask: None,
        },
        origin,
        user_ids: requests.iter().map(|(u, _)| *u).collect(),
        request_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gaussian_matrix, rng_from_seed};
    use rand::Rng;

    fn batch(n: usize, d: usize, seed: u64) -> HiddenBatch {
        HiddenBatch::new(gaussian_matrix(n, d, &mut rng_from_seed(seed)))
    }

    #[test]
    fn single_user_unchanged() {
        let b = batch(4, 3, 1);
        let out = interleave_users(&[(7, b.clone())]).unwrap();
        assert_eq!(out.batch.h, b.h);
    }

    #[test]
    fn two_users_alternate() {
        let a = batch(2, 3, 1);
        let b = batch(2, 3, 2);
        let out = interleave_users(&[(1, a.clone()), (2, b.clone())]).unwrap();
        assert_eq!(out.origin, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
        assert_eq!(out.batch.h.row(1), b.h.row(0));
        assert_eq!(out.batch.h.row(2), a.h.row(1));
    }

    #[test]
    fn mismatched_width_rejected() {
        let r = interleave_users(&[(1, batch(2, 3, 1)), (2, batch(2, 4, 2))]);
        assert!(matches!(r, Err(GeloError::InvalidDimension(_))));
    }

    #[test]
    fn round_trip_random_multisets() {
        let mut rng = rng_from_seed(5);
        for trial in 0..25 {
            let users = rng.random_range(1..6);
            let requests: Vec<(u64, HiddenBatch)> = (0..users)
                .map(|u| (u as u64 * 10, batch(rng.random_range(0..7), 3, trial * 100 + u as u64)))
                .collect();
            let out = interleave_users(&requests).unwrap();
            let back = out.deinterleave(&out.batch.h).unwrap();
            for ((user, m), (orig_user, orig)) in back.iter().zip(&requests) {
                assert_eq!(user, orig_user);
                assert_eq!(m, &orig.h);
            }
        }
    }
}
