use gelo_core::numerics::{
    condition_number, hungarian, orthogonality_defect, rng_from_seed, sample_invertible, sample_orthogonal, solve,
    gaussian_matrix, Matrix,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn orthogonal_sampler_shapes() {
    for n in [1usize, 2, 64, 512] {
        let a = sample_orthogonal(n, n as u64).unwrap();
        assert!(orthogonality_defect(a.matrix()) <= 1e-10, "n={n}");
        let det = a.matrix().clone().lu().determinant();
        assert!((det.abs() - 1.0).abs() <= 1e-8, "n={n} det={det}");
    }
}

#[test]
fn invertible_sampler_respects_bound() {
    for n in [32usize, 256] {
        for seed in 0..100 {
            let a = sample_invertible(n, 100.0, seed).unwrap();
            let kappa = condition_number(a.matrix()).unwrap();
            assert!(kappa < 100.0, "n={n} seed={seed} kappa={kappa}");
            if n == 32 {
                let x0 = gaussian_matrix(n, 5, &mut rng_from_seed(seed));
                let x = solve(a.matrix(), &(a.matrix() * &x0)).unwrap();
                assert!((x - &x0).norm() / x0.norm() <= 1e-8);
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum over injective maps from the smaller side into the larger one.
fn brute_force(cost: &Matrix) -> f64 {
    let (r, c) = cost.shape();
    let (small, large, at): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if r <= c {
        (r, c, Box::new(|i, j| cost[(i, j)]))
    } else {
        (c, r, Box::new(|i, j| cost[(j, i)]))
    };
    permutations(large)
        .iter()
        .map(|p| (0..small).map(|i| at(i, p[i])).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn hungarian_matches_brute_force_on_small_integer_costs() {
    let mut rng = rng_from_seed(2024);
    for case in 0..1000 {
        let rows = rng.random_range(1..=6);
        let cols = rng.random_range(1..=6);
        let cost = Matrix::from_fn(rows, cols, |_, _| rng.random_range(0..=9) as f64);
        let a = hungarian(&cost).unwrap();
        assert_eq!(a.pairs.len(), rows.min(cols));
        let total: f64 = a.pairs.iter().map(|&(i, j)| cost[(i, j)]).sum();
        assert_eq!(total, a.total_cost);
        assert_eq!(total, brute_force(&cost), "case {case}: {cost}");
        let mut seen_r = std::collections::HashSet::new();
        let mut seen_c = std::collections::HashSet::new();
        assert!(a.pairs.iter().all(|&(i, j)| seen_r.insert(i) && seen_c.insert(j)));
    }
}

proptest! {
    #[test]
    fn samplers_are_pure(n in 1usize..24, seed: u64, kappa in 1.5f64..200.0) {
        let (o1, o2) = (sample_orthogonal(n, seed).unwrap(), sample_orthogonal(n, seed).unwrap());
        prop_assert_eq!(o1.matrix(), o2.matrix());
        let (g1, g2) = (sample_invertible(n, kappa, seed).unwrap(), sample_invertible(n, kappa, seed).unwrap());
        prop_assert_eq!(g1.matrix(), g2.matrix());
    }

    #[test]
    fn solve_inverts_multiplication(n in 1usize..32, p in 1usize..8, seed: u64) {
        let a = sample_invertible(n, 100.0, seed).unwrap();
        let x0 = gaussian_matrix(n, p, &mut rng_from_seed(seed ^ 1));
        let x = solve(a.matrix(), &(a.matrix() * &x0)).unwrap();
        prop_assert!((x - &x0).norm() / x0.norm() <= 1e-8);
    }
}
