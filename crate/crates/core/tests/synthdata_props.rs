use gelo_core::metrics::participation_ratio;
use gelo_core::numerics::{derive_seed, row_norms};
use gelo_core::synthdata::{gen_hidden_states, HiddenStatePrior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn participation_ratio_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..20 {
        let d = [32usize, 48, 64][i % 3];
        let r_eff = rng.random_range(4.0..=(d as f64 / 2.0));
        let prior = HiddenStatePrior {
            d,
            r_eff,
            heavy_tail: rng.random_range(0.0..1.0),
            seed: derive_seed(5, i as u64),
            ..Default::default()
        };
        let h = gen_hidden_states(8 * d, &prior).unwrap().h;
        let pr = participation_ratio(&h).unwrap();
        assert!((pr - r_eff).abs() / r_eff <= 0.1, "d={d} target={r_eff:.2} measured={pr:.2}");
        assert!(pr >= 1.0 && pr <= d as f64);
    }
}

#[test]
fn norm_shell_cv() {
    for (seed, cv) in [(1u64, 0.039), (2, 0.1), (3, 0.02)] {
        let prior = HiddenStatePrior { norm_cv: cv, seed, ..Default::default() };
        let norms = row_norms(&gen_hidden_states(512, &prior).unwrap().h);
        let mean = norms.iter().sum::<f64>() / norms.len() as f64;
        let sd = (norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (norms.len() - 1) as f64).sqrt();
        let measured = sd / mean;
        assert!((measured - cv).abs() <= 0.3 * cv, "cv={cv} measured={measured}");
        assert!((mean - prior.radius).abs() / prior.radius < 0.02);
    }
}

#[test]
fn generator_is_deterministic() {
    let prior = HiddenStatePrior { seed: 99, ..Default::default() };
    assert_eq!(gen_hidden_states(64, &prior).unwrap(), gen_hidden_states(64, &prior).unwrap());
}
