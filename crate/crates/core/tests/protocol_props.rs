use std::collections::HashSet;

use gelo_core::numerics::{gaussian_matrix, rng_from_seed, sample_invertible, sample_orthogonal, MixingKind};
use gelo_core::protocol::{
    detect_flooding, mix, pad_shields, strip_shields, unmix, HiddenBatch, ShieldConfig, TokenBaseline, TrustedSession,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unmixing_the_offloaded_product_is_exact(
        n in 1usize..64, d in 1usize..48, p in 1usize..32, seed: u64, general: bool, kappa in 1.5f64..100.0
    ) {
        let h = gaussian_matrix(n, d, &mut rng_from_seed(seed));
        let w = gaussian_matrix(d, p, &mut rng_from_seed(seed ^ 0xff));
        let a = if general { sample_invertible(n, kappa, seed).unwrap() } else { sample_orthogonal(n, seed).unwrap() };
        let u = mix(&a, &HiddenBatch::new(h.clone())).unwrap().u;
        let q = unmix(&a, &(u * &w)).unwrap();
        let reference = &h * &w;
        prop_assert!((q - &reference).norm() / reference.norm() <= 1e-8);
    }

    #[test]
    fn shields_add_their_own_gram(n in 2usize..80, d in 1usize..24, fraction in 0.01f64..0.3, scale in 0.5f64..12.0, seed: u64) {
        let h = gaussian_matrix(n, d, &mut rng_from_seed(seed));
        let padded = pad_shields(&HiddenBatch::new(h.clone()), &ShieldConfig { fraction, scale, seed }).unwrap();
        let k = padded.rows() - n;
        let a = sample_orthogonal(padded.rows(), seed ^ 7).unwrap();
        let u = mix(&a, &padded).unwrap().u;
        let s = padded.h.rows(n, k).into_owned();
        let lhs = u.tr_mul(&u) - h.tr_mul(&h);
        let rhs = s.tr_mul(&s);
        let scale_ref = rhs.norm().max(h.tr_mul(&h).norm());
        prop_assert!((lhs - &rhs).norm() <= 1e-9 * scale_ref);

        let mean = (0..n).map(|i| h.row(i).norm()).sum::<f64>() / n as f64;
        for i in 0..k {
            let ratio = s.row(i).norm() / (scale * mean);
            prop_assert!((0.999..=1.001).contains(&ratio));
        }
        let back = strip_shields(&padded.h, padded.shield_mask.as_ref().unwrap()).unwrap();
        prop_assert_eq!(back, h);
    }

    #[test]
    fn flooding_divergence_grows_with_concentration(c1 in 0usize..100, extra in 1usize..100) {
        let baseline: TokenBaseline = (0..10u32).map(|t| (t, 0.1)).collect();
        let stream = |c: usize| -> Vec<u32> {
            (0..200).map(|i| if i < c { 0 } else { (i % 10) as u32 }).collect()
        };
        let low = detect_flooding(&stream(c1), &baseline, 1.0).unwrap().divergence;
        let high = detect_flooding(&stream((c1 + extra).min(200)), &baseline, 1.0).unwrap().divergence;
        prop_assert!(high + 1e-12 >= low);
    }
}

#[test]
fn fresh_mixing_per_batch() {
    let mut session = TrustedSession::new(77);
    let mut seeds = HashSet::new();
    let mut ids = HashSet::new();
    for i in 0..500 {
        let kind = if i % 3 == 0 { MixingKind::General } else { MixingKind::Orthogonal };
        let (id, a) = session.next_mixing(3, kind, 100.0).unwrap();
        assert!(ids.insert(id));
        assert!(seeds.insert(a.seed()));
    }
}
