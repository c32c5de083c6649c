use std::collections::{BTreeSet, HashMap};

use rand::Rng;

use crate::error::{GeloError, Result};
use crate::numerics::rng_from_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct TokenStreamSpec {
    pub vocab_size: u32,
    pub special_token_ids: BTreeSet<u32>,
    /// Probability that a position emits a special token.
    pub special_rate: f64,
    /// Probability that a position repeats an earlier non-special token.
    pub repeat_rate: f64,
    pub length: usize,
    pub seed: u64,
}

impl Default for TokenStreamSpec {
    fn default() -> Self {
        Self {
            vocab_size: 32_000,
            special_token_ids: [1, 2].into_iter().collect(),
            special_rate: 0.16,
            repeat_rate: 0.0,
            length: 100_000,
            seed: 0,
        }
    }
}

impl TokenStreamSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [("special_rate", self.special_rate), ("repeat_rate", self.repeat_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(GeloError::InvalidParameter(format!("{name} {rate} outside [0, 1]")));
            }
        }
        if self.special_rate + self.repeat_rate > 1.0 {
            return Err(GeloError::InvalidParameter("special_rate + repeat_rate exceeds 1".into()));
        }
        if self.vocab_size == 0 {
            return Err(GeloError::InvalidParameter("empty vocabulary".into()));
        }
        if let Some(&bad) = self.special_token_ids.iter().find(|&&t| t >= self.vocab_size) {
            return Err(GeloError::InvalidParameter(format!(
                "special id {bad} outside vocabulary of {}",
                self.vocab_size
            )));
        }
        if self.special_rate > 0.0 && self.special_token_ids.is_empty() {
            return Err(GeloError::InvalidParameter("special_rate > 0 with no special ids".into()));
        }
        if self.length == 0 {
            return Err(GeloError::InvalidParameter("length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Each position is a special id, a repeat of an earlier ordinary token, or
/// a fresh uniform draw from the vocabulary, in that order of precedence.
pub fn gen_token_stream(spec: &TokenStreamSpec) -> Result<Vec<u32>> {
    spec.validate()?;
    let specials: Vec<u32> = spec.special_token_ids.iter().copied().collect();
    let mut rng = rng_from_seed(spec.seed);
    let mut out = Vec::with_capacity(spec.length);
    let mut ordinary: Vec<u32> = Vec::new();
    for _ in 0..spec.length {
        let u: f64 = rng.random();
        let token = if u < spec.special_rate {
            specials[rng.random_range(0..specials.len())]
        } else if u < spec.special_rate + spec.repeat_rate && !ordinary.is_empty() {
            ordinary[rng.random_range(0..ordinary.len())]
        } else {
            let t = rng.random_range(0..spec.vocab_size);
            ordinary.push(t);
            t
        };
        out.push(token);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuplicateReport {
    /// Fraction of items whose value occurs more than once.
    pub overall_rate: f64,
    /// Same, after dropping special ids from the stream.
    pub filtered_rate: f64,
    /// Most frequent values, count descending then id ascending.
    pub top_k: Vec<(u32, usize)>,
}

pub const TOP_K: usize = 5;

fn counts<'a>(tokens: impl Iterator<Item = &'a u32>) -> (HashMap<u32, usize>, usize) {
    let mut map = HashMap::new();
    let mut total = 0;
    for &t in tokens {
        *map.entry(t).or_insert(0) += 1;
        total += 1;
    }
    (map, total)
}

/// `(total − unique)/total` where `unique` counts items whose value occurs
/// exactly once.
fn duplicate_rate(map: &HashMap<u32, usize>, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let unique = map.values().filter(|&&c| c == 1).count();
    (total - unique) as f64 / total as f64
}

pub fn duplicate_report(tokens: &[u32], special_ids: &BTreeSet<u32>) -> Result<DuplicateReport> {
    if tokens.is_empty() {
        return Err(GeloError::InvalidInput("empty token list".into()));
    }
    let (all, total) = counts(tokens.iter());
    let (filtered, filtered_total) = counts(tokens.iter().filter(|t| !special_ids.contains(t)));
    let mut top: Vec<(u32, usize)> = filtered.iter().map(|(&t, &c)| (t, c)).collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    top.truncate(TOP_K);
    Ok(DuplicateReport {
        overall_rate: duplicate_rate(&all, total),
        filtered_rate: duplicate_rate(&filtered, filtered_total),
        top_k: top,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_rate(tokens: &[u32]) -> f64 {
        let dup = tokens
            .iter()
            .filter(|t| tokens.iter().filter(|u| u == t).count() >= 2)
            .count();
        dup as f64 / tokens.len() as f64
    }

    #[test]
    fn counting_examples() {
        let none = BTreeSet::new();
        let r = duplicate_report(&[7, 7, 7, 9], &none).unwrap();
        assert_eq!(r.overall_rate, 0.75);
        assert_eq!(r.top_k, vec![(7, 3), (9, 1)]);
        let r = duplicate_report(&[1, 2, 3], &none).unwrap();
        assert_eq!((r.overall_rate, r.filtered_rate), (0.0, 0.0));
        assert!(duplicate_report(&[], &none).is_err());
    }

    #[test]
    fn top_k_ties_by_id() {
        let r = duplicate_report(&[5, 4, 5, 4, 3, 9, 8, 7, 6], &BTreeSet::new()).unwrap();
        assert_eq!(r.top_k, vec![(4, 2), (5, 2), (3, 1), (6, 1), (7, 1)]);
    }

    #[test]
    fn fresh_stream_has_no_duplicates() {
        let spec = TokenStreamSpec {
            vocab_size: u32::MAX,
            special_rate: 0.0,
            length: 10_000,
            ..Default::default()
        };
        let tokens = gen_token_stream(&spec).unwrap();
        assert!(duplicate_report(&tokens, &spec.special_token_ids).unwrap().overall_rate < 0.001);
    }

    #[test]
    fn special_rate_sets_duplicate_rate() {
        let spec = TokenStreamSpec {
            vocab_size: u32::MAX,
            length: 100_000,
            ..Default::default()
        };
        let tokens = gen_token_stream(&spec).unwrap();
        assert_eq!(tokens, gen_token_stream(&spec).unwrap());
        let r = duplicate_report(&tokens, &spec.special_token_ids).unwrap();
        assert!((r.overall_rate - 0.16).abs() <= 0.02, "{}", r.overall_rate);
        assert!(r.filtered_rate < r.overall_rate);
    }

    #[test]
    fn matches_brute_force() {
        for seed in 0..5 {
            let spec = TokenStreamSpec {
                vocab_size: 500,
                special_rate: 0.1,
                repeat_rate: 0.2,
                length: 2_000,
                seed,
                ..Default::default()
            };
            let tokens = gen_token_stream(&spec).unwrap();
            let r = duplicate_report(&tokens, &spec.special_token_ids).unwrap();
            assert!((r.overall_rate - brute_force_rate(&tokens)).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_specs() {
        let base = TokenStreamSpec::default();
        for bad in [
            TokenStreamSpec { special_rate: 1.5, ..base.clone() },
            TokenStreamSpec { special_rate: 0.6, repeat_rate: 0.6, ..base.clone() },
            TokenStreamSpec { special_token_ids: [40_000].into_iter().collect(), ..base.clone() },
            TokenStreamSpec { length: 0, ..base.clone() },
        ] {
            assert!(gen_token_stream(&bad).is_err());
        }
    }
}
