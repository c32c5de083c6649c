use std::collections::HashMap;

use rand::Rng;

use crate::error::{GeloError, Result};
use crate::numerics::rng_from_seed;

/// Reference token distribution: token id → probability.
pub type TokenBaseline = HashMap<u32, f64>;

pub const DEFAULT_FLOOD_THRESHOLD: f64 = 1.0;
const SMOOTHING: f64 = 1e-6;
const OFFENDERS_REPORTED: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct FloodReport {
    pub flagged: bool,
    /// `KL(empirical ‖ smoothed baseline)` in nats.
    pub divergence: f64,
    /// Tokens over-represented relative to the baseline, largest KL
    /// contribution first, with their empirical frequency.
    pub offending_tokens: Vec<(u32, f64)>,
    pub injected: usize,
    /// Random baseline tokens for the caller to insert into the batch.
    pub injected_tokens: Vec<u32>,
}

/// Token-frequency flooding detector.
#[derive(Clone, Debug)]
pub struct FloodDetector {
    /// Divergence (nats) above which a batch is flagged.
    pub threshold: f64,
    /// Injected tokens as a fraction of the batch length when flagged.
    pub inject_fraction: f64,
    pub seed: u64,
}

impl Default for FloodDetector {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_FLOOD_THRESHOLD,
            inject_fraction: 0.1,
            seed: 0,
        }
    }
}

impl FloodDetector {
    pub fn check(&self, tokens: &[u32], baseline: &TokenBaseline) -> Result<FloodReport> {
        if tokens.is_empty() {
            return Err(GeloError::InvalidInput("empty token list".into()));
        }
        let total: f64 = baseline.values().sum();
        if baseline.is_empty() || (total - 1.0).abs() > 1e-6 || baseline.values().any(|&p| p < 0.0) {
            return Err(GeloError::InvalidInput(format!(
                "baseline must be a probability table, sums to {total}"
            )));
        }

        let mut counts: HashMap<u32, usize> = HashMap::new();
        for &t in tokens {
            *counts.entry(t).or_default() += 1;
        }
        let n = tokens.len() as f64;
        let unseen = counts.keys().filter(|t| !baseline.contains_key(t)).count();
        let norm = 1.0 + SMOOTHING * (baseline.len() + unseen) as f64;
        let smoothed = |t: u32| (baseline.get(&t).copied().unwrap_or(0.0) + SMOOTHING) / norm;

        let mut contributions: Vec<(u32, f64, f64)> = counts
            .iter()
            .map(|(&t, &c)| {
                let p = c as f64 / n;
                (t, p, p * (p / smoothed(t)).ln())
            })
            .collect();
        let divergence = contributions.iter().map(|c| c.2).sum::<f64>().max(0.0);
        contributions.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        let offending_tokens = contributions
            .iter()
            .filter(|c| c.2 > 0.0)
            .take(OFFENDERS_REPORTED)
            .map(|c| (c.0, c.1))
            .collect();

        let flagged = divergence > self.threshold;
        let injected_tokens = if flagged {
            let count = (self.inject_fraction * n).ceil() as usize;
            let mut support: Vec<u32> = baseline.keys().copied().collect();
            support.sort_unstable();
            let mut rng = rng_from_seed(self.seed);
            (0..count)
                .map(|_| support[rng.random_range(0..support.len())])
                .collect()
        } else {
            Vec::new()
        };

        Ok(FloodReport {
            flagged,
            divergence,
            offending_tokens,
            injected: injected_tokens.len(),
            injected_tokens,
        })
    }
}

/// Checks `tokens` against `baseline` with default injection settings.
pub fn detect_flooding(tokens: &[u32], baseline: &TokenBaseline, threshold: f64) -> Result<FloodReport> {
    FloodDetector {
        threshold,
        ..Default::default()
    }
    .check(tokens, baseline)
}
