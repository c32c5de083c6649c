use crate::error::Result;
use crate::numerics::{derive_seed, sample_invertible, sample_orthogonal, MixingKind, MixingMatrix};

/// Hands out a fresh mixing matrix per batch. Each batch id is used once and
/// its seed is derived from `(master_seed, batch_id)`.
#[derive(Clone, Debug)]
pub struct TrustedSession {
    master_seed: u64,
    next_batch: u64,
}

impl TrustedSession {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            next_batch: 0,
        }
    }

    /// `(batch_id, A)` for the next batch.
    pub fn next_mixing(&mut self, n: usize, kind: MixingKind, kappa_max: f64) -> Result<(u64, MixingMatrix)> {
        let batch_id = self.next_batch;
        self.next_batch += 1;
        let seed = derive_seed(self.master_seed, batch_id);
        let a = match kind {
            MixingKind::Orthogonal => sample_orthogonal(n, seed)?,
            MixingKind::General => sample_invertible(n, kappa_max, seed)?,
        };
        Ok((batch_id, a))
    }
}

/// Which layers stay entirely on the trusted side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SensitiveLayers {
    /// Number of leading layers computed locally.
    pub skip_first: usize,
    pub skip_last: bool,
}

impl Default for SensitiveLayers {
    fn default() -> Self {
        Self {
            skip_first: 2,
            skip_last: true,
        }
    }
}

impl SensitiveLayers {
    /// Whether `layer` (0-based, of `num_layers`) may be offloaded.
    pub fn offloads(&self, layer: usize, num_layers: usize) -> bool {
        layer >= self.skip_first && !(self.skip_last && layer + 1 == num_layers) && layer < num_layers
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::sync::Mutex;

    /// Records every seed handed out; duplicates are a freshness violation.
    struct SeedLedger(Mutex<HashSet<u64>>);

    impl SeedLedger {
        fn record(&self, seed: u64) -> bool {
            self.0.lock().unwrap().insert(seed)
        }
    }

    #[test]
    fn every_batch_gets_a_fresh_seed() {
        let ledger = SeedLedger(Mutex::new(HashSet::new()));
        let mut session = TrustedSession::new(1234);
        let mut ids = HashSet::new();
        for i in 0..200 {
            let kind = if i % 2 == 0 { MixingKind::Orthogonal } else { MixingKind::General };
            let (id, a) = session.next_mixing(4, kind, 100.0).unwrap();
            assert!(ids.insert(id));
            assert!(ledger.record(a.seed()), "seed reused at batch {id}");
        }
    }

    #[test]
    fn default_layer_policy() {
        let p = SensitiveLayers::default();
        let offloaded: Vec<usize> = (0..6).filter(|&l| p.offloads(l, 6)).collect();
        assert_eq!(offloaded, vec![2, 3, 4]);
        assert!(!p.offloads(9, 6));
    }
}
