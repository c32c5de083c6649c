//! Grid experiments over batch size, shield scale, anchors and methods.
//!
//! A data cell is one `(n, shield_scale, rep)` triple. Its seed depends only
//! on that triple, so every `(k, method, bss)` evaluated on it sees the same
//! batch, the same mixing matrix and nested anchor sets.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;

use crate::error::Result;
use crate::harness::MixingSpec;
use crate::numerics::{center_columns, derive_seed, rng_from_seed, Matrix};
use crate::protocol::{mix, pad_shields, HiddenBatch, ShieldConfig};
use crate::synthdata::{gen_hidden_states, HiddenStatePrior};

use super::{anchor_attack, AttackConfig, BssMethod, RecoveryResult, ResidualMethod};

pub const SWEEP_CSV_HEADER: &str = "n,d,k,method,bss,shield_scale,seed,median_cos,p95_cos,gram_error,converged,error";

/// One observed batch and its ground truth.
#[derive(Clone, Debug)]
pub struct ExperimentBatch {
    /// Centered data rows.
    pub h: Matrix,
    /// `A·[H; S]` as the untrusted side sees it.
    pub u: Matrix,
    pub shield_rows: usize,
}

/// Builds the batch for one data cell: sample, center, pad with shields when
/// `shield_scale > 0`, then mix.
pub fn experiment_batch(
    n: usize,
    prior: &HiddenStatePrior,
    mixing: MixingSpec,
    shield_fraction: f64,
    shield_scale: f64,
    seed: u64,
) -> Result<ExperimentBatch> {
    let prior = HiddenStatePrior {
        seed: derive_seed(seed, 0),
        ..prior.clone()
    };
    let h = center_columns(&gen_hidden_states(n, &prior)?.h);
    let mut batch = HiddenBatch::new(h.clone());
    if shield_scale > 0.0 {
        let cfg = ShieldConfig {
            fraction: shield_fraction,
            scale: shield_scale,
            seed: derive_seed(seed, 1),
        };
        batch = pad_shields(&batch, &cfg)?;
    }
    let a = mixing.sample(batch.rows(), derive_seed(seed, 2))?;
    let u = mix(&a, &batch)?.u;
    Ok(ExperimentBatch {
        shield_rows: batch.rows() - n,
        h,
        u,
    })
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    pub ks: Vec<usize>,
    pub methods: Vec<ResidualMethod>,
    pub bss: Vec<BssMethod>,
    pub shield_scales: Vec<f64>,
    pub shield_fraction: f64,
    pub reps: usize,
    pub prior: HiddenStatePrior,
    pub mixing: MixingSpec,
    /// Template for every cell; `method`, `bss` and `seed` are overwritten.
    pub attack: AttackConfig,
    pub master_seed: u64,
    pub threads: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ns: vec![512],
            ks: vec![0, 2, 5, 10, 20, 40, 100, 200, 240],
            methods: ResidualMethod::ALL.to_vec(),
            bss: vec![BssMethod::FastIca],
            shield_scales: vec![0.0],
            shield_fraction: ShieldConfig::default().fraction,
            reps: 1,
            prior: HiddenStatePrior::default(),
            mixing: MixingSpec::Orthogonal,
            attack: AttackConfig::default(),
            master_seed: 0,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub method: ResidualMethod,
    pub bss: BssMethod,
    pub shield_scale: f64,
    pub seed: u64,
    pub outcome: std::result::Result<RecoveryResult, String>,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let lead = format!(
            "{},{},{},{},{},{},{}",
            self.n, self.d, self.k, self.method, self.bss, self.shield_scale, self.seed
        );
        match &self.outcome {
            Ok(r) => format!(
                "{lead},{},{},{},{},",
                r.summary.median_cos, r.summary.p95_cos, r.summary.gram_error, r.converged
            ),
            Err(e) => format!("{lead},,,,,\"{}\"", e.replace('"', "'")),
        }
    }
}

struct DataCell {
    n: usize,
    shield_scale: f64,
    seed: u64,
}

impl SweepSpec {
    fn data_cells(&self) -> Vec<DataCell> {
        let mut cells = Vec::new();
        for &n in &self.ns {
            for &shield_scale in &self.shield_scales {
                for _ in 0..self.reps {
                    let seed = derive_seed(self.master_seed, cells.len() as u64);
                    cells.push(DataCell { n, shield_scale, seed });
                }
            }
        }
        cells
    }

    /// Number of rows `run` will produce.
    pub fn row_count(&self) -> usize {
        self.ns.len() * self.shield_scales.len() * self.reps * self.ks.len() * self.methods.len() * self.bss.len()
    }

    fn run_cell(&self, cell: &DataCell) -> Vec<SweepRow> {
        let combos = || {
            self.ks.iter().flat_map(move |&k| {
                self.methods
                    .iter()
                    .flat_map(move |&m| self.bss.iter().map(move |&b| (k, m, b)))
            })
        };
        let row = |k, method, bss, outcome| SweepRow {
            n: cell.n,
            d: self.prior.d,
            k,
            method,
            bss,
            shield_scale: cell.shield_scale,
            seed: cell.seed,
            outcome,
        };
        let batch = match experiment_batch(
            cell.n,
            &self.prior,
            self.mixing,
            self.shield_fraction,
            cell.shield_scale,
            cell.seed,
        ) {
            Ok(b) => b,
            Err(e) => return combos().map(|(k, m, b)| row(k, m, b, Err(e.to_string()))).collect(),
        };
        let mut order: Vec<usize> = (0..cell.n).collect();
        order.shuffle(&mut rng_from_seed(derive_seed(cell.seed, 3)));
        combos()
            .map(|(k, method, bss)| {
                let cfg = AttackConfig {
                    method,
                    bss,
                    seed: derive_seed(cell.seed, 4),
                    ..self.attack.clone()
                };
                let anchors = &order[..k.min(cell.n)];
                let outcome = anchor_attack(&batch.u, &batch.h, anchors, &cfg).map_err(|e| e.to_string());
                row(k, method, bss, outcome)
            })
            .collect()
    }

    /// Evaluates every cell, in parallel across data cells when
    /// `threads > 1`. Rows come back in grid order regardless.
    pub fn run(&self) -> Vec<SweepRow> {
        let cells = self.data_cells();
        let results: Mutex<Vec<Option<Vec<SweepRow>>>> = Mutex::new(vec![None; cells.len()]);
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..self.threads.clamp(1, cells.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(cell) = cells.get(i) else { break };
                    let rows = self.run_cell(cell);
                    results.lock().unwrap()[i] = Some(rows);
                });
            }
        });
        results
            .into_inner()
            .unwrap()
            .into_iter()
            .flat_map(|r| r.expect("every cell ran"))
            .collect()
    }
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepSpec {
        SweepSpec {
            ns: vec![24],
            ks: vec![0, 2, 22, 23],
            prior: HiddenStatePrior { d: 32, r_eff: 6.0, ..Default::default() },
            reps: 2,
            ..Default::default()
        }
    }

    #[test]
    fn grid_shape_and_errors() {
        let spec = small();
        let rows = spec.run();
        assert_eq!(rows.len(), spec.row_count());
        assert_eq!(rows.len(), 2 * 4 * 3);
        for r in &rows {
            match r.k {
                23 => assert!(r.outcome.is_err()),
                _ => {
                    let res = r.outcome.as_ref().unwrap();
                    assert!((0.0..=1.0).contains(&res.summary.p95_cos));
                }
            }
        }
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &rows).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(lines.len(), rows.len() + 1);
        assert!(lines.iter().all(|l| l.split(',').count() >= 12));
    }

    #[test]
    fn zero_anchor_cells_agree() {
        let rows = small().run();
        let zero: Vec<_> = rows.iter().filter(|r| r.k == 0 && r.seed == rows[0].seed).collect();
        assert_eq!(zero.len(), 3);
        let first = zero[0].outcome.as_ref().unwrap().summary;
        for r in &zero {
            assert_eq!(r.outcome.as_ref().unwrap().summary, first);
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let serial = small().run();
        let parallel = SweepSpec { threads: 4, ..small() }.run();
        let a: Vec<String> = serial.iter().map(SweepRow::csv_line).collect();
        let b: Vec<String> = parallel.iter().map(SweepRow::csv_line).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sweep() {
        let spec = SweepSpec { ks: vec![], ..small() };
        assert!(spec.run().is_empty());
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &[]).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), format!("{SWEEP_CSV_HEADER}\n"));
    }

    #[test]
    fn shielded_batch_shape() {
        let prior = HiddenStatePrior { d: 16, r_eff: 4.0, ..Default::default() };
        let b = experiment_batch(40, &prior, MixingSpec::Orthogonal, 0.05, 10.0, 1).unwrap();
        assert_eq!(b.shield_rows, 2);
        assert_eq!(b.u.shape(), (42, 16));
        let means = b.h.row_sum() / 40.0;
        assert!(means.amax() < 1e-12);
        let plain = experiment_batch(40, &prior, MixingSpec::Orthogonal, 0.05, 0.0, 1).unwrap();
        assert_eq!(plain.shield_rows, 0);
        assert_eq!(plain.h, b.h);
    }
}
