use std::io::{self, Write};

use super::client::OffloadClient;
use super::round::{run_offload_round, MixingSpec, OffloadMode, RoundConfig};
use super::TimingBreakdown;
use crate::error::{GeloError, Result};
use crate::numerics::{derive_seed, gaussian_matrix, rng_from_seed, Dtype};
use crate::protocol::{HiddenBatch, ShieldConfig};

pub const BENCH_CSV_HEADER: &str =
    "n,gelo_total_ms,baseline_total_ms,overhead_pct,a_gen_ms,mix_ms,gemm_ms,unmix_ms,copy_ms";
pub const BREAKDOWN_CSV_HEADER: &str = "n,mode,a_gen_ms,mix_ms,gemm_ms,unmix_ms,copy_ms,total_ms";

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub mixing: MixingSpec,
    pub shields: Option<ShieldConfig>,
    pub dtype: Dtype,
    pub seed: u64,
    /// Skip the gelo rounds entirely.
    pub baseline_only: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            mixing: MixingSpec::Orthogonal,
            shields: None,
            dtype: Dtype::F64,
            seed: 0,
            baseline_only: false,
        }
    }
}

/// Median timings for one batch size.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub n: usize,
    pub gelo: Option<TimingBreakdown>,
    pub baseline: TimingBreakdown,
}

impl BenchRow {
    pub fn gelo_total_ms(&self) -> Option<f64> {
        self.gelo.as_ref().map(|g| g.total_ms)
    }

    pub fn baseline_total_ms(&self) -> f64 {
        self.baseline.total_ms
    }

    /// `100·(gelo − baseline)/baseline`.
    pub fn overhead_pct(&self) -> Option<f64> {
        self.gelo_total_ms()
            .map(|g| 100.0 * (g - self.baseline.total_ms) / self.baseline.total_ms)
    }
}

/// Runs `reps` warmup and `reps` timed rounds per mode for each batch size and
/// reports per-column medians. `W` (d×p) is loaded once.
pub fn benchmark_sweep(
    client: &mut OffloadClient,
    batch_sizes: &[usize],
    d: usize,
    p: usize,
    reps: usize,
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>> {
    if reps < 3 {
        return Err(GeloError::InvalidParameter(format!("reps must be >= 3, got {reps}")));
    }
    const WEIGHT_ID: u32 = 1;
    let w = gaussian_matrix(d, p, &mut rng_from_seed(derive_seed(cfg.seed, u64::MAX)));
    client.load_weights(WEIGHT_ID, &w, cfg.dtype)?;

    let mut rows = Vec::with_capacity(batch_sizes.len());
    for &n in batch_sizes {
        let h = HiddenBatch::new(gaussian_matrix(n, d, &mut rng_from_seed(derive_seed(cfg.seed, n as u64))));
        let round = |mode| RoundConfig {
            mode,
            mixing: cfg.mixing,
            shields: cfg.shields,
            dtype: cfg.dtype,
            seed: derive_seed(cfg.seed, n as u64 + 1),
        };
        let mut measure = |mode| -> Result<TimingBreakdown> {
            let rc = round(mode);
            for _ in 0..reps {
                run_offload_round(client, &h, WEIGHT_ID, &rc)?;
            }
            let mut samples = Vec::with_capacity(reps);
            for _ in 0..reps {
                samples.push(run_offload_round(client, &h, WEIGHT_ID, &rc)?.1);
            }
            Ok(TimingBreakdown::median(&samples, mode))
        };
        let baseline = measure(OffloadMode::Baseline)?;
        let gelo = if cfg.baseline_only {
            None
        } else {
            Some(measure(OffloadMode::Gelo)?)
        };
        rows.push(BenchRow { n, gelo, baseline });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// Overhead table; breakdown columns are the gelo medians (baseline ones when
/// no gelo rounds ran).
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{BENCH_CSV_HEADER}")?;
    for r in rows {
        let t = r.gelo.as_ref().unwrap_or(&r.baseline);
        writeln!(
            out,
            "{},{},{:.4},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.n,
            opt(r.gelo_total_ms()),
            r.baseline_total_ms(),
            opt(r.overhead_pct()),
            t.a_gen_ms,
            t.mix_ms,
            t.gemm_ms,
            t.unmix_ms,
            t.copy_ms
        )?;
    }
    Ok(())
}

pub fn write_breakdown_csv<W: Write>(rows: &[BenchRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{BREAKDOWN_CSV_HEADER}")?;
    for r in rows {
        for t in r.gelo.iter().chain(std::iter::once(&r.baseline)) {
            writeln!(
                out,
                "{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                r.n,
                t.mode.as_str(),
                t.a_gen_ms,
                t.mix_ms,
                t.gemm_ms,
                t.unmix_ms,
                t.copy_ms,
                t.total_ms
            )?;
        }
    }
    Ok(())
}

/// Per-step breakdown of one batch size: step, milliseconds, share of total.
pub fn format_breakdown_table(row: &BenchRow) -> String {
    let t = row.gelo.as_ref().unwrap_or(&row.baseline);
    let steps = [
        ("A-gen (QR)", t.a_gen_ms),
        ("Mix (A·H)", t.mix_ms),
        ("GEMM (U·W)", t.gemm_ms),
        ("Unmix (Aᵀ·Y)", t.unmix_ms),
        ("Copy (socket+I/O)", t.copy_ms),
    ];
    let mut s = format!("Latency breakdown at n={} ({})\n", row.n, t.mode.as_str());
    s.push_str(&format!("{:<20} {:>10} {:>8}\n", "Step", "ms", "%"));
    for (name, v) in steps {
        let pct = if t.total_ms > 0.0 { 100.0 * v / t.total_ms } else { 0.0 };
        s.push_str(&format!("{name:<20} {v:>10.3} {pct:>7.1}%\n"));
    }
    s.push_str(&format!("{:<20} {:>10.3} {:>7.1}%\n", "Total", t.total_ms, 100.0));
    s
}
