//! Two-party offload simulator: the wire format, the untrusted GEMM server,
//! the timed trusted-side client and the latency benchmark.

pub mod bench;
pub mod client;
pub mod observation;
pub mod round;
pub mod server;
pub mod wire;

pub use bench::{benchmark_sweep, BenchConfig, BenchRow};
pub use client::OffloadClient;
pub use round::{run_layer_projection, run_offload_round, MixingSpec, OffloadMode, RoundConfig};
pub use server::{serve_untrusted, ServerOptions, UntrustedServer};

/// Per-step wall-clock durations of one offload round, in milliseconds.
#[derive(Clone, Debug, PartialEq)]
pub struct TimingBreakdown {
    pub a_gen_ms: f64,
    pub mix_ms: f64,
    pub gemm_ms: f64,
    pub unmix_ms: f64,
    pub copy_ms: f64,
    pub total_ms: f64,
    pub mode: OffloadMode,
}

impl TimingBreakdown {
    pub fn zero(mode: OffloadMode) -> Self {
        Self {
            a_gen_ms: 0.0,
            mix_ms: 0.0,
            gemm_ms: 0.0,
            unmix_ms: 0.0,
            copy_ms: 0.0,
            total_ms: 0.0,
            mode,
        }
    }

    /// Column-wise medians.
    pub fn median(samples: &[TimingBreakdown], mode: OffloadMode) -> Self {
        let col = |f: fn(&TimingBreakdown) -> f64| {
            let mut v: Vec<f64> = samples.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            match v.len() {
                0 => 0.0,
                n if n % 2 == 1 => v[n / 2],
                n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
            }
        };
        Self {
            a_gen_ms: col(|t| t.a_gen_ms),
            mix_ms: col(|t| t.mix_ms),
            gemm_ms: col(|t| t.gemm_ms),
            unmix_ms: col(|t| t.unmix_ms),
            copy_ms: col(|t| t.copy_ms),
            total_ms: col(|t| t.total_ms),
            mode,
        }
    }

    pub fn max_component(&self) -> f64 {
        [self.a_gen_ms, self.mix_ms, self.gemm_ms, self.unmix_ms, self.copy_ms]
            .into_iter()
            .fold(0.0, f64::max)
    }
}
