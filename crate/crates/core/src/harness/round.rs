use std::time::Instant;

use super::client::OffloadClient;
use super::TimingBreakdown;
use crate::error::{GeloError, Result};
use crate::numerics::{derive_seed, sample_invertible, sample_orthogonal, Dtype, Matrix, MixingMatrix};
use crate::protocol::{mix, pad_shields, strip_shields, unmix_with_limit, HiddenBatch, SensitiveLayers, ShieldConfig, DEFAULT_KAPPA_MAX};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffloadMode {
    Gelo,
    /// `H` is sent in the clear.
    Baseline,
}

impl OffloadMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OffloadMode::Gelo => "gelo",
            OffloadMode::Baseline => "baseline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MixingSpec {
    Orthogonal,
    General { kappa_max: f64 },
}

impl MixingSpec {
    pub fn sample(self, n: usize, seed: u64) -> Result<MixingMatrix> {
        match self {
            MixingSpec::Orthogonal => sample_orthogonal(n, seed),
            MixingSpec::General { kappa_max } => sample_invertible(n, kappa_max, seed),
        }
    }

    /// Condition limit enforced when unmixing.
    pub fn kappa_limit(self) -> f64 {
        match self {
            MixingSpec::Orthogonal => DEFAULT_KAPPA_MAX,
            MixingSpec::General { kappa_max } => kappa_max,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RoundConfig {
    pub mode: OffloadMode,
    pub mixing: MixingSpec,
    pub shields: Option<ShieldConfig>,
    pub dtype: Dtype,
    /// Per-round mixing and shield seeds derive from `(seed, batch id)`.
    pub seed: u64,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            mode: OffloadMode::Gelo,
            mixing: MixingSpec::Orthogonal,
            shields: None,
            dtype: Dtype::F64,
            seed: 0,
        }
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// One offloaded projection: returns `H·W` for the data rows of `h`.
///
/// In gelo mode the steps are: sample `A`, pad shields, mix, offload, unmix,
/// strip shields. Each is timed separately; `copy_ms` is the round trip minus
/// the GEMM time the server reports.
pub fn run_offload_round(
    client: &mut OffloadClient,
    h: &HiddenBatch,
    weight_id: u32,
    cfg: &RoundConfig,
) -> Result<(Matrix, TimingBreakdown)> {
    let start = Instant::now();
    let mut t = TimingBreakdown::zero(cfg.mode);
    let batch_id = client.next_batch_id();
    let round_seed = derive_seed(cfg.seed, batch_id);

    let result = match cfg.mode {
        OffloadMode::Baseline => {
            let (y, gemm_us) = timed_offload(client, batch_id, weight_id, &h.h, cfg.dtype, &mut t, start)?;
            t.gemm_ms = gemm_us as f64 / 1e3;
            y
        }
        OffloadMode::Gelo => {
            let step = Instant::now();
            let padded = match &cfg.shields {
                Some(s) => Some(pad_shields(
                    h,
                    &ShieldConfig {
                        seed: derive_seed(round_seed, 1),
                        ..*s
                    },
                )?),
                None => None,
            };
            let batch = padded.as_ref().unwrap_or(h);
            let n = batch.rows();
            let a = cfg.mixing.sample(n, round_seed)?;
            let limit = cfg.mixing.kappa_limit();
            t.a_gen_ms = ms(step);

            let step = Instant::now();
            let obf = mix(&a, batch)?;
            t.mix_ms = ms(step);

            let (y, gemm_us) = timed_offload(client, batch_id, weight_id, &obf.u, cfg.dtype, &mut t, start)?;
            t.gemm_ms = gemm_us as f64 / 1e3;

            let step = Instant::now();
            let q = unmix_with_limit(&a, &y, limit)?;
            let q = match batch.shield_mask.as_deref() {
                Some(mask) if padded.is_some() => strip_shields(&q, mask)?,
                _ => q,
            };
            t.unmix_ms = ms(step);
            q
        }
    };
    t.total_ms = ms(start);
    t.copy_ms = (t.copy_ms - t.gemm_ms).max(0.0);
    Ok((result, t))
}

/// Sends `m` and records the round-trip in `t.copy_ms`; a transport failure
/// carries the timings collected so far.
fn timed_offload(
    client: &mut OffloadClient,
    batch_id: u64,
    weight_id: u32,
    m: &Matrix,
    dtype: Dtype,
    t: &mut TimingBreakdown,
    start: Instant,
) -> Result<(Matrix, u32)> {
    let step = Instant::now();
    match client.offload(batch_id, weight_id, m, dtype) {
        Ok(out) => {
            t.copy_ms = ms(step);
            Ok(out)
        }
        Err(GeloError::Transport { endpoint, source, .. }) => {
            t.copy_ms = ms(step);
            t.total_ms = ms(start);
            Err(GeloError::Transport {
                endpoint,
                source,
                partial: Some(Box::new(t.clone())),
            })
        }
        Err(e) => Err(e),
    }
}

/// Runs one layer's projection, offloading only where `policy` allows and
/// computing `H·W` locally otherwise.
pub fn run_layer_projection(
    client: &mut OffloadClient,
    layer: usize,
    num_layers: usize,
    policy: &SensitiveLayers,
    h: &HiddenBatch,
    local_w: &Matrix,
    weight_id: u32,
    cfg: &RoundConfig,
) -> Result<(Matrix, Option<TimingBreakdown>)> {
    if policy.offloads(layer, num_layers) {
        let (y, t) = run_offload_round(client, h, weight_id, cfg)?;
        Ok((y, Some(t)))
    } else {
        Ok((&h.h * local_w, None))
    }
}
