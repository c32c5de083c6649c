use crate::error::{GeloError, Result};

/// Decoder-layer dimensions for the per-token multiply-add model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexityModel {
    pub d: u64,
    pub d_ffn: u64,
    pub heads: u64,
}

impl ComplexityModel {
    pub const LLAMA2_7B: Self = Self {
        d: 4096,
        d_ffn: 11008,
        heads: 32,
    };

    pub fn d_head(&self) -> u64 {
        self.d / self.heads
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CrossoverReport {
    /// Q/K/V/O projections, `4·d²`.
    pub projections_madds: u64,
    /// Gate, up and down projections, `3·d·d_ffn`.
    pub ffn_madds: u64,
    /// Attention scores plus weighted sum per unit of sequence length, `2·d`.
    pub attn_madds_per_l: u64,
    /// Sequence length at which attention overtakes projections + FFN.
    pub l_crossover: u64,
}

fn round_to_millions(x: u64) -> u64 {
    (x + 500_000) / 1_000_000 * 1_000_000
}

/// Per-token cost breakdown and the crossover length.
///
/// The crossover compares attention against the projection and FFN totals
/// each rounded to whole millions of MAdds (67 M + 135 M = 202 M for Llama-2
/// 7B), then floors `202·10⁶ / 8192`.
pub fn crossover_length(model: &ComplexityModel) -> Result<CrossoverReport> {
    let ComplexityModel { d, d_ffn, heads } = *model;
    if d == 0 || heads == 0 || d % heads != 0 {
        return Err(GeloError::InvalidParameter(format!(
            "head count {heads} must divide hidden size {d}"
        )));
    }
    let projections_madds = 4 * d * d;
    let ffn_madds = 3 * d * d_ffn;
    let attn_madds_per_l = 2 * d;
    let dense = round_to_millions(projections_madds) + round_to_millions(ffn_madds);
    Ok(CrossoverReport {
        projections_madds,
        ffn_madds,
        attn_madds_per_l,
        l_crossover: dense / attn_madds_per_l,
    })
}
