//! Trusted-side logic: per-batch mixing and unmixing, shield padding and the
//! batching-time defenses applied before anything leaves the trusted side.

mod batch;
mod flooding;
mod interleave;
mod session;
mod shields;

pub use batch::{mix, unmix, unmix_with_limit, HiddenBatch, ObfuscatedBatch, DEFAULT_KAPPA_MAX};
pub use flooding::{detect_flooding, FloodDetector, FloodReport, TokenBaseline, DEFAULT_FLOOD_THRESHOLD};
pub use interleave::{interleave_users, Interleaved};
pub use session::{SensitiveLayers, TrustedSession};
pub use shields::{pad_shields, shield_count, strip_shields, ShieldConfig};
