//! Obfuscated GEMM offload.
//!
//! A trusted party holding a batch of hidden states `H` (n×d) hides it behind a
//! fresh, secret, invertible left-mixing `U = A·H` before handing it to an
//! untrusted accelerator that computes `Y = U·W`. The trusted side recovers
//! `H·W = A⁻¹·Y`. This crate contains:
//!
//! * [`numerics`]: seedable linear-algebra primitives shared by everything else.
//! * [`protocol`]: mixing/unmixing, shield padding and batching-time defenses.
//! * [`harness`]: the wire format, an untrusted GEMM server and the timed client.
//! * [`synthdata`]: synthetic hidden states and token streams.
//! * [`attacks`]: anchor-based and blind source separation adversaries.
//! * [`metrics`]: recovery metrics, leak diagnostics and the cost model.

pub mod attacks;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numerics;
pub mod protocol;
pub mod synthdata;

pub use error::{GeloError, Result};
pub use numerics::{Assignment, Dtype, EigDecomposition, Matrix, MixingKind, MixingMatrix};
pub use protocol::{HiddenBatch, ObfuscatedBatch, ShieldConfig};
