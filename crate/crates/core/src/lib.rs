//! Large-kernel polar codes on the binary erasure channel.
//!
//! * [`gf2`]: bit-packed GF(2) vectors and matrices.
//! * [`behavior`]: exact and sampled polarization behavior of one kernel.
//! * [`average`]: closed-form behavior averaged over all nonsingular kernels.
//! * [`scaling`]: scaling-exponent estimators and the erasure process.
//! * [`codec`]: code construction, encoding and successive-cancellation decoding.
//! * [`experiment`]: seeded experiment drivers producing CSV/JSON artifacts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod average;
pub mod behavior;
pub mod codec;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod numeric;
pub mod scaling;
pub mod seed;

pub use behavior::{
    behavior_auto, exact_behavior, exact_behavior_capped, is_decodable, mc_behavior, BehaviorMode, ErasurePattern,
    Kernel, PolarizationBehavior, DEFAULT_EXACT_CAP,
};
pub use error::{Error, Result};
pub use gf2::{sample_nonsingular, BitMatrix, BitVec, PrefixDims};
pub use seed::Seed;
