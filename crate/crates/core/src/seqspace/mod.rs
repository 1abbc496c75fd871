//! Finitely supported vectors in `ℓᵖ(v)` / `c₀(v)` and rule-based weight
//! sequences, all carried in the log domain.

pub mod logreal;
mod space;
mod vector;
mod weights;

pub use logreal::{log_sum_exp, LogReal, ParseLogRealError, Sign, CANCELLATION_THRESHOLD};
pub use space::{norm, NormMode, SpaceKind, SpaceSpec};
pub use vector::{axpy, SparseVector};
pub use weights::{BlockGen, Run, Segment, Tail, WeightSequence};

use crate::error::Result;
use crate::scalar::Real;

/// `s_i`.
pub fn weight_at<R: Real>(s: &WeightSequence<R>, i: u64) -> LogReal<R> {
    s.at(i)
}

/// `Π_{k=a}^{b} s_k`; errors when `a > b`.
pub fn weight_product<R: Real>(s: &WeightSequence<R>, a: u64, b: u64) -> Result<LogReal<R>> {
    s.weight_product(a, b)
}
