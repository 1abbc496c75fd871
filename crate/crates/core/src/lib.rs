//! Li-Yorke and distributional chaos of linear operators on weighted
//! sequence spaces: exact log-domain orbits, density statistics, chaos
//! criteria and executable constructions of (distributionally) irregular
//! vectors.

pub mod error;
pub mod scalar;
pub mod special;
pub mod seqspace;
pub mod operators;
pub mod orbitstats;
pub mod criteria;
pub mod constructors;

pub use error::{Error, Result};
pub use scalar::Real;
pub use operators::{OperatorKind, OperatorSpec};
pub use seqspace::{LogReal, SpaceSpec, SparseVector, WeightSequence};

pub type LogReal64 = LogReal<f64>;
pub type LogReal32 = LogReal<f32>;
pub type SparseVector64 = SparseVector<f64>;
pub type SparseVector32 = SparseVector<f32>;
pub type WeightSequence64 = WeightSequence<f64>;
pub type SpaceSpec64 = SpaceSpec<f64>;
pub type OperatorSpec64 = OperatorSpec<f64>;
pub type OperatorSpec32 = OperatorSpec<f32>;
