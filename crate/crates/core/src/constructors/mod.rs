//! Executable versions of the constructive arguments: irregular and
//! distributionally irregular vectors, irregular manifolds, block-designed
//! weights and the `I + T` existence operator, each with a verification hook.

mod distributional;
mod existence;
mod irregular;
mod masks;
mod weights;

use serde::{Deserialize, Serialize};

use crate::seqspace::{LogReal, SparseVector};

pub use distributional::{
    dcc_feasible_schedule, dense_irregular_manifold, dirregular_from_dcc, select_dcc_subsequence, DccConstruction,
    DccInputs, ManifoldReport, ManifoldOptions,
};
pub use existence::{
    existence_operator, existence_weight, norm_power_basis, ExistenceReport, RangeCheck, StageReport, MAX_STAGE,
};
pub use irregular::{
    irregular_from_bounded_oscillation, irregular_from_growth, irregular_from_lycc, lycc_terms_from_growth,
    BoundedOscillation, IndexRule, LyccConstruction, LyccTerm,
};
pub use masks::MaskFamily;
pub use weights::{design_di_forward_weights, oscillating_block_weights, DiDesign};

/// One term `coefficient · vector` of a truncated series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub coefficient: LogReal,
    pub vector: SparseVector,
    /// The orbit index the term was selected at.
    pub source: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPlan {
    pub terms: Vec<SeriesTerm>,
    /// Number of levels the series was truncated at.
    pub truncation: u64,
    /// Upper bound on the norm of the dropped tail.
    pub tail_bound: LogReal,
    /// The inequalities the truncated sum was checked against.
    pub targets: Vec<Check>,
}

impl SeriesPlan {
    pub fn sum(&self) -> SparseVector {
        self.terms
            .iter()
            .fold(SparseVector::zero(), |acc, t| acc.add(&t.vector.scale(t.coefficient)))
    }

    /// Smallest `|lhs - rhs|` over the targets, relative to `rhs`.
    pub fn smallest_margin(&self) -> Option<f64> {
        self.targets.iter().map(Check::relative_margin).reduce(f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Less,
    Greater,
}

/// A verified inequality `lhs < rhs` or `lhs > rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub level: u64,
    pub lhs: LogReal,
    pub relation: Relation,
    pub rhs: LogReal,
    pub holds: bool,
}

impl Check {
    pub fn new(label: impl Into<String>, level: u64, lhs: LogReal, relation: Relation, rhs: LogReal) -> Self {
        let holds = match relation {
            Relation::Less => lhs < rhs,
            Relation::Greater => lhs > rhs,
        };
        Check {
            label: label.into(),
            level,
            lhs,
            relation,
            rhs,
            holds,
        }
    }

    pub fn less(label: impl Into<String>, level: u64, lhs: f64, rhs: f64) -> Self {
        Check::new(label, level, LogReal::from_value(lhs), Relation::Less, LogReal::from_value(rhs))
    }

    pub fn greater(label: impl Into<String>, level: u64, lhs: f64, rhs: f64) -> Self {
        Check::new(label, level, LogReal::from_value(lhs), Relation::Greater, LogReal::from_value(rhs))
    }

    pub fn less_ln(label: impl Into<String>, level: u64, lhs: f64, rhs: f64) -> Self {
        Check::new(label, level, LogReal::from_ln(lhs), Relation::Less, LogReal::from_ln(rhs))
    }

    pub fn greater_ln(label: impl Into<String>, level: u64, lhs: f64, rhs: f64) -> Self {
        Check::new(label, level, LogReal::from_ln(lhs), Relation::Greater, LogReal::from_ln(rhs))
    }

    /// `|lhs - rhs| / |rhs|`, signed positive when the check holds.
    pub fn relative_margin(&self) -> f64 {
        let (l, r) = (self.lhs.value(), self.rhs.value());
        let d = match self.relation {
            Relation::Less => r - l,
            Relation::Greater => l - r,
        };
        if r == 0.0 {
            d
        } else {
            d / r.abs()
        }
    }
}
