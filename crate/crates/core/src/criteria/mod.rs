//! Checkers for the chaos criteria: `M_v`/`M_w` suprema, SDCC, DCC and LYCC
//! conditions, summability of `1/‖T^{m_k}‖` and spectral consistency.

mod conditions;
mod summability;
mod supremum;

pub use conditions::{
    dcc_witness_check, lycc_evidence, sdcc_witness_search, span_samples, Combination, DccRatio, DccReport,
    GrowthPoint, LyccReport, SdccRejection, SdccWitness, DECAY_TOLERANCE, SPAN_DEPTH,
};
pub use summability::{
    series_summability_test, spectral_consistency_check, IndexSequence, SeriesVerdict, SpectralConsistency,
    Summability, SummabilityReport, SPECTRAL_SLACK,
};
pub use supremum::{compute_mv, compute_mw, Supremum, SupremumVerdict, GROWTH_WITNESSES};
