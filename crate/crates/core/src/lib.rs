//! Zero-shot stance detection framed as textual entailment.
//!
//! Texts (premises) are scored against hypotheses that state a stance towards a
//! target, either one simple statement or a bank of survey items. Entailment
//! distributions are mapped into stance space using each hypothesis' polarity,
//! averaged per text, and evaluated at tweet level (top-k precision against
//! adjudicated gold labels) and group level (Spearman correlation against
//! survey-panel scores).
//!
//! The numeric core (distributions, aggregation, ranking, correlation, panel
//! scoring) is generic over [`Scalar`]; the `f64` aliases below are what the
//! pipeline uses.

pub mod annostore;
pub mod hypothesis;
pub mod ingest;
pub mod metrics;
pub mod nli;
pub mod pipeline;
pub mod scalar;
pub mod stance;

pub use scalar::Scalar;

pub type EntailmentDist = nli::EntailmentDistribution<f64>;
pub type StanceDist = stance::StanceDistribution<f64>;
pub type TweetStanceF64 = stance::TweetStance<f64>;
pub type PartyScoreF64 = metrics::PartyScore<f64>;
pub type PrecisionReportF64 = metrics::PrecisionReport<f64>;
pub type CorrelationReportF64 = metrics::CorrelationReport<f64>;

pub type EntailmentDistF32 = nli::EntailmentDistribution<f32>;
pub type StanceDistF32 = stance::StanceDistribution<f32>;
