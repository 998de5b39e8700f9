//! Entailment scoring behind a uniform interface.
//!
//! A [`Scorer`] answers wire requests `{id, premise, hypothesis}` with
//! three-way probabilities. The [`Gateway`] batches pairs, retries transport
//! failures, validates every reply and hands back admitted
//! [`EntailmentDistribution`]s in input order.

mod distribution;
mod gateway;
pub mod http;
pub mod mock;
pub mod process;
pub mod wire;

pub use distribution::{DistributionError, EntailmentDistribution, RENORMALIZE_TOLERANCE};
pub use gateway::{Gateway, GatewayConfig};
pub use mock::{make_mock_scorer, MockRule, MockRules, MockScorer};
pub use wire::{Handshake, WireRequest, WireResponse};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend timed out after {0:?}")]
    Timeout(Duration),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("backend reported an error: {0}")]
    Backend(String),
    #[error("response {id:?}: {source}")]
    Distribution {
        id: String,
        #[source]
        source: DistributionError,
    },
    #[error("invalid pair ({tweet_id}, {hypothesis_id}): {reason}")]
    InvalidPair {
        tweet_id: String,
        hypothesis_id: String,
        reason: &'static str,
    },
    #[error("mock rule {index}: {reason}")]
    InvalidRule { index: usize, reason: String },
}

impl GatewayError {
    /// Transport failures are worth retrying; protocol and content errors are not.
    pub fn is_transient(&self) -> bool {
        matches!(self, GatewayError::Unreachable(_) | GatewayError::Timeout(_))
    }
}

/// A tweet paired with one hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PremiseHypothesisPair {
    pub tweet_id: String,
    pub hypothesis_id: String,
    pub premise: String,
    pub hypothesis: String,
}

impl PremiseHypothesisPair {
    pub fn new(
        tweet_id: impl Into<String>,
        hypothesis_id: impl Into<String>,
        premise: impl Into<String>,
        hypothesis: impl Into<String>,
    ) -> Result<Self, GatewayError> {
        let pair = Self {
            tweet_id: tweet_id.into(),
            hypothesis_id: hypothesis_id.into(),
            premise: premise.into(),
            hypothesis: hypothesis.into(),
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let reason = if self.premise.trim().is_empty() {
            "empty premise"
        } else if self.hypothesis.trim().is_empty() {
            "empty hypothesis"
        } else {
            return Ok(());
        };
        Err(GatewayError::InvalidPair {
            tweet_id: self.tweet_id.clone(),
            hypothesis_id: self.hypothesis_id.clone(),
            reason,
        })
    }
}

/// Something that can score a batch of wire requests.
///
/// Implementations return one response per request; the gateway matches
/// them back by id and validates their content.
pub trait Scorer: Send + Sync {
    /// Whether concurrent `score` calls are allowed. When false the gateway
    /// serializes access.
    fn concurrent(&self) -> bool {
        false
    }

    fn score(&self, requests: &[WireRequest]) -> Result<Vec<WireResponse>, GatewayError>;
}
