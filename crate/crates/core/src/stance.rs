//! From entailment to stance.
//!
//! Each hypothesis' entailment distribution is mapped into stance space by
//! its polarity: entailing a pro-target statement favours the target,
//! entailing an anti-target statement opposes it. The per-hypothesis stance
//! distributions are averaged with equal weight, classified by argmax, and
//! tweets are ranked by the averaged favour probability.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypothesis::{HypothesisSet, Polarity};
use crate::ingest::CleanTweet;
use crate::nli::{EntailmentDistribution, Gateway, GatewayError, PremiseHypothesisPair};
use crate::scalar::{Scalar, UNIT_SUM_TOLERANCE};

#[derive(Debug, Error)]
pub enum StanceError {
    #[error("cannot aggregate an empty list of distributions")]
    EmptyAggregate,
    #[error("k must be positive")]
    ZeroK,
    #[error("k = {k} exceeds the {available} available tweets")]
    KTooLarge { k: usize, available: usize },
    #[error("expected {expected} distributions, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StanceLabel {
    Favor,
    Against,
    Neutral,
}

impl StanceLabel {
    pub const ALL: [StanceLabel; 3] = [StanceLabel::Favor, StanceLabel::Against, StanceLabel::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            StanceLabel::Favor => "favor",
            StanceLabel::Against => "against",
            StanceLabel::Neutral => "neutral",
        }
    }
}

impl std::fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StanceLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "favor" => Ok(StanceLabel::Favor),
            "against" => Ok(StanceLabel::Against),
            "neutral" => Ok(StanceLabel::Neutral),
            other => Err(format!("unknown stance label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StanceDistribution<T> {
    pub favor: T,
    pub against: T,
    pub neutral: T,
}

impl<T: Scalar> StanceDistribution<T> {
    pub fn is_valid(&self) -> bool {
        let parts = [self.favor, self.against, self.neutral];
        parts.iter().all(|p| p.is_finite() && *p >= T::zero())
            && (parts.iter().fold(T::zero(), |a, &b| a + b) - T::one()).abs() <= T::of(UNIT_SUM_TOLERANCE)
    }

    fn components(&self) -> [T; 3] {
        [self.favor, self.against, self.neutral]
    }
}

/// Reads an entailment distribution as a stance distribution.
pub fn to_stance_space<T: Scalar>(d: &EntailmentDistribution<T>, polarity: Polarity) -> StanceDistribution<T> {
    match polarity {
        Polarity::ProTarget => StanceDistribution {
            favor: d.entailment,
            against: d.contradiction,
            neutral: d.neutral,
        },
        Polarity::AntiTarget => StanceDistribution {
            favor: d.contradiction,
            against: d.entailment,
            neutral: d.neutral,
        },
    }
}

/// Componentwise arithmetic mean.
///
/// Each component is summed in ascending order, so the result is bit-for-bit
/// independent of the input order.
pub fn aggregate<T: Scalar>(dists: &[StanceDistribution<T>]) -> Result<StanceDistribution<T>, StanceError> {
    if dists.is_empty() {
        return Err(StanceError::EmptyAggregate);
    }
    let n = T::of_count(dists.len());
    let mean = |i: usize| {
        let mut values: Vec<T> = dists.iter().map(|d| d.components()[i]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let sum = values.iter().fold(T::zero(), |acc, &v| acc + v);
        // rounding can push a mean of equal values one ulp outside them
        (sum / n).max(values[0]).min(values[values.len() - 1])
    };
    Ok(StanceDistribution {
        favor: mean(0),
        against: mean(1),
        neutral: mean(2),
    })
}

/// Argmax with exact ties resolved neutral, then against, then favor.
pub fn classify<T: Scalar>(d: &StanceDistribution<T>) -> StanceLabel {
    let mut best = (StanceLabel::Neutral, d.neutral);
    for (label, p) in [(StanceLabel::Against, d.against), (StanceLabel::Favor, d.favor)] {
        if p > best.1 {
            best = (label, p);
        }
    }
    best.0
}

/// Stance assessment of one tweet over a hypothesis set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetStance<T> {
    pub tweet_id: String,
    pub party: String,
    pub year: i32,
    pub per_hypothesis: BTreeMap<String, StanceDistribution<T>>,
    pub aggregated: StanceDistribution<T>,
    pub label: StanceLabel,
    pub favor_prob: T,
}

/// Builds a [`TweetStance`] from entailment distributions given in hypothesis-set order.
pub fn assess<T: Scalar>(
    tweet: &CleanTweet,
    set: &HypothesisSet,
    dists: &[EntailmentDistribution<T>],
) -> Result<TweetStance<T>, StanceError> {
    if dists.len() != set.len() {
        return Err(StanceError::CountMismatch {
            expected: set.len(),
            got: dists.len(),
        });
    }
    let stances: Vec<StanceDistribution<T>> = set
        .hypotheses()
        .iter()
        .zip(dists)
        .map(|(h, d)| to_stance_space(d, h.polarity))
        .collect();
    let aggregated = aggregate(&stances)?;
    Ok(TweetStance {
        tweet_id: tweet.id.clone(),
        party: tweet.party.clone(),
        year: tweet.year,
        per_hypothesis: set.hypotheses().iter().map(|h| h.id.clone()).zip(stances).collect(),
        aggregated,
        label: classify(&aggregated),
        favor_prob: aggregated.favor,
    })
}

/// Every tweet × hypothesis pair, tweet-major.
pub fn pairs_for(tweets: &[CleanTweet], set: &HypothesisSet) -> Vec<PremiseHypothesisPair> {
    tweets
        .iter()
        .flat_map(|t| {
            set.hypotheses().iter().map(move |h| PremiseHypothesisPair {
                tweet_id: t.id.clone(),
                hypothesis_id: h.id.clone(),
                premise: t.text.clone(),
                hypothesis: h.text.clone(),
            })
        })
        .collect()
}

/// Assesses tweets from tweet-major distributions as produced for [`pairs_for`].
pub fn assess_all<T: Scalar>(
    tweets: &[CleanTweet],
    set: &HypothesisSet,
    dists: &[EntailmentDistribution<T>],
) -> Result<Vec<TweetStance<T>>, StanceError> {
    let expected = tweets.len() * set.len();
    if dists.len() != expected {
        return Err(StanceError::CountMismatch {
            expected,
            got: dists.len(),
        });
    }
    tweets
        .iter()
        .zip(dists.chunks(set.len()))
        .map(|(t, ds)| assess(t, set, ds))
        .collect()
}

/// Scores every tweet against every hypothesis and assesses the results.
pub fn score_tweets(
    gateway: &Gateway,
    tweets: &[CleanTweet],
    set: &HypothesisSet,
) -> Result<Vec<TweetStance<f64>>, StanceError> {
    let dists = gateway.score_batch(&pairs_for(tweets, set))?;
    assess_all(tweets, set, &dists)
}

fn by_favor_then_id<T: Scalar>(a: &TweetStance<T>, b: &TweetStance<T>) -> Ordering {
    b.favor_prob
        .partial_cmp(&a.favor_prob)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.tweet_id.cmp(&b.tweet_id))
}

/// The `k` tweets with the highest favour probability, descending; equal
/// probabilities are ordered by ascending tweet id.
pub fn rank_top_k<T: Scalar>(stances: &[TweetStance<T>], k: usize) -> Result<Vec<TweetStance<T>>, StanceError> {
    if k == 0 {
        return Err(StanceError::ZeroK);
    }
    if k > stances.len() {
        return Err(StanceError::KTooLarge {
            k,
            available: stances.len(),
        });
    }
    let mut ranked: Vec<TweetStance<T>> = stances.to_vec();
    ranked.sort_by(by_favor_then_id);
    ranked.truncate(k);
    Ok(ranked)
}
