//! Tweet-level and party-level evaluation.
//!
//! Tweet level: precision of the top-k ranked tweets against gold labels,
//! read two ways (gold favour only, and gold non-neutral), plus random
//! baselines. Party level: panel Likert means per party (optionally per
//! year) correlated with the mean favour probability of each party's tweets
//! using Spearman's rank correlation with average ranks for ties.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ingest::{CleanTweet, PanelResponse, PANEL_ITEMS};
use crate::scalar::Scalar;
use crate::stance::{rank_top_k, StanceError, StanceLabel, TweetStance};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no gold label for tweet {0:?}")]
    MissingGold(String),
    #[error("expected {expected} ranked tweets, got {got}")]
    WrongTopKSize { expected: usize, got: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("cannot sample {n} tweets from a corpus of {available}")]
    SampleTooLarge { n: usize, available: usize },
    #[error("no panel responses")]
    EmptyResponses,
    #[error("reverse-coded item {0} is outside 1..={PANEL_ITEMS}")]
    BadReverseItem(usize),
    #[error("series lengths differ ({xs} vs {ys})")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least two observations, got {0}")]
    TooFewObservations(usize),
    #[error("{0} is constant; rank correlation is undefined")]
    Degenerate(&'static str),
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
    #[error("only {found} (party, period) groups matched a panel score; need at least 2")]
    InsufficientPairs { found: usize },
    #[error("panel scores mix per-year and all-years entries")]
    MixedScorePeriods,
    #[error("no panel scores")]
    EmptyScores,
    #[error(transparent)]
    Stance(#[from] StanceError),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate gold label for tweet {0:?}")]
    DuplicateGold(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Either a specific value or the whole range ("all").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrAll<T> {
    Value(T),
    All,
}

impl<T: Serialize> Serialize for OrAll<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            OrAll::Value(v) => v.serialize(s),
            OrAll::All => s.serialize_str("all"),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for OrAll<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr<T> {
            Value(T),
            Label(String),
        }
        match Repr::<T>::deserialize(d)? {
            Repr::Value(v) => Ok(OrAll::Value(v)),
            Repr::Label(s) if s == "all" => Ok(OrAll::All),
            Repr::Label(s) => Err(serde::de::Error::custom(format!(
                "expected a value or \"all\", got {s:?}"
            ))),
        }
    }
}

impl<T: std::fmt::Display> std::fmt::Display for OrAll<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OrAll::Value(v) => v.fmt(f),
            OrAll::All => f.write_str("all"),
        }
    }
}

// ---------------------------------------------------------------------------
// Gold labels and precision
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldOrigin {
    Agreed,
    Adjudicated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub tweet_id: String,
    pub label: StanceLabel,
    pub origin: GoldOrigin,
}

pub type GoldSet = BTreeMap<String, GoldLabel>;

pub fn read_gold<R: BufRead>(reader: R) -> Result<GoldSet, MetricsError> {
    let mut gold = GoldSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let malformed = |message: String| MetricsError::Malformed { line: idx + 1, message };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let label: GoldLabel = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if gold.contains_key(&label.tweet_id) {
            return Err(MetricsError::DuplicateGold(label.tweet_id));
        }
        gold.insert(label.tweet_id.clone(), label);
    }
    Ok(gold)
}

pub fn load_gold(path: impl AsRef<Path>) -> Result<GoldSet, MetricsError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_gold(BufReader::new(file))
}

/// Which of the four evaluation conditions a result belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionTags {
    pub survey: bool,
    pub filtered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport<T> {
    pub k: usize,
    /// Share of the k tweets whose gold label is favour.
    pub p_entail: T,
    /// Share of the k tweets whose gold label is not neutral.
    pub p_nonneutral: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionTags>,
}

impl<T: Scalar> PrecisionReport<T> {
    pub fn with_condition(mut self, condition: ConditionTags) -> Self {
        self.condition = Some(condition);
        self
    }

    /// Table rendering, e.g. `0.70 (0.80)`.
    pub fn cell(&self) -> String {
        format_precision_cell(self.p_entail, self.p_nonneutral)
    }
}

fn format_precision_cell<T: Scalar>(entail: T, nonneutral: T) -> String {
    format!(
        "{:.2} ({:.2})",
        entail.to_f64().unwrap_or(f64::NAN),
        nonneutral.to_f64().unwrap_or(f64::NAN)
    )
}

/// Precision over a list of tweet ids, every one of which must have a gold label.
pub fn precision_of_ids<'a, T: Scalar>(
    ids: impl ExactSizeIterator<Item = &'a str>,
    gold: &GoldSet,
) -> Result<PrecisionReport<T>, MetricsError> {
    let k = ids.len();
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    let (mut favor, mut nonneutral) = (0usize, 0usize);
    for id in ids {
        let label = gold
            .get(id)
            .ok_or_else(|| MetricsError::MissingGold(id.to_string()))?
            .label;
        favor += usize::from(label == StanceLabel::Favor);
        nonneutral += usize::from(label != StanceLabel::Neutral);
    }
    let denom = T::of_count(k);
    Ok(PrecisionReport {
        k,
        p_entail: T::of_count(favor) / denom,
        p_nonneutral: T::of_count(nonneutral) / denom,
        condition: None,
    })
}

/// Precision of an already-ranked top-k list against gold labels.
pub fn topk_precision<T: Scalar>(
    topk: &[TweetStance<T>],
    gold: &GoldSet,
    k: usize,
) -> Result<PrecisionReport<T>, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    if topk.len() != k {
        return Err(MetricsError::WrongTopKSize {
            expected: k,
            got: topk.len(),
        });
    }
    precision_of_ids(topk.iter().map(|t| t.tweet_id.as_str()), gold)
}

/// Precision of an unranked sample, e.g. a random baseline.
pub fn sample_precision<T: Scalar>(sample: &[CleanTweet], gold: &GoldSet) -> Result<PrecisionReport<T>, MetricsError> {
    precision_of_ids(sample.iter().map(|t| t.id.as_str()), gold)
}

/// Uniform sample without replacement, reproducible from `seed`.
pub fn sample_baseline(corpus: &[CleanTweet], n: usize, seed: u64) -> Result<Vec<CleanTweet>, MetricsError> {
    if n > corpus.len() {
        return Err(MetricsError::SampleTooLarge {
            n,
            available: corpus.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, corpus.len(), n)
        .into_iter()
        .map(|i| corpus[i].clone())
        .collect())
}

// ---------------------------------------------------------------------------
// Panel scores
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    ByParty,
    #[default]
    ByPartyYear,
}

/// The panel items whose agreement indicates opposing traditional roles.
pub const DEFAULT_REVERSE_CODED: [usize; 4] = [1, 4, 6, 7];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyScore<T> {
    pub party: String,
    pub year: OrAll<i32>,
    /// Mean Likert value after reverse coding; higher favours the target.
    pub score: T,
    pub respondents: usize,
}

/// Mean (reverse-coded) Likert score per party or per party and year.
///
/// Reverse-coded items contribute `6 - x`. The score averages every item
/// value of every respondent in the group. Output is ordered by party, then year.
pub fn panel_scores<T: Scalar>(
    responses: &[PanelResponse],
    reverse_coded: &BTreeSet<usize>,
    grouping: Grouping,
) -> Result<Vec<PartyScore<T>>, MetricsError> {
    if responses.is_empty() {
        return Err(MetricsError::EmptyResponses);
    }
    if let Some(&bad) = reverse_coded.iter().find(|&&i| i == 0 || i > PANEL_ITEMS) {
        return Err(MetricsError::BadReverseItem(bad));
    }
    let mut groups: BTreeMap<(String, OrAll<i32>), (u64, usize)> = BTreeMap::new();
    for r in responses {
        let period = match grouping {
            Grouping::ByParty => OrAll::All,
            Grouping::ByPartyYear => OrAll::Value(r.year),
        };
        let total: u64 = r
            .item_responses
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let x = u64::from(x);
                if reverse_coded.contains(&(i + 1)) {
                    6 - x
                } else {
                    x
                }
            })
            .sum();
        let entry = groups.entry((r.party_voted.clone(), period)).or_default();
        entry.0 += total;
        entry.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|((party, year), (total, respondents))| PartyScore {
            party,
            year,
            score: T::of(total as f64) / T::of_count(respondents * PANEL_ITEMS),
            respondents,
        })
        .collect())
}

/// Orders scores from most to least in favour, party name breaking ties.
pub fn rank_parties<T: Scalar>(scores: &[PartyScore<T>]) -> Vec<PartyScore<T>> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.party.cmp(&b.party))
            .then_with(|| a.year.cmp(&b.year))
    });
    ranked
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![T::zero(); n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = T::of_count(start + 1 + end) / T::of(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> T {
    let n = T::of_count(xs.len());
    let mean_x = xs.iter().fold(T::zero(), |a, &b| a + b) / n;
    let mean_y = ys.iter().fold(T::zero(), |a, &b| a + b) / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman_rho<T: Scalar>(xs: &[T], ys: &[T]) -> Result<T, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooFewObservations(xs.len()));
    }
    for (name, series) in [("xs", xs), ("ys", ys)] {
        if series.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::NonFinite(name));
        }
        if series.iter().all(|v| *v == series[0]) {
            return Err(MetricsError::Degenerate(name));
        }
    }
    let rho = pearson(&average_ranks(xs), &average_ranks(ys));
    Ok(rho.max(-T::one()).min(T::one()))
}

// ---------------------------------------------------------------------------
// Party-level evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison<T> {
    pub party: String,
    pub year: OrAll<i32>,
    pub tweets: usize,
    pub mean_favor: T,
    pub panel_score: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport<T> {
    pub k: OrAll<usize>,
    pub rho: T,
    pub n_pairs: usize,
    pub groups: Vec<GroupComparison<T>>,
}

/// Correlates mean favour probability per (party, period) with panel scores.
///
/// Tweets are restricted to the top `k` by favour probability (or all).
/// Periods follow the panel scores: per-year scores pair with tweets of that
/// year, all-years scores pair with every tweet of the party. Groups without
/// a matching score are dropped; `n_pairs` counts what remains.
pub fn party_level_eval<T: Scalar>(
    stances: &[TweetStance<T>],
    party_scores: &[PartyScore<T>],
    k: OrAll<usize>,
) -> Result<CorrelationReport<T>, MetricsError> {
    if party_scores.is_empty() {
        return Err(MetricsError::EmptyScores);
    }
    let per_year = party_scores.iter().all(|s| s.year != OrAll::All);
    let all_years = party_scores.iter().all(|s| s.year == OrAll::All);
    if !per_year && !all_years {
        return Err(MetricsError::MixedScorePeriods);
    }
    let restricted = match k {
        OrAll::Value(k) => rank_top_k(stances, k)?,
        OrAll::All => stances.to_vec(),
    };

    let mut sums: BTreeMap<(&str, OrAll<i32>), (T, usize)> = BTreeMap::new();
    for t in &restricted {
        let period = if per_year { OrAll::Value(t.year) } else { OrAll::All };
        let entry = sums.entry((t.party.as_str(), period)).or_insert((T::zero(), 0));
        entry.0 = entry.0 + t.favor_prob;
        entry.1 += 1;
    }
    let lookup: BTreeMap<(&str, OrAll<i32>), T> = party_scores
        .iter()
        .map(|s| ((s.party.as_str(), s.year), s.score))
        .collect();

    let groups: Vec<GroupComparison<T>> = sums
        .into_iter()
        .filter_map(|((party, year), (sum, tweets))| {
            lookup.get(&(party, year)).map(|&panel_score| GroupComparison {
                party: party.to_string(),
                year,
                tweets,
                mean_favor: sum / T::of_count(tweets),
                panel_score,
            })
        })
        .collect();
    if groups.len() < 2 {
        return Err(MetricsError::InsufficientPairs { found: groups.len() });
    }
    let model: Vec<T> = groups.iter().map(|g| g.mean_favor).collect();
    let panel: Vec<T> = groups.iter().map(|g| g.panel_score).collect();
    Ok(CorrelationReport {
        k,
        rho: spearman_rho(&model, &panel)?,
        n_pairs: groups.len(),
        groups,
    })
}

// ---------------------------------------------------------------------------
// Evaluation report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusTag {
    All,
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisTag {
    Simple,
    Survey,
}

impl CorpusTag {
    pub const BOTH: [CorpusTag; 2] = [CorpusTag::All, CorpusTag::Filtered];

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusTag::All => "all",
            CorpusTag::Filtered => "filtered",
        }
    }
}

impl HypothesisTag {
    pub const BOTH: [HypothesisTag; 2] = [HypothesisTag::Simple, HypothesisTag::Survey];

    pub fn as_str(self) -> &'static str {
        match self {
            HypothesisTag::Simple => "simple",
            HypothesisTag::Survey => "survey",
        }
    }
}

/// A report cell that may not be computable for a given corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell<R> {
    Ok(R),
    Unavailable { k: OrAll<usize>, reason: String },
}

impl<R> Cell<R> {
    pub fn ok(&self) -> Option<&R> {
        match self {
            Cell::Ok(r) => Some(r),
            Cell::Unavailable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport<T> {
    pub corpus: CorpusTag,
    pub hypotheses: HypothesisTag,
    pub tweets: usize,
    pub precision: Vec<Cell<PrecisionReport<T>>>,
    pub correlation: Vec<Cell<CorrelationReport<T>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport<T> {
    pub corpus: CorpusTag,
    pub n: usize,
    pub seed: u64,
    pub tweet_ids: Vec<String>,
    pub precision: Cell<PrecisionReport<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<T> {
    pub k_values: Vec<usize>,
    pub conditions: Vec<ConditionReport<T>>,
    pub baselines: Vec<BaselineReport<T>>,
}

impl<T: Scalar> EvalReport<T> {
    pub fn condition(&self, corpus: CorpusTag, hypotheses: HypothesisTag) -> Option<&ConditionReport<T>> {
        self.conditions
            .iter()
            .find(|c| c.corpus == corpus && c.hypotheses == hypotheses)
    }

    pub fn baseline(&self, corpus: CorpusTag) -> Option<&BaselineReport<T>> {
        self.baselines.iter().find(|b| b.corpus == corpus)
    }

    /// Plain-text grid: one column per corpus × hypothesis condition plus the
    /// random baseline of each corpus.
    pub fn render_table(&self) -> String {
        let mut columns: Vec<(String, Vec<String>)> = Vec::new();
        let mut rows: Vec<String> = self.k_values.iter().map(|k| format!("Precision@{k}")).collect();
        rows.extend(self.k_values.iter().map(|k| format!("Spearman rho@{k}")));
        rows.push("Spearman rho@all".to_string());

        for corpus in CorpusTag::BOTH {
            for hyp in HypothesisTag::BOTH {
                let Some(cond) = self.condition(corpus, hyp) else {
                    continue;
                };
                let mut cells = Vec::new();
                for k in &self.k_values {
                    let cell = cond
                        .precision
                        .iter()
                        .filter_map(Cell::ok)
                        .find(|p| p.k == *k)
                        .map_or_else(|| "n/a".to_string(), PrecisionReport::cell);
                    cells.push(cell);
                }
                for k in self.k_values.iter().map(|&k| OrAll::Value(k)).chain([OrAll::All]) {
                    let cell = cond
                        .correlation
                        .iter()
                        .filter_map(Cell::ok)
                        .find(|c| c.k == k)
                        .map_or_else(
                            || "n/a".to_string(),
                            |c| format!("{:.2} (n={})", c.rho.to_f64().unwrap_or(f64::NAN), c.n_pairs),
                        );
                    cells.push(cell);
                }
                columns.push((format!("{}/{}", corpus.as_str(), hyp.as_str()), cells));
            }
            if let Some(base) = self.baseline(corpus) {
                let mut cells = Vec::new();
                let value = base
                    .precision
                    .ok()
                    .map_or_else(|| "n/a".to_string(), PrecisionReport::cell);
                cells.extend(self.k_values.iter().map(|_| value.clone()));
                cells.extend((0..=self.k_values.len()).map(|_| "-".to_string()));
                columns.push((format!("{}/random(n={})", corpus.as_str(), base.n), cells));
            }
        }

        let label_width = rows.iter().map(String::len).max().unwrap_or(0);
        let widths: Vec<usize> = columns
            .iter()
            .map(|(h, cells)| cells.iter().map(String::len).chain([h.len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:label_width$}", "");
        for ((header, _), w) in columns.iter().zip(&widths) {
            let _ = write!(out, " | {header:>w$}");
        }
        out.push('\n');
        for (r, row) in rows.iter().enumerate() {
            let _ = write!(out, "{row:label_width$}");
            for ((_, cells), w) in columns.iter().zip(&widths) {
                let _ = write!(out, " | {:>w$}", cells[r]);
            }
            out.push('\n');
        }
        out
    }
}
