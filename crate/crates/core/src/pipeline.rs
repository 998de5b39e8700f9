//! End-to-end pipeline with file artifacts per stage.
//!
//! Each stage reads its predecessors' artifacts from the output directory and
//! writes its own, so any stage can be re-run alone. A `manifest.json` records
//! the config hash, the baseline seed and a checksum of every artifact.
//!
//! | stage       | reads                         | writes                          |
//! |-------------|-------------------------------|---------------------------------|
//! | `ingest`    | corpus                        | `ingest.jsonl`, `ingest_summary.json` |
//! | `filter`    | `ingest.jsonl`                | `filter.jsonl`                  |
//! | `score`     | `ingest.jsonl`, hypotheses    | `score_{simple,survey}.jsonl`   |
//! | `aggregate` | scores, `filter.jsonl`        | `aggregate_{corpus}_{hyp}.jsonl` |
//! | `baseline`  | `ingest.jsonl`, `filter.jsonl`| `baseline.json`                 |
//! | `panel`     | panel csv                     | `panel.json`                    |
//! | `evaluate`  | aggregates, panel, baseline, gold | `report.json`               |

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hypothesis::{self, HypothesisError, HypothesisSet};
use crate::ingest::{self, CleanTweet, CleaningRules, DropReason, IngestError, MatchMode, GENDER_ROLE_KEYWORDS};
use crate::metrics::{
    self, BaselineReport, Cell, ConditionReport, ConditionTags, CorpusTag, EvalReport, GoldSet, Grouping,
    HypothesisTag, MetricsError, OrAll, PartyScore, DEFAULT_REVERSE_CODED,
};
use crate::nli::http::HttpScorer;
use crate::nli::process::ProcessScorer;
use crate::nli::{EntailmentDistribution, Gateway, GatewayConfig, GatewayError, MockRules, MockScorer, Scorer};
use crate::stance::{self, StanceError, TweetStance};

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Hypothesis(#[from] HypothesisError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Stance(#[from] StanceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing artifact {path}: run the `{stage}` stage first")]
    MissingArtifact { stage: Stage, path: PathBuf },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageFailure,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Filter,
    Score,
    Aggregate,
    Baseline,
    Panel,
    Evaluate,
}

impl Stage {
    /// Execution order.
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Filter,
        Stage::Score,
        Stage::Aggregate,
        Stage::Baseline,
        Stage::Panel,
        Stage::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Filter => "filter",
            Stage::Score => "score",
            Stage::Aggregate => "aggregate",
            Stage::Baseline => "baseline",
            Stage::Panel => "panel",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Mock {
        rules: PathBuf,
    },
    Process {
        command: Vec<String>,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
    Http {
        url: String,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
        #[serde(default)]
        concurrent: bool,
    },
}

fn default_timeout_secs() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KeywordConfig {
    pub words: Vec<String>,
    pub mode: MatchMode,
}

impl Default for KeywordConfig {
    fn default() -> Self {
        Self {
            words: GENDER_ROLE_KEYWORDS.iter().map(|s| s.to_string()).collect(),
            mode: MatchMode::Substring,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    #[serde(default = "default_baseline_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_baseline_n() -> usize {
    100
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            n: default_baseline_n(),
            seed: None,
        }
    }
}

fn default_k_values() -> Vec<usize> {
    vec![10, 50, 100]
}

fn default_reverse_coded() -> BTreeSet<usize> {
    DEFAULT_REVERSE_CODED.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub panel: PathBuf,
    /// Defaults to the built-in single-statement set.
    #[serde(default)]
    pub simple_hypotheses: Option<PathBuf>,
    /// Defaults to the built-in eleven-item survey set.
    #[serde(default)]
    pub survey_hypotheses: Option<PathBuf>,
    #[serde(default)]
    pub gold: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub backend: BackendSpec,
    #[serde(default)]
    pub gateway: GatewayConfig,
    #[serde(default)]
    pub cleaning: CleaningRules,
    #[serde(default)]
    pub keywords: KeywordConfig,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default = "default_reverse_coded")]
    pub reverse_coded: BTreeSet<usize>,
    #[serde(default)]
    pub panel_grouping: Grouping,
}

impl PipelineConfig {
    /// Parses a TOML config; relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.resolve_paths(base_dir);
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn resolve_paths(&mut self, base_dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.panel);
        fix(&mut self.output_dir);
        for p in [&mut self.simple_hypotheses, &mut self.survey_hypotheses, &mut self.gold]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        if let BackendSpec::Mock { rules } = &mut self.backend {
            fix(rules);
        }
    }

    /// Checks inputs the given stages will read.
    pub fn validate(&self, stages: &BTreeSet<Stage>) -> Result<(), PipelineError> {
        let require = |label: &str, path: &Path| {
            if path.is_file() {
                Ok(())
            } else {
                Err(PipelineError::Config(format!(
                    "{label} {} does not exist",
                    path.display()
                )))
            }
        };
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(PipelineError::Config("k_values must be non-empty and positive".into()));
        }
        if stages.contains(&Stage::Ingest) {
            require("corpus", &self.corpus)?;
        }
        if stages.contains(&Stage::Filter) && self.keywords.words.iter().all(|w| w.trim().is_empty()) {
            return Err(PipelineError::Config("keyword list is empty".into()));
        }
        if stages.contains(&Stage::Score) {
            if let Some(p) = &self.simple_hypotheses {
                require("simple hypothesis set", p)?;
            }
            if let Some(p) = &self.survey_hypotheses {
                require("survey hypothesis set", p)?;
            }
            if let BackendSpec::Mock { rules } = &self.backend {
                require("mock rules", rules)?;
            }
        }
        if stages.contains(&Stage::Panel) {
            require("panel", &self.panel)?;
        }
        if stages.contains(&Stage::Baseline) && self.baseline.seed.is_none() {
            return Err(PipelineError::Config(
                "baseline.seed is required for the baseline stage".into(),
            ));
        }
        if stages.contains(&Stage::Evaluate) {
            match &self.gold {
                Some(g) => require("gold labels", g)?,
                None => return Err(PipelineError::Config("gold is required for the evaluate stage".into())),
            }
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }
}

pub fn build_scorer(spec: &BackendSpec) -> Result<Arc<dyn Scorer>, GatewayError> {
    Ok(match spec {
        BackendSpec::Mock { rules } => Arc::new(MockScorer::try_from(MockRules::load(rules)?)?),
        BackendSpec::Process { command, timeout_secs } => Arc::new(ProcessScorer::spawn(
            command.clone(),
            Duration::from_secs(*timeout_secs),
        )?),
        BackendSpec::Http {
            url,
            timeout_secs,
            concurrent,
        } => Arc::new(HttpScorer::new(url, Duration::from_secs(*timeout_secs), *concurrent)),
    })
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub input: usize,
    pub kept: usize,
    pub dropped: BTreeMap<DropReason, usize>,
}

/// One scored pair as stored by the `score` stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub tweet_id: String,
    pub hypothesis_id: String,
    #[serde(flatten)]
    pub distribution: EntailmentDistribution<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSample {
    pub corpus: CorpusTag,
    pub n: usize,
    pub seed: u64,
    pub tweet_ids: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: Option<u64>,
    pub artifacts: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";

fn score_artifact(hyp: HypothesisTag) -> String {
    format!("score_{}.jsonl", hyp.as_str())
}

fn aggregate_artifact(corpus: CorpusTag, hyp: HypothesisTag) -> String {
    format!("aggregate_{}_{}.jsonl", corpus.as_str(), hyp.as_str())
}

fn artifacts_of(stage: Stage) -> Vec<String> {
    match stage {
        Stage::Ingest => vec!["ingest.jsonl".into(), "ingest_summary.json".into()],
        Stage::Filter => vec!["filter.jsonl".into()],
        Stage::Score => HypothesisTag::BOTH.into_iter().map(score_artifact).collect(),
        Stage::Aggregate => CorpusTag::BOTH
            .into_iter()
            .flat_map(|c| HypothesisTag::BOTH.into_iter().map(move |h| aggregate_artifact(c, h)))
            .collect(),
        Stage::Baseline => vec!["baseline.json".into()],
        Stage::Panel => vec!["panel.json".into()],
        Stage::Evaluate => vec![REPORT.into()],
    }
}

fn upstream(stage: Stage) -> &'static [Stage] {
    match stage {
        Stage::Ingest | Stage::Panel => &[],
        Stage::Filter | Stage::Score => &[Stage::Ingest],
        Stage::Baseline => &[Stage::Ingest, Stage::Filter],
        Stage::Aggregate => &[Stage::Score, Stage::Filter],
        Stage::Evaluate => &[Stage::Aggregate, Stage::Panel],
    }
}

fn stage_of(name: &str) -> Stage {
    Stage::ALL
        .into_iter()
        .find(|s| artifacts_of(*s).iter().any(|a| a == name))
        .expect("artifact belongs to a stage")
}

/// Reads and writes stage artifacts under one output directory.
struct Workspace<'a> {
    dir: &'a Path,
    stage: Stage,
}

impl Workspace<'_> {
    fn fail(&self, source: impl Into<StageFailure>) -> PipelineError {
        PipelineError::Stage {
            stage: self.stage,
            source: source.into(),
        }
    }

    fn io(&self, path: &Path, source: std::io::Error) -> PipelineError {
        self.fail(StageFailure::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Locates an artifact; when absent, names the earliest stage that has not run.
    fn input(&self, name: &str) -> Result<PathBuf, PipelineError> {
        let path = self.dir.join(name);
        if path.is_file() {
            return Ok(path);
        }
        let mut missing = stage_of(name);
        loop {
            let next = upstream(missing)
                .iter()
                .copied()
                .find(|s| artifacts_of(*s).iter().any(|a| !self.dir.join(a).is_file()));
            match next {
                Some(s) => missing = s,
                None => break,
            }
        }
        Err(PipelineError::MissingArtifact { stage: missing, path })
    }

    fn read_jsonl<T: DeserializeOwned>(&self, name: &str) -> Result<Vec<T>, PipelineError> {
        let path = self.input(name)?;
        let file = File::open(&path).map_err(|e| self.io(&path, e))?;
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| self.io(&path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|source| {
                self.fail(StageFailure::Json {
                    path: path.clone(),
                    source,
                })
            })?);
        }
        Ok(out)
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, PipelineError> {
        let path = self.input(name)?;
        let file = File::open(&path).map_err(|e| self.io(&path, e))?;
        serde_json::from_reader(BufReader::new(file)).map_err(|source| self.fail(StageFailure::Json { path, source }))
    }

    fn write_with(
        &self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| self.io(&path, e))?;
        let mut out = BufWriter::new(file);
        body(&mut out).and_then(|_| out.flush()).map_err(|e| self.io(&path, e))
    }

    fn write_jsonl<T: Serialize>(&self, name: &str, items: &[T]) -> Result<(), PipelineError> {
        self.write_with(name, |out| {
            for item in items {
                serde_json::to_writer(&mut *out, item)?;
                out.write_all(b"\n")?;
            }
            Ok(())
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), PipelineError> {
        self.write_with(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            out.write_all(b"\n")
        })
    }
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

/// Runs the requested stages in pipeline order and updates the manifest.
pub fn run(config: &PipelineConfig, stages: &BTreeSet<Stage>) -> Result<Manifest, PipelineError> {
    config.validate(stages)?;
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| PipelineError::Config(format!("cannot create {}: {e}", config.output_dir.display())))?;
    for &stage in Stage::ALL.iter().filter(|s| stages.contains(s)) {
        let ws = Workspace {
            dir: &config.output_dir,
            stage,
        };
        match stage {
            Stage::Ingest => run_ingest(config, &ws)?,
            Stage::Filter => run_filter(config, &ws)?,
            Stage::Score => run_score(config, &ws)?,
            Stage::Aggregate => run_aggregate(config, &ws)?,
            Stage::Baseline => run_baseline(config, &ws)?,
            Stage::Panel => run_panel(config, &ws)?,
            Stage::Evaluate => run_evaluate(config, &ws)?,
        }
    }
    update_manifest(config)
}

pub fn run_all(config: &PipelineConfig) -> Result<Manifest, PipelineError> {
    run(config, &Stage::ALL.into_iter().collect())
}

fn run_ingest(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let raw = ingest::load_tweets(&config.corpus).map_err(|e| ws.fail(e))?;
    let report = ingest::clean_corpus(&raw, &config.cleaning);
    ws.write_jsonl("ingest.jsonl", &report.kept)?;
    ws.write_json(
        "ingest_summary.json",
        &IngestSummary {
            input: raw.len(),
            kept: report.kept.len(),
            dropped: report.dropped,
        },
    )
}

fn run_filter(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let tweets: Vec<CleanTweet> = ws.read_jsonl("ingest.jsonl")?;
    let kept =
        ingest::filter_by_keywords(&tweets, &config.keywords.words, config.keywords.mode).map_err(|e| ws.fail(e))?;
    ws.write_jsonl("filter.jsonl", &kept)
}

fn hypothesis_set(config: &PipelineConfig, tag: HypothesisTag) -> Result<HypothesisSet, HypothesisError> {
    match (tag, &config.simple_hypotheses, &config.survey_hypotheses) {
        (HypothesisTag::Simple, Some(p), _) | (HypothesisTag::Survey, _, Some(p)) => hypothesis::load_survey_set(p),
        (HypothesisTag::Simple, None, _) => Ok(HypothesisSet::simple_gender_roles()),
        (HypothesisTag::Survey, _, None) => Ok(HypothesisSet::liss_gender_roles()),
    }
}

fn run_score(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let tweets: Vec<CleanTweet> = ws.read_jsonl("ingest.jsonl")?;
    let gateway = Gateway::new(
        build_scorer(&config.backend).map_err(|e| ws.fail(e))?,
        config.gateway.clone(),
    );
    for tag in HypothesisTag::BOTH {
        let set = hypothesis_set(config, tag).map_err(|e| ws.fail(e))?;
        let pairs = stance::pairs_for(&tweets, &set);
        let dists = gateway.score_batch(&pairs).map_err(|e| ws.fail(e))?;
        let scored: Vec<ScoredPair> = pairs
            .into_iter()
            .zip(dists)
            .map(|(p, d)| ScoredPair {
                tweet_id: p.tweet_id,
                hypothesis_id: p.hypothesis_id,
                distribution: d,
            })
            .collect();
        ws.write_jsonl(&score_artifact(tag), &scored)?;
    }
    Ok(())
}

fn run_aggregate(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let all: Vec<CleanTweet> = ws.read_jsonl("ingest.jsonl")?;
    let filtered: Vec<CleanTweet> = ws.read_jsonl("filter.jsonl")?;
    for hyp in HypothesisTag::BOTH {
        let set = hypothesis_set(config, hyp).map_err(|e| ws.fail(e))?;
        let scored: Vec<ScoredPair> = ws.read_jsonl(&score_artifact(hyp))?;
        let lookup: HashMap<(&str, &str), EntailmentDistribution<f64>> = scored
            .iter()
            .map(|s| ((s.tweet_id.as_str(), s.hypothesis_id.as_str()), s.distribution))
            .collect();
        for (corpus, tweets) in [(CorpusTag::All, &all), (CorpusTag::Filtered, &filtered)] {
            let mut stances = Vec::with_capacity(tweets.len());
            for tweet in tweets {
                let dists = set
                    .hypotheses()
                    .iter()
                    .map(|h| {
                        lookup.get(&(tweet.id.as_str(), h.id.as_str())).copied().ok_or_else(|| {
                            ws.fail(StageFailure::Inconsistent(format!(
                                "no score for tweet {:?} and hypothesis {:?}; re-run `score`",
                                tweet.id, h.id
                            )))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                stances.push(stance::assess(tweet, &set, &dists).map_err(|e| ws.fail(e))?);
            }
            ws.write_jsonl(&aggregate_artifact(corpus, hyp), &stances)?;
        }
    }
    Ok(())
}

fn run_baseline(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let seed = config
        .baseline
        .seed
        .ok_or_else(|| PipelineError::Config("baseline.seed is required".into()))?;
    let mut samples = Vec::new();
    for (corpus, name) in [(CorpusTag::All, "ingest.jsonl"), (CorpusTag::Filtered, "filter.jsonl")] {
        let tweets: Vec<CleanTweet> = ws.read_jsonl(name)?;
        let sample = metrics::sample_baseline(&tweets, config.baseline.n, seed).map_err(|e| ws.fail(e))?;
        samples.push(BaselineSample {
            corpus,
            n: config.baseline.n,
            seed,
            tweet_ids: sample.into_iter().map(|t| t.id).collect(),
        });
    }
    ws.write_json("baseline.json", &samples)
}

fn run_panel(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let responses = ingest::load_panel(&config.panel).map_err(|e| ws.fail(e))?;
    let scores: Vec<PartyScore<f64>> =
        metrics::panel_scores(&responses, &config.reverse_coded, config.panel_grouping).map_err(|e| ws.fail(e))?;
    ws.write_json("panel.json", &metrics::rank_parties(&scores))
}

fn unavailable<R>(k: OrAll<usize>, err: impl std::fmt::Display) -> Cell<R> {
    Cell::Unavailable {
        k,
        reason: err.to_string(),
    }
}

/// Builds the evaluation report from already computed stances.
pub fn evaluate(
    stances: &BTreeMap<(CorpusTag, HypothesisTag), Vec<TweetStance<f64>>>,
    gold: &GoldSet,
    panel: &[PartyScore<f64>],
    baselines: &[BaselineSample],
    k_values: &[usize],
) -> EvalReport<f64> {
    let conditions = stances
        .iter()
        .map(|(&(corpus, hypotheses), stances)| {
            let tags = ConditionTags {
                survey: hypotheses == HypothesisTag::Survey,
                filtered: corpus == CorpusTag::Filtered,
            };
            let precision = k_values
                .iter()
                .map(|&k| {
                    let outcome = stance::rank_top_k(stances, k)
                        .map_err(MetricsError::from)
                        .and_then(|top| metrics::topk_precision(&top, gold, k));
                    match outcome {
                        Ok(r) => Cell::Ok(r.with_condition(tags)),
                        Err(e) => unavailable(OrAll::Value(k), e),
                    }
                })
                .collect();
            let correlation = k_values
                .iter()
                .map(|&k| OrAll::Value(k))
                .chain([OrAll::All])
                .map(|k| match metrics::party_level_eval(stances, panel, k) {
                    Ok(r) => Cell::Ok(r),
                    Err(e) => unavailable(k, e),
                })
                .collect();
            ConditionReport {
                corpus,
                hypotheses,
                tweets: stances.len(),
                precision,
                correlation,
            }
        })
        .collect();

    let baselines = baselines
        .iter()
        .map(|b| {
            let precision = metrics::precision_of_ids(b.tweet_ids.iter().map(String::as_str), gold)
                .map_or_else(|e| unavailable(OrAll::Value(b.n), e), Cell::Ok);
            BaselineReport {
                corpus: b.corpus,
                n: b.n,
                seed: b.seed,
                tweet_ids: b.tweet_ids.clone(),
                precision,
            }
        })
        .collect();

    EvalReport {
        k_values: k_values.to_vec(),
        conditions,
        baselines,
    }
}

fn run_evaluate(config: &PipelineConfig, ws: &Workspace) -> Result<(), PipelineError> {
    let mut stances = BTreeMap::new();
    for corpus in CorpusTag::BOTH {
        for hyp in HypothesisTag::BOTH {
            let s: Vec<TweetStance<f64>> = ws.read_jsonl(&aggregate_artifact(corpus, hyp))?;
            stances.insert((corpus, hyp), s);
        }
    }
    let panel: Vec<PartyScore<f64>> = ws.read_json("panel.json")?;
    let baselines: Vec<BaselineSample> = if ws.dir.join("baseline.json").is_file() {
        ws.read_json("baseline.json")?
    } else {
        Vec::new()
    };
    let gold_path = config
        .gold
        .as_ref()
        .ok_or_else(|| PipelineError::Config("gold is required for the evaluate stage".into()))?;
    let gold = metrics::load_gold(gold_path).map_err(|e| ws.fail(e))?;
    let report = evaluate(&stances, &gold, &panel, &baselines, &config.k_values);
    ws.write_json(REPORT, &report)
}

/// Loads `report.json` from an output directory.
pub fn load_report(output_dir: &Path) -> Result<EvalReport<f64>, PipelineError> {
    Workspace {
        dir: output_dir,
        stage: Stage::Evaluate,
    }
    .read_json(REPORT)
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn update_manifest(config: &PipelineConfig) -> Result<Manifest, PipelineError> {
    let ws = Workspace {
        dir: &config.output_dir,
        stage: Stage::Evaluate,
    };
    // the seed recorded is the one the baseline on disk was drawn with
    let seed = match config.output_dir.join("baseline.json").is_file() {
        true => ws
            .read_json::<Vec<BaselineSample>>("baseline.json")?
            .first()
            .map(|b| b.seed),
        false => config.baseline.seed,
    };
    let mut manifest = Manifest {
        config_hash: config.hash(),
        seed,
        artifacts: BTreeMap::new(),
    };
    for stage in Stage::ALL {
        for name in artifacts_of(stage) {
            let path = config.output_dir.join(&name);
            if path.is_file() {
                let sum = sha256_file(&path).map_err(|e| ws.io(&path, e))?;
                manifest.artifacts.insert(name, sum);
            }
        }
    }
    ws.write_json(MANIFEST, &manifest)?;
    Ok(manifest)
}
