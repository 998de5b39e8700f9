use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stance_nli::annostore::{AnnotationStore, TaskSpec};
use stance_nli::pipeline::{self, IngestSummary, PipelineConfig, Stage};
use stance_nli::PartyScoreF64;
use toml::{Table, Value};

#[derive(Debug, Parser)]
#[command(name = "stance", version, about = "Zero-shot stance detection over tweets via NLI")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Pipeline settings. `--config` loads a TOML file; the other flags override it.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub simple_hypotheses: Option<PathBuf>,
    #[arg(long)]
    pub survey_hypotheses: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Use the rule-based mock scorer with this rules file.
    #[arg(long, conflicts_with_all = ["backend_cmd", "backend_url"])]
    pub mock_rules: Option<PathBuf>,
    /// Spawn a line-protocol backend, e.g. "python3 serve.py --model x".
    #[arg(long, conflicts_with = "backend_url")]
    pub backend_cmd: Option<String>,
    /// Base URL of an HTTP backend exposing POST /score.
    #[arg(long)]
    pub backend_url: Option<String>,
    #[arg(long)]
    pub backend_timeout_secs: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub keywords: Option<Vec<String>>,
    /// substring or whole-word
    #[arg(long)]
    pub keyword_mode: Option<String>,
    #[arg(long)]
    pub year_min: Option<i32>,
    #[arg(long)]
    pub year_max: Option<i32>,
    #[arg(long)]
    pub min_tokens: Option<usize>,
    #[arg(long = "k", value_delimiter = ',')]
    pub k_values: Option<Vec<usize>>,
    #[arg(long)]
    pub baseline_n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub reverse_coded: Option<Vec<usize>>,
    /// by-party or by-party-year
    #[arg(long)]
    pub panel_grouping: Option<String>,
}

fn path_value(p: &Path) -> Result<Value> {
    let abs = std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))?;
    Ok(Value::String(abs.to_string_lossy().into_owned()))
}

fn int(v: impl TryInto<i64>) -> Result<Value> {
    Ok(Value::Integer(
        v.try_into().map_err(|_| anyhow::anyhow!("value out of range"))?,
    ))
}

fn section<'a>(table: &'a mut Table, key: &str) -> Result<&'a mut Table> {
    table
        .entry(key)
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .with_context(|| format!("`{key}` must be a table"))
}

impl ConfigArgs {
    fn overrides(&self, seed: Option<u64>, table: &mut Table) -> Result<()> {
        for (key, path) in [
            ("corpus", &self.corpus),
            ("panel", &self.panel),
            ("simple_hypotheses", &self.simple_hypotheses),
            ("survey_hypotheses", &self.survey_hypotheses),
            ("gold", &self.gold),
            ("output_dir", &self.output_dir),
        ] {
            if let Some(p) = path {
                table.insert(key.into(), path_value(p)?);
            }
        }

        let mut backend = Table::new();
        if let Some(rules) = &self.mock_rules {
            backend.insert("kind".into(), "mock".into());
            backend.insert("rules".into(), path_value(rules)?);
        } else if let Some(cmd) = &self.backend_cmd {
            let argv: Vec<Value> = cmd.split_whitespace().map(Value::from).collect();
            if argv.is_empty() {
                bail!("--backend-cmd is empty");
            }
            backend.insert("kind".into(), "process".into());
            backend.insert("command".into(), Value::Array(argv));
        } else if let Some(url) = &self.backend_url {
            backend.insert("kind".into(), "http".into());
            backend.insert("url".into(), url.as_str().into());
        }
        if !backend.is_empty() {
            table.insert("backend".into(), Value::Table(backend));
        }
        if let Some(t) = self.backend_timeout_secs {
            let b = section(table, "backend")?;
            if b.get("kind").and_then(Value::as_str) == Some("mock") {
                bail!("--backend-timeout-secs does not apply to the mock backend");
            }
            b.insert("timeout_secs".into(), int(t)?);
        }
        if let Some(n) = self.batch_size {
            section(table, "gateway")?.insert("batch_size".into(), int(n)?);
        }

        if let Some(words) = &self.keywords {
            section(table, "keywords")?.insert(
                "words".into(),
                Value::Array(words.iter().map(|w| w.as_str().into()).collect()),
            );
        }
        if let Some(mode) = &self.keyword_mode {
            section(table, "keywords")?.insert("mode".into(), mode.as_str().into());
        }
        for (key, v) in [
            ("year_min", self.year_min.map(i64::from)),
            ("year_max", self.year_max.map(i64::from)),
        ] {
            if let Some(v) = v {
                section(table, "cleaning")?.insert(key.into(), Value::Integer(v));
            }
        }
        if let Some(n) = self.min_tokens {
            section(table, "cleaning")?.insert("min_tokens".into(), int(n)?);
        }
        if let Some(ks) = &self.k_values {
            table.insert(
                "k_values".into(),
                Value::Array(ks.iter().map(|&k| int(k)).collect::<Result<_>>()?),
            );
        }
        if let Some(n) = self.baseline_n {
            section(table, "baseline")?.insert("n".into(), int(n)?);
        }
        if let Some(seed) = seed {
            section(table, "baseline")?.insert("seed".into(), int(seed)?);
        }
        if let Some(items) = &self.reverse_coded {
            table.insert(
                "reverse_coded".into(),
                Value::Array(items.iter().map(|&i| int(i)).collect::<Result<_>>()?),
            );
        }
        if let Some(g) = &self.panel_grouping {
            table.insert("panel_grouping".into(), g.as_str().into());
        }
        Ok(())
    }

    /// Loads the config file (if any) and applies flag overrides.
    pub fn resolve(&self, seed: Option<u64>) -> Result<PipelineConfig> {
        let (mut table, base) = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let table: Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
                (table, path.parent().unwrap_or(Path::new(".")).to_path_buf())
            }
            None => (Table::new(), std::env::current_dir()?),
        };
        self.overrides(seed, &mut table)?;
        let text = toml::to_string(&table)?;
        Ok(PipelineConfig::from_toml(&text, &base)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean the raw corpus and drop short or out-of-range tweets.
    Ingest(ConfigArgs),
    /// Keep tweets that mention a keyword.
    Filter(ConfigArgs),
    /// Score every tweet against both hypothesis sets.
    Score(ConfigArgs),
    /// Map scores to stance distributions per corpus and hypothesis set.
    Aggregate(ConfigArgs),
    /// Compute precision and correlation and write report.json.
    Evaluate(ConfigArgs),
    /// Draw the seeded random baseline samples.
    Baseline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        seed: u64,
    },
    /// Score parties from panel responses and print the ranking.
    PanelRank(ConfigArgs),
    /// Print the evaluation table and write report.txt.
    Report(ConfigArgs),
    /// Run several stages in order (all by default).
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',')]
        stages: Option<Vec<Stage>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve the annotation API (and optionally the UI assets).
    ServeAnnotation {
        /// Event log file; created if missing.
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Create an annotation task from a JSON task spec.
    CreateTask {
        #[arg(long)]
        store: PathBuf,
        spec: PathBuf,
    },
    /// Write a task's gold labels as JSONL.
    ExportGold {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn run_stages(config: &PipelineConfig, stages: &[Stage]) -> Result<()> {
    let set: BTreeSet<Stage> = stages.iter().copied().collect();
    let manifest = pipeline::run(config, &set)?;
    let names: Vec<&str> = Stage::ALL
        .iter()
        .filter(|s| set.contains(s))
        .map(|s| s.as_str())
        .collect();
    eprintln!(
        "{} done; {} artifacts in {}",
        names.join(", "),
        manifest.artifacts.len(),
        config.output_dir.display()
    );
    Ok(())
}

fn print_report(config: &PipelineConfig) -> Result<()> {
    let table = pipeline::load_report(&config.output_dir)?.render_table();
    fs::write(config.output_dir.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => {
            let config = args.resolve(None)?;
            run_stages(&config, &[Stage::Ingest])?;
            let s: IngestSummary = read_json(&config.output_dir.join("ingest_summary.json"))?;
            let dropped: Vec<String> = s
                .dropped
                .iter()
                .map(|(r, n)| {
                    format!(
                        "{} {n}",
                        serde_json::to_value(r).unwrap_or_default().as_str().unwrap_or("?")
                    )
                })
                .collect();
            println!("kept {} of {} tweets ({})", s.kept, s.input, dropped.join(", "));
        }
        Command::Filter(args) => run_stages(&args.resolve(None)?, &[Stage::Filter])?,
        Command::Score(args) => run_stages(&args.resolve(None)?, &[Stage::Score])?,
        Command::Aggregate(args) => run_stages(&args.resolve(None)?, &[Stage::Aggregate])?,
        Command::Evaluate(args) => {
            let config = args.resolve(None)?;
            run_stages(&config, &[Stage::Evaluate])?;
            print_report(&config)?;
        }
        Command::Baseline { config, seed } => run_stages(&config.resolve(Some(seed))?, &[Stage::Baseline])?,
        Command::PanelRank(args) => {
            let config = args.resolve(None)?;
            run_stages(&config, &[Stage::Panel])?;
            let ranked: Vec<PartyScoreF64> = read_json(&config.output_dir.join("panel.json"))?;
            println!("{:<12} {:>5} {:>6} {:>5}", "party", "year", "score", "n");
            for s in ranked {
                println!(
                    "{:<12} {:>5} {:>6.2} {:>5}",
                    s.party,
                    s.year.to_string(),
                    s.score,
                    s.respondents
                );
            }
        }
        Command::Report(args) => print_report(&args.resolve(None)?)?,
        Command::Run { config, stages, seed } => {
            let config = config.resolve(seed)?;
            let stages = stages.unwrap_or_else(|| Stage::ALL.to_vec());
            run_stages(&config, &stages)?;
            if stages.contains(&Stage::Evaluate) {
                print_report(&config)?;
            }
        }
        Command::ServeAnnotation { store, addr, assets } => {
            let store = AnnotationStore::open(&store)?;
            tokio::runtime::Runtime::new()?.block_on(crate::server::serve(store, &addr, assets))?;
        }
        Command::CreateTask { store, spec } => {
            let spec: TaskSpec = read_json(&spec)?;
            let (id, n) = (spec.task_id.clone(), spec.tweets.len());
            AnnotationStore::open(&store)?.create_task(spec)?;
            println!("created task {id} with {n} tweets");
        }
        Command::ExportGold { store, task, out } => {
            let report = AnnotationStore::open(&store)?.gold_labels(&task)?;
            let mut buf = Vec::new();
            for label in report.gold.values() {
                serde_json::to_writer(&mut buf, label)?;
                buf.push(b'\n');
            }
            match out {
                Some(path) => fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(&buf)?,
            }
            eprintln!("{} gold labels, {} pending", report.gold.len(), report.pending.len());
        }
    }
    Ok(())
}
