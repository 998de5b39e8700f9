//! Hypothesis sets: statements of a stance towards a target.
//!
//! A set is either one simple statement ("I am in favour of <target>") or a
//! bank of survey items. Every hypothesis carries a polarity saying whether
//! entailing it means favouring or opposing the target.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Template prefix for simple hypotheses ("I am in favour of ...").
pub const SIMPLE_PREFIX: &str = "Ik ben voorstander van";

/// Eleven panel items on traditional gender roles, with polarity.
pub const LISS_GENDER_ROLES: &str = include_str!("../fixtures/liss_gender_roles_11.jsonl");
/// The single-statement counterpart of [`LISS_GENDER_ROLES`].
pub const SIMPLE_GENDER_ROLES: &str = include_str!("../fixtures/simple_gender_roles.jsonl");

#[derive(Debug, Error)]
pub enum HypothesisError {
    #[error("target statement is empty")]
    EmptyStatement,
    #[error("hypothesis set is empty")]
    EmptySet,
    #[error("duplicate hypothesis id {0:?}")]
    DuplicateId(String),
    #[error("hypothesis {0:?} has empty text")]
    EmptyText(String),
    #[error("hypothesis {id:?} targets {found:?}, set targets {expected:?}")]
    MixedTargets {
        id: String,
        expected: String,
        found: String,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Entailment indicates favouring the target.
    ProTarget,
    /// Entailment indicates opposing the target.
    AntiTarget,
}

impl Polarity {
    pub fn flipped(self) -> Self {
        match self {
            Polarity::ProTarget => Polarity::AntiTarget,
            Polarity::AntiTarget => Polarity::ProTarget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Simple,
    SurveyItem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub id: String,
    pub text: String,
    pub polarity: Polarity,
    pub source: Source,
    pub target_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSet {
    target_id: String,
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisSet {
    /// Validates and wraps a list of hypotheses.
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self, HypothesisError> {
        let first = hypotheses.first().ok_or(HypothesisError::EmptySet)?;
        let target_id = first.target_id.clone();
        let mut ids = HashSet::new();
        for h in &hypotheses {
            if !ids.insert(h.id.as_str()) {
                return Err(HypothesisError::DuplicateId(h.id.clone()));
            }
            if h.text.trim().is_empty() {
                return Err(HypothesisError::EmptyText(h.id.clone()));
            }
            if h.target_id != target_id {
                return Err(HypothesisError::MixedTargets {
                    id: h.id.clone(),
                    expected: target_id,
                    found: h.target_id.clone(),
                });
            }
        }
        Ok(Self { target_id, hypotheses })
    }

    pub fn target_id(&self) -> &str {
        &self.target_id
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.id == id)
    }

    /// Same statements with every polarity reversed.
    pub fn with_flipped_polarities(&self) -> Self {
        let hypotheses = self
            .hypotheses
            .iter()
            .map(|h| Hypothesis {
                polarity: h.polarity.flipped(),
                ..h.clone()
            })
            .collect();
        Self {
            target_id: self.target_id.clone(),
            hypotheses,
        }
    }

    /// The shipped eleven-item gender-role bank.
    pub fn liss_gender_roles() -> Self {
        parse_set(LISS_GENDER_ROLES.as_bytes()).expect("shipped survey fixture is valid")
    }

    /// The shipped simple gender-role hypothesis.
    pub fn simple_gender_roles() -> Self {
        parse_set(SIMPLE_GENDER_ROLES.as_bytes()).expect("shipped simple fixture is valid")
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for h in &self.hypotheses {
            serde_json::to_writer(&mut out, h)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HypothesisError> {
        let path = path.as_ref();
        let io_err = |source| HypothesisError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io_err)?;
        self.write_jsonl(std::io::BufWriter::new(file)).map_err(io_err)
    }
}

fn slug(text: &str) -> String {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// One-statement set "Ik ben voorstander van <statement>." for `target_id`.
pub fn build_simple_for(target_id: &str, target_statement: &str) -> Result<HypothesisSet, HypothesisError> {
    let statement = target_statement.trim().trim_end_matches('.').trim();
    if statement.is_empty() {
        return Err(HypothesisError::EmptyStatement);
    }
    HypothesisSet::new(vec![Hypothesis {
        id: "simple".to_string(),
        text: format!("{SIMPLE_PREFIX} {statement}."),
        polarity: Polarity::ProTarget,
        source: Source::Simple,
        target_id: target_id.to_string(),
    }])
}

/// Like [`build_simple_for`], with the target id derived from the statement.
pub fn build_simple(target_statement: &str) -> Result<HypothesisSet, HypothesisError> {
    build_simple_for(&slug(target_statement), target_statement)
}

/// Parses a line-delimited hypothesis file. Blank lines are skipped.
pub fn parse_set<R: BufRead>(reader: R) -> Result<HypothesisSet, HypothesisError> {
    let mut hypotheses = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| HypothesisError::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let h: Hypothesis = serde_json::from_str(&line).map_err(|e| HypothesisError::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        hypotheses.push(h);
    }
    HypothesisSet::new(hypotheses)
}

pub fn load_survey_set(path: impl AsRef<Path>) -> Result<HypothesisSet, HypothesisError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| HypothesisError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_set(BufReader::new(file))
}
