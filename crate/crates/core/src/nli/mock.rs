//! Deterministic rule-based scorer for tests and demos.

use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{EntailmentDistribution, GatewayError, Scorer, WireRequest, WireResponse};

/// One rule: when every given pattern matches, reply with the distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    /// Regex searched in the premise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<String>,
    /// Regex searched in the hypothesis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl MockRule {
    pub fn premise(pattern: &str, entailment: f64, neutral: f64, contradiction: f64) -> Self {
        Self {
            premise: Some(pattern.to_string()),
            hypothesis: None,
            entailment,
            neutral,
            contradiction,
        }
    }
}

/// Rule file contents: ordered rules plus a fallback distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRules {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    pub default: EntailmentDistribution<f64>,
}

impl MockRules {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Unreachable(format!("mock rules {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GatewayError::Protocol(format!("mock rules {}: {e}", path.display())))
    }
}

struct CompiledRule {
    premise: Option<Regex>,
    hypothesis: Option<Regex>,
    dist: EntailmentDistribution<f64>,
}

impl CompiledRule {
    fn matches(&self, req: &WireRequest) -> bool {
        self.premise.as_ref().is_none_or(|re| re.is_match(&req.premise))
            && self.hypothesis.as_ref().is_none_or(|re| re.is_match(&req.hypothesis))
    }
}

/// First matching rule wins; the default answers everything else.
pub struct MockScorer {
    rules: Vec<CompiledRule>,
    default: EntailmentDistribution<f64>,
}

impl MockScorer {
    pub fn lookup(&self, premise: &str, hypothesis: &str) -> EntailmentDistribution<f64> {
        let req = WireRequest {
            id: String::new(),
            premise: premise.to_string(),
            hypothesis: hypothesis.to_string(),
        };
        self.rules
            .iter()
            .find(|r| r.matches(&req))
            .map_or(self.default, |r| r.dist)
    }
}

fn compile(index: usize, pattern: &Option<String>) -> Result<Option<Regex>, GatewayError> {
    pattern
        .as_deref()
        .map(Regex::new)
        .transpose()
        .map_err(|e| GatewayError::InvalidRule {
            index,
            reason: e.to_string(),
        })
}

pub fn make_mock_scorer(
    rules: Vec<MockRule>,
    default: EntailmentDistribution<f64>,
) -> Result<MockScorer, GatewayError> {
    let default =
        EntailmentDistribution::new(default.entailment, default.neutral, default.contradiction).map_err(|e| {
            GatewayError::InvalidRule {
                index: rules.len(),
                reason: format!("default: {e}"),
            }
        })?;
    let compiled = rules
        .iter()
        .enumerate()
        .map(|(index, rule)| {
            let dist = EntailmentDistribution::new(rule.entailment, rule.neutral, rule.contradiction).map_err(|e| {
                GatewayError::InvalidRule {
                    index,
                    reason: e.to_string(),
                }
            })?;
            Ok(CompiledRule {
                premise: compile(index, &rule.premise)?,
                hypothesis: compile(index, &rule.hypothesis)?,
                dist,
            })
        })
        .collect::<Result<Vec<_>, GatewayError>>()?;
    Ok(MockScorer {
        rules: compiled,
        default,
    })
}

impl TryFrom<MockRules> for MockScorer {
    type Error = GatewayError;

    fn try_from(rules: MockRules) -> Result<Self, Self::Error> {
        make_mock_scorer(rules.rules, rules.default)
    }
}

impl Scorer for MockScorer {
    fn concurrent(&self) -> bool {
        true
    }

    fn score(&self, requests: &[WireRequest]) -> Result<Vec<WireResponse>, GatewayError> {
        Ok(requests
            .iter()
            .map(|req| {
                let d = self.lookup(&req.premise, &req.hypothesis);
                WireResponse::scores(req.id.clone(), d.entailment, d.neutral, d.contradiction)
            })
            .collect())
    }
}
