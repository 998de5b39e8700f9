//! Two-annotator labelling with adjudication, persisted as an event log.
//!
//! Every change is an event appended to a line-delimited JSON file with a
//! monotonically increasing sequence number; the in-memory state is a fold
//! over those events. Relabels and re-adjudications overwrite the current
//! value but stay in the history.
//!
//! Gold labels follow the adjudication protocol: when both annotators chose
//! the same label it is gold (agreed); when they differ, the tweet waits in
//! the disagreement list until an adjudication supplies the final label. Any
//! new label on a tweet voids its adjudication, since the disagreement it
//! settled no longer exists in that form.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{GoldLabel, GoldOrigin, GoldSet};
use crate::stance::StanceLabel;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("task {0:?} already exists")]
    TaskExists(String),
    #[error("annotator {annotator:?} is not assigned to task {task:?}")]
    NotAssigned { task: String, annotator: String },
    #[error("tweet {tweet:?} is not part of task {task:?}")]
    UnknownTweet { task: String, tweet: String },
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
    #[error("tweet {0:?} has no disagreement to adjudicate")]
    NotInDisagreement(String),
    #[error("a task needs exactly two distinct annotators")]
    AnnotatorCount,
    #[error("a task needs at least one tweet")]
    EmptyTask,
    #[error("tweet {0:?} appears twice in the task")]
    DuplicateTweet(String),
    #[error("event log line {line}: {message}")]
    CorruptLog { line: usize, message: String },
    #[error("event log {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn parse_label(value: &str) -> Result<StanceLabel, AnnotationError> {
    value
        .parse()
        .map_err(|_| AnnotationError::InvalidLabel(value.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTweet {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: String,
    pub tweets: Vec<TaskTweet>,
    pub annotators: Vec<String>,
}

impl TaskSpec {
    fn validate(&self) -> Result<(), AnnotationError> {
        if self.annotators.len() != 2 || self.annotators[0] == self.annotators[1] {
            return Err(AnnotationError::AnnotatorCount);
        }
        if self.tweets.is_empty() {
            return Err(AnnotationError::EmptyTask);
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.tweets {
            if !seen.insert(t.id.as_str()) {
                return Err(AnnotationError::DuplicateTweet(t.id.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub seq: u64,
    pub tweet_id: String,
    pub annotator_id: String,
    pub label: StanceLabel,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjudicationRecord {
    pub seq: u64,
    pub tweet_id: String,
    pub final_label: StanceLabel,
    pub resolved_by: Vec<String>,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    TaskCreated {
        task: TaskSpec,
    },
    Label {
        task_id: String,
        annotator_id: String,
        tweet_id: String,
        label: StanceLabel,
    },
    Adjudication {
        task_id: String,
        tweet_id: String,
        final_label: StanceLabel,
        resolved_by: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TweetState {
    /// At least one annotator has not labelled it yet.
    Pending,
    Agreed,
    Disagreement,
    Adjudicated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetStatus {
    pub tweet_id: String,
    pub labels: BTreeMap<String, Option<StanceLabel>>,
    pub state: TweetState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_label: Option<StanceLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub tweet_id: String,
    pub text: String,
    pub labels: BTreeMap<String, StanceLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldReport {
    pub gold: GoldSet,
    /// Tweets still incomplete or in unresolved disagreement, in task order.
    pub pending: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub tweets: usize,
    pub labelled_by_annotator: Option<usize>,
    pub remaining_for_annotator: Option<usize>,
    pub disagreements: usize,
    pub gold: usize,
    pub pending: usize,
}

/// Folded state of one task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskState {
    spec: TaskSpec,
    current: BTreeMap<(String, String), AnnotationRecord>,
    label_history: Vec<AnnotationRecord>,
    adjudications: BTreeMap<String, AdjudicationRecord>,
    adjudication_history: Vec<AdjudicationRecord>,
}

impl TaskState {
    fn new(spec: TaskSpec) -> Self {
        Self {
            spec,
            current: BTreeMap::new(),
            label_history: Vec::new(),
            adjudications: BTreeMap::new(),
            adjudication_history: Vec::new(),
        }
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn label_history(&self) -> &[AnnotationRecord] {
        &self.label_history
    }

    pub fn adjudication_history(&self) -> &[AdjudicationRecord] {
        &self.adjudication_history
    }

    fn label(&self, tweet: &str, annotator: &str) -> Option<StanceLabel> {
        self.current
            .get(&(tweet.to_string(), annotator.to_string()))
            .map(|r| r.label)
    }

    fn both_labels(&self, tweet: &str) -> Option<(StanceLabel, StanceLabel)> {
        let [a, b] = [&self.spec.annotators[0], &self.spec.annotators[1]];
        Some((self.label(tweet, a)?, self.label(tweet, b)?))
    }

    pub fn status(&self, tweet: &str) -> TweetStatus {
        let labels = self
            .spec
            .annotators
            .iter()
            .map(|a| (a.clone(), self.label(tweet, a)))
            .collect();
        let (state, final_label) = match self.both_labels(tweet) {
            None => (TweetState::Pending, None),
            Some((a, b)) if a == b => (TweetState::Agreed, Some(a)),
            Some(_) => match self.adjudications.get(tweet) {
                Some(adj) => (TweetState::Adjudicated, Some(adj.final_label)),
                None => (TweetState::Disagreement, None),
            },
        };
        TweetStatus {
            tweet_id: tweet.to_string(),
            labels,
            state,
            final_label,
        }
    }

    fn has_tweet(&self, tweet: &str) -> bool {
        self.spec.tweets.iter().any(|t| t.id == tweet)
    }

    fn has_annotator(&self, annotator: &str) -> bool {
        self.spec.annotators.iter().any(|a| a == annotator)
    }

    pub fn disagreements(&self) -> Vec<Disagreement> {
        self.spec
            .tweets
            .iter()
            .filter(|t| self.status(&t.id).state == TweetState::Disagreement)
            .map(|t| Disagreement {
                tweet_id: t.id.clone(),
                text: t.text.clone(),
                labels: self
                    .spec
                    .annotators
                    .iter()
                    .filter_map(|a| self.label(&t.id, a).map(|l| (a.clone(), l)))
                    .collect(),
            })
            .collect()
    }

    pub fn gold_labels(&self) -> GoldReport {
        let mut gold = GoldSet::new();
        let mut pending = Vec::new();
        for t in &self.spec.tweets {
            let status = self.status(&t.id);
            let origin = match status.state {
                TweetState::Agreed => GoldOrigin::Agreed,
                TweetState::Adjudicated => GoldOrigin::Adjudicated,
                TweetState::Pending | TweetState::Disagreement => {
                    pending.push(t.id.clone());
                    continue;
                }
            };
            let label = status.final_label.expect("resolved tweets carry a final label");
            gold.insert(
                t.id.clone(),
                GoldLabel {
                    tweet_id: t.id.clone(),
                    label,
                    origin,
                },
            );
        }
        GoldReport { gold, pending }
    }

    pub fn next_for(&self, annotator: &str) -> Option<&TaskTweet> {
        self.spec.tweets.iter().find(|t| self.label(&t.id, annotator).is_none())
    }

    pub fn counts(&self, annotator: Option<&str>) -> TaskCounts {
        let gold = self.gold_labels();
        let labelled = annotator.map(|a| {
            self.spec
                .tweets
                .iter()
                .filter(|t| self.label(&t.id, a).is_some())
                .count()
        });
        TaskCounts {
            tweets: self.spec.tweets.len(),
            labelled_by_annotator: labelled,
            remaining_for_annotator: labelled.map(|l| self.spec.tweets.len() - l),
            disagreements: self.disagreements().len(),
            gold: gold.gold.len(),
            pending: gold.pending.len(),
        }
    }
}

/// Event-sourced annotation store.
#[derive(Debug)]
pub struct AnnotationStore {
    log: Option<(PathBuf, File)>,
    tasks: BTreeMap<String, TaskState>,
    next_seq: u64,
}

impl AnnotationStore {
    pub fn in_memory() -> Self {
        Self {
            log: None,
            tasks: BTreeMap::new(),
            next_seq: 1,
        }
    }

    /// Opens (or creates) a log file and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| AnnotationError::Io {
            path: path.clone(),
            source,
        };
        let mut store = Self::in_memory();
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io_err)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt = |message: String| AnnotationError::CorruptLog { line: idx + 1, message };
                let event: Event = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
                if event.seq < store.next_seq {
                    return Err(corrupt(format!(
                        "sequence number {} does not increase (expected at least {})",
                        event.seq, store.next_seq
                    )));
                }
                store.next_seq = event.seq + 1;
                store.apply(event).map_err(|e| corrupt(e.to_string()))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        store.log = Some((path, file));
        Ok(store)
    }

    pub fn task(&self, task_id: &str) -> Result<&TaskState, AnnotationError> {
        self.tasks
            .get(task_id)
            .ok_or_else(|| AnnotationError::UnknownTask(task_id.to_string()))
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &str> {
        self.tasks.keys().map(String::as_str)
    }

    fn apply(&mut self, event: Event) -> Result<(), AnnotationError> {
        match event.kind {
            EventKind::TaskCreated { task } => {
                task.validate()?;
                if self.tasks.contains_key(&task.task_id) {
                    return Err(AnnotationError::TaskExists(task.task_id));
                }
                self.tasks.insert(task.task_id.clone(), TaskState::new(task));
            }
            EventKind::Label {
                task_id,
                annotator_id,
                tweet_id,
                label,
            } => {
                let state = self.checked(&task_id, Some(&annotator_id), &tweet_id)?;
                let record = AnnotationRecord {
                    seq: event.seq,
                    tweet_id: tweet_id.clone(),
                    annotator_id: annotator_id.clone(),
                    label,
                    timestamp: event.timestamp,
                };
                state.label_history.push(record.clone());
                state.current.insert((tweet_id.clone(), annotator_id), record);
                state.adjudications.remove(&tweet_id);
            }
            EventKind::Adjudication {
                task_id,
                tweet_id,
                final_label,
                resolved_by,
            } => {
                let state = self.checked(&task_id, None, &tweet_id)?;
                match state.both_labels(&tweet_id) {
                    Some((a, b)) if a != b => {}
                    _ => return Err(AnnotationError::NotInDisagreement(tweet_id)),
                }
                let record = AdjudicationRecord {
                    seq: event.seq,
                    tweet_id: tweet_id.clone(),
                    final_label,
                    resolved_by,
                    timestamp: event.timestamp,
                };
                state.adjudication_history.push(record.clone());
                state.adjudications.insert(tweet_id, record);
            }
        }
        Ok(())
    }

    fn checked(
        &mut self,
        task_id: &str,
        annotator: Option<&str>,
        tweet: &str,
    ) -> Result<&mut TaskState, AnnotationError> {
        let state = self
            .tasks
            .get_mut(task_id)
            .ok_or_else(|| AnnotationError::UnknownTask(task_id.to_string()))?;
        if let Some(annotator) = annotator {
            if !state.has_annotator(annotator) {
                return Err(AnnotationError::NotAssigned {
                    task: task_id.to_string(),
                    annotator: annotator.to_string(),
                });
            }
        }
        if !state.has_tweet(tweet) {
            return Err(AnnotationError::UnknownTweet {
                task: task_id.to_string(),
                tweet: tweet.to_string(),
            });
        }
        Ok(state)
    }

    /// Validates against a scratch copy, appends to the log, then applies.
    fn record(&mut self, kind: EventKind) -> Result<Event, AnnotationError> {
        let event = Event {
            seq: self.next_seq,
            timestamp: Utc::now(),
            kind,
        };
        self.dry_run(&event)?;
        if let Some((path, file)) = &mut self.log {
            let mut line = serde_json::to_vec(&event).expect("event serializes");
            line.push(b'\n');
            file.write_all(&line)
                .and_then(|_| file.flush())
                .map_err(|source| AnnotationError::Io {
                    path: path.clone(),
                    source,
                })?;
        }
        self.next_seq += 1;
        self.apply(event.clone())?;
        Ok(event)
    }

    fn dry_run(&self, event: &Event) -> Result<(), AnnotationError> {
        let task_id = match &event.kind {
            EventKind::TaskCreated { task } => {
                task.validate()?;
                return match self.tasks.contains_key(&task.task_id) {
                    true => Err(AnnotationError::TaskExists(task.task_id.clone())),
                    false => Ok(()),
                };
            }
            EventKind::Label { task_id, .. } | EventKind::Adjudication { task_id, .. } => task_id,
        };
        let mut scratch = Self {
            log: None,
            tasks: BTreeMap::new(),
            next_seq: self.next_seq,
        };
        scratch.tasks.insert(task_id.clone(), self.task(task_id)?.clone());
        scratch.apply(event.clone())
    }

    pub fn create_task(&mut self, spec: TaskSpec) -> Result<(), AnnotationError> {
        self.record(EventKind::TaskCreated { task: spec }).map(|_| ())
    }

    /// Sets the annotator's current label for a tweet (last write wins).
    pub fn submit_label(
        &mut self,
        task_id: &str,
        annotator_id: &str,
        tweet_id: &str,
        label: StanceLabel,
    ) -> Result<TweetStatus, AnnotationError> {
        self.record(EventKind::Label {
            task_id: task_id.to_string(),
            annotator_id: annotator_id.to_string(),
            tweet_id: tweet_id.to_string(),
            label,
        })?;
        Ok(self.task(task_id)?.status(tweet_id))
    }

    /// Tweets both annotators labelled differently and that await adjudication.
    pub fn disagreements(&self, task_id: &str) -> Result<Vec<Disagreement>, AnnotationError> {
        Ok(self.task(task_id)?.disagreements())
    }

    /// Records the jointly agreed final label for a disagreeing tweet.
    /// Adjudicating again replaces the previous decision.
    pub fn adjudicate(
        &mut self,
        task_id: &str,
        tweet_id: &str,
        final_label: StanceLabel,
    ) -> Result<AdjudicationRecord, AnnotationError> {
        let resolved_by = self.task(task_id)?.spec.annotators.clone();
        let event = self.record(EventKind::Adjudication {
            task_id: task_id.to_string(),
            tweet_id: tweet_id.to_string(),
            final_label,
            resolved_by: resolved_by.clone(),
        })?;
        Ok(AdjudicationRecord {
            seq: event.seq,
            tweet_id: tweet_id.to_string(),
            final_label,
            resolved_by,
            timestamp: event.timestamp,
        })
    }

    pub fn gold_labels(&self, task_id: &str) -> Result<GoldReport, AnnotationError> {
        Ok(self.task(task_id)?.gold_labels())
    }

    pub fn next_for(&self, task_id: &str, annotator_id: &str) -> Result<Option<TaskTweet>, AnnotationError> {
        let task = self.task(task_id)?;
        if !task.has_annotator(annotator_id) {
            return Err(AnnotationError::NotAssigned {
                task: task_id.to_string(),
                annotator: annotator_id.to_string(),
            });
        }
        Ok(task.next_for(annotator_id).cloned())
    }

    pub fn counts(&self, task_id: &str, annotator_id: Option<&str>) -> Result<TaskCounts, AnnotationError> {
        let task = self.task(task_id)?;
        if let Some(a) = annotator_id {
            if !task.has_annotator(a) {
                return Err(AnnotationError::NotAssigned {
                    task: task_id.to_string(),
                    annotator: a.to_string(),
                });
            }
        }
        Ok(task.counts(annotator_id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StanceLabel::*;

    fn spec() -> TaskSpec {
        TaskSpec {
            task_id: "t1".into(),
            tweets: ["x", "y", "z"]
                .iter()
                .map(|id| TaskTweet {
                    id: id.to_string(),
                    text: format!("tekst {id}"),
                })
                .collect(),
            annotators: vec!["A".into(), "B".into()],
        }
    }

    fn store() -> AnnotationStore {
        let mut s = AnnotationStore::in_memory();
        s.create_task(spec()).unwrap();
        s
    }

    #[test]
    fn first_label_leaves_tweet_pending() {
        let mut s = store();
        let status = s.submit_label("t1", "A", "x", Favor).unwrap();
        assert_eq!(status.state, TweetState::Pending);
        assert_eq!(status.labels["B"], None);
        assert_eq!(s.next_for("t1", "B").unwrap().unwrap().id, "x");
        assert_eq!(s.next_for("t1", "A").unwrap().unwrap().id, "y");
    }

    #[test]
    fn relabel_replaces_and_keeps_history() {
        let mut s = store();
        s.submit_label("t1", "A", "x", Favor).unwrap();
        let status = s.submit_label("t1", "A", "x", Against).unwrap();
        assert_eq!(status.labels["A"], Some(Against));
        let history: Vec<_> = s
            .task("t1")
            .unwrap()
            .label_history()
            .iter()
            .filter(|r| r.tweet_id == "x")
            .collect();
        assert_eq!(history.len(), 2);
    }

    #[test]
    fn outsider_rejected() {
        let mut s = store();
        assert!(matches!(
            s.submit_label("t1", "C", "x", Favor),
            Err(AnnotationError::NotAssigned { .. })
        ));
        assert!(matches!(
            s.submit_label("t1", "A", "nope", Favor),
            Err(AnnotationError::UnknownTweet { .. })
        ));
        assert!(matches!(
            s.submit_label("t9", "A", "x", Favor),
            Err(AnnotationError::UnknownTask(_))
        ));
        assert!(matches!(parse_label("maybe"), Err(AnnotationError::InvalidLabel(_))));
    }

    #[test]
    fn disagreement_listing() {
        let mut s = store();
        s.submit_label("t1", "A", "x", Favor).unwrap();
        s.submit_label("t1", "B", "x", Favor).unwrap();
        s.submit_label("t1", "A", "y", Favor).unwrap();
        s.submit_label("t1", "B", "y", Neutral).unwrap();
        s.submit_label("t1", "A", "z", Favor).unwrap();
        let d = s.disagreements("t1").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].tweet_id, "y");
        assert_eq!(d[0].labels["A"], Favor);
        assert_eq!(d[0].labels["B"], Neutral);
    }

    #[test]
    fn adjudication_rules() {
        let mut s = store();
        s.submit_label("t1", "A", "x", Favor).unwrap();
        s.submit_label("t1", "B", "x", Favor).unwrap();
        assert!(matches!(
            s.adjudicate("t1", "x", Neutral),
            Err(AnnotationError::NotInDisagreement(_))
        ));

        s.submit_label("t1", "A", "y", Favor).unwrap();
        s.submit_label("t1", "B", "y", Neutral).unwrap();
        s.adjudicate("t1", "y", Neutral).unwrap();
        assert!(s.disagreements("t1").unwrap().is_empty());
        let gold = s.gold_labels("t1").unwrap();
        assert_eq!(gold.gold["y"].label, Neutral);
        assert_eq!(gold.gold["y"].origin, GoldOrigin::Adjudicated);

        s.adjudicate("t1", "y", Against).unwrap();
        assert_eq!(s.gold_labels("t1").unwrap().gold["y"].label, Against);
        assert_eq!(s.task("t1").unwrap().adjudication_history().len(), 2);
    }

    #[test]
    fn relabel_voids_adjudication() {
        let mut s = store();
        s.submit_label("t1", "A", "y", Favor).unwrap();
        s.submit_label("t1", "B", "y", Neutral).unwrap();
        s.adjudicate("t1", "y", Neutral).unwrap();
        s.submit_label("t1", "A", "y", Against).unwrap();
        assert_eq!(s.disagreements("t1").unwrap().len(), 1);
        assert!(s.gold_labels("t1").unwrap().pending.contains(&"y".to_string()));
    }

    #[test]
    fn mixed_gold_with_origins() {
        let mut s = store();
        // x agreed favor, y adjudicated against, z incomplete
        s.submit_label("t1", "A", "x", Favor).unwrap();
        s.submit_label("t1", "B", "x", Favor).unwrap();
        s.submit_label("t1", "A", "y", Favor).unwrap();
        s.submit_label("t1", "B", "y", Against).unwrap();
        s.adjudicate("t1", "y", Against).unwrap();
        s.submit_label("t1", "A", "z", Neutral).unwrap();
        let report = s.gold_labels("t1").unwrap();
        assert_eq!(report.gold.len(), 2);
        assert_eq!(report.gold["x"].label, Favor);
        assert_eq!(report.gold["x"].origin, GoldOrigin::Agreed);
        assert_eq!(report.gold["y"].label, Against);
        assert_eq!(report.gold["y"].origin, GoldOrigin::Adjudicated);
        assert_eq!(report.pending, ["z"]);
    }

    #[test]
    fn task_validation() {
        let mut s = store();
        assert!(matches!(s.create_task(spec()), Err(AnnotationError::TaskExists(_))));
        let mut three = spec();
        three.task_id = "t2".into();
        three.annotators.push("C".into());
        assert!(matches!(s.create_task(three), Err(AnnotationError::AnnotatorCount)));
    }

    #[test]
    fn reopen_replays_log() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut s = AnnotationStore::open(&path).unwrap();
        s.create_task(spec()).unwrap();
        s.submit_label("t1", "A", "y", Favor).unwrap();
        s.submit_label("t1", "B", "y", Neutral).unwrap();
        s.adjudicate("t1", "y", Neutral).unwrap();
        assert!(s.submit_label("t1", "C", "y", Favor).is_err());
        let before = s.task("t1").unwrap().clone();
        drop(s);
        let reopened = AnnotationStore::open(&path).unwrap();
        assert_eq!(reopened.task("t1").unwrap(), &before);
        let text = std::fs::read_to_string(&path).unwrap();
        let seqs: Vec<u64> = text
            .lines()
            .map(|l| serde_json::from_str::<Event>(l).unwrap().seq)
            .collect();
        assert_eq!(seqs, [1, 2, 3, 4]);
    }
}
