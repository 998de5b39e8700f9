use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EntailmentDistribution, GatewayError, PremiseHypothesisPair, Scorer, WireRequest, WireResponse};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub batch_size: usize,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
    /// Batches in flight at once when the backend allows concurrency.
    pub max_in_flight: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            retries: 2,
            backoff_ms: 100,
            max_in_flight: 4,
        }
    }
}

type BatchResult<T> = Result<Vec<EntailmentDistribution<T>>, GatewayError>;

/// Batches, retries and validates calls into a [`Scorer`].
pub struct Gateway {
    scorer: Arc<dyn Scorer>,
    config: GatewayConfig,
    serial: Mutex<()>,
}

impl Gateway {
    pub fn new(scorer: Arc<dyn Scorer>, config: GatewayConfig) -> Self {
        Self {
            scorer,
            config,
            serial: Mutex::new(()),
        }
    }

    pub fn with_defaults(scorer: Arc<dyn Scorer>) -> Self {
        Self::new(scorer, GatewayConfig::default())
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// Scores every pair; `output[i]` belongs to `pairs[i]`.
    pub fn score_batch(
        &self,
        pairs: &[PremiseHypothesisPair],
    ) -> Result<Vec<EntailmentDistribution<f64>>, GatewayError> {
        self.score_batch_as(pairs)
    }

    pub fn score_batch_as<T: Scalar>(
        &self,
        pairs: &[PremiseHypothesisPair],
    ) -> Result<Vec<EntailmentDistribution<T>>, GatewayError> {
        for pair in pairs {
            pair.validate()?;
        }
        let requests: Vec<WireRequest> = pairs
            .iter()
            .enumerate()
            .map(|(i, p)| WireRequest {
                id: i.to_string(),
                premise: p.premise.clone(),
                hypothesis: p.hypothesis.clone(),
            })
            .collect();
        let batches: Vec<&[WireRequest]> = requests.chunks(self.config.batch_size.max(1)).collect();

        let workers = if self.scorer.concurrent() {
            self.config.max_in_flight.clamp(1, batches.len().max(1))
        } else {
            1
        };
        let results = if workers == 1 {
            batches.iter().map(|b| self.run_batch(b)).collect::<Vec<_>>()
        } else {
            self.run_concurrent(&batches, workers)
        };

        let mut out = Vec::with_capacity(pairs.len());
        for batch in results {
            out.extend(batch?);
        }
        Ok(out)
    }

    fn run_concurrent<T: Scalar>(&self, batches: &[&[WireRequest]], workers: usize) -> Vec<BatchResult<T>> {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<BatchResult<T>>>> = Mutex::new((0..batches.len()).map(|_| None).collect());
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(idx) else { break };
                    let result = self.run_batch(batch);
                    slots.lock().expect("result slots poisoned")[idx] = Some(result);
                });
            }
        });
        slots
            .into_inner()
            .expect("result slots poisoned")
            .into_iter()
            .map(|slot| slot.expect("every batch index is visited"))
            .collect()
    }

    fn run_batch<T: Scalar>(&self, batch: &[WireRequest]) -> Result<Vec<EntailmentDistribution<T>>, GatewayError> {
        let mut attempt = 0;
        let responses = loop {
            let result = if self.scorer.concurrent() {
                self.scorer.score(batch)
            } else {
                let _guard = self.serial.lock().expect("scorer lock poisoned");
                self.scorer.score(batch)
            };
            match result {
                Err(e) if e.is_transient() && attempt < self.config.retries => {
                    thread::sleep(Duration::from_millis(self.config.backoff_ms << attempt));
                    attempt += 1;
                }
                other => break other?,
            }
        };
        admit_responses(batch, responses)
    }
}

/// Matches responses to requests by id and admits each distribution.
fn admit_responses<T: Scalar>(
    batch: &[WireRequest],
    responses: Vec<WireResponse>,
) -> Result<Vec<EntailmentDistribution<T>>, GatewayError> {
    if responses.len() != batch.len() {
        // a lone id-less error reply explains the failure better than the count
        if let Some(resp) = responses.iter().find(|r| r.error.is_some()) {
            resp.probabilities()?;
        }
        return Err(GatewayError::Protocol(format!(
            "sent {} requests, received {} responses",
            batch.len(),
            responses.len()
        )));
    }
    let mut by_id: HashMap<String, WireResponse> = HashMap::with_capacity(responses.len());
    for resp in responses {
        let id = match &resp.id {
            Some(id) => id.clone(),
            None => {
                resp.probabilities()?;
                return Err(GatewayError::Protocol("response without id".into()));
            }
        };
        if by_id.insert(id.clone(), resp).is_some() {
            return Err(GatewayError::Protocol(format!("duplicate response id {id:?}")));
        }
    }
    batch
        .iter()
        .map(|req| {
            let resp = by_id
                .get(&req.id)
                .ok_or_else(|| GatewayError::Protocol(format!("no response for request {:?}", req.id)))?;
            let (e, n, c) = resp.probabilities()?;
            EntailmentDistribution::admit(T::of(e), T::of(n), T::of(c)).map_err(|source| GatewayError::Distribution {
                id: req.id.clone(),
                source,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nli::DistributionError;
    use std::sync::atomic::AtomicU32;

    /// Replies with a fixed triple, optionally failing the first calls.
    struct Scripted {
        reply: (f64, f64, f64),
        transient_failures: AtomicU32,
        calls: AtomicU32,
        concurrent: bool,
    }

    impl Scripted {
        fn new(reply: (f64, f64, f64)) -> Self {
            Self {
                reply,
                transient_failures: AtomicU32::new(0),
                calls: AtomicU32::new(0),
                concurrent: false,
            }
        }
    }

    impl Scorer for Scripted {
        fn concurrent(&self) -> bool {
            self.concurrent
        }

        fn score(&self, requests: &[WireRequest]) -> Result<Vec<WireResponse>, GatewayError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self
                .transient_failures
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
                .is_ok()
            {
                return Err(GatewayError::Unreachable("scripted".into()));
            }
            let (e, n, c) = self.reply;
            Ok(requests
                .iter()
                .rev()
                .map(|r| WireResponse::scores(r.id.clone(), e, n, c))
                .collect())
        }
    }

    fn pairs(n: usize) -> Vec<PremiseHypothesisPair> {
        (0..n)
            .map(|i| PremiseHypothesisPair::new(format!("t{i}"), "h", format!("premise {i}"), "hyp").unwrap())
            .collect()
    }

    fn fast(scorer: Scripted) -> Gateway {
        Gateway::new(
            Arc::new(scorer),
            GatewayConfig {
                batch_size: 4,
                backoff_ms: 1,
                ..GatewayConfig::default()
            },
        )
    }

    #[test]
    fn rejects_excess_deviation() {
        let gw = fast(Scripted::new((0.5, 0.3, 0.1)));
        match gw.score_batch(&pairs(1)) {
            Err(GatewayError::Distribution {
                source: DistributionError::SumDeviation { .. },
                ..
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn renormalizes_small_deviation() {
        let gw = fast(Scripted::new((0.5005, 0.3, 0.2)));
        let out = gw.score_batch(&pairs(3)).unwrap();
        assert_eq!(out.len(), 3);
        for d in out {
            assert!((d.sum() - 1.0).abs() < 1e-15);
            assert!((d.entailment - 0.5005 / 1.0005).abs() < 1e-15);
        }
    }

    #[test]
    fn retries_transient_failures() {
        let scorer = Scripted::new((1.0, 0.0, 0.0));
        scorer.transient_failures.store(2, Ordering::SeqCst);
        let gw = fast(scorer);
        assert_eq!(gw.score_batch(&pairs(2)).unwrap().len(), 2);
    }

    #[test]
    fn gives_up_after_retries() {
        let scorer = Scripted::new((1.0, 0.0, 0.0));
        scorer.transient_failures.store(3, Ordering::SeqCst);
        let gw = fast(scorer);
        assert!(matches!(gw.score_batch(&pairs(2)), Err(GatewayError::Unreachable(_))));
    }

    #[test]
    fn empty_premise_rejected_before_scoring() {
        let bad = PremiseHypothesisPair {
            tweet_id: "x".into(),
            hypothesis_id: "h".into(),
            premise: " ".into(),
            hypothesis: "hyp".into(),
        };
        let gw = fast(Scripted::new((1.0, 0.0, 0.0)));
        assert!(matches!(gw.score_batch(&[bad]), Err(GatewayError::InvalidPair { .. })));
    }

    #[test]
    fn concurrent_backend_keeps_order() {
        let mut scorer = Scripted::new((0.2, 0.3, 0.5));
        scorer.concurrent = true;
        let gw = fast(scorer);
        let out = gw.score_batch(&pairs(37)).unwrap();
        assert_eq!(out.len(), 37);
    }
}
