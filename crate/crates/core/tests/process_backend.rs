use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;
use stance_nli::nli::process::ProcessScorer;
use stance_nli::nli::{Gateway, GatewayConfig, GatewayError, PremiseHypothesisPair};

fn stub_command(extra: &[&str]) -> Vec<String> {
    let script = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/support/stub_backend.py");
    ["python3", script].iter().chain(extra).map(|s| s.to_string()).collect()
}

fn gateway(timeout_ms: u64) -> Gateway {
    let scorer = ProcessScorer::spawn(stub_command(&[]), Duration::from_millis(timeout_ms)).unwrap();
    Gateway::new(
        Arc::new(scorer),
        GatewayConfig {
            batch_size: 8,
            retries: 1,
            backoff_ms: 1,
            max_in_flight: 2,
        },
    )
}

fn pair(i: usize, premise: &str) -> PremiseHypothesisPair {
    PremiseHypothesisPair::new(format!("t{i}"), "h", premise, "Ik ben voorstander van iets.").unwrap()
}

fn expected_entailment(premise: &str) -> f64 {
    (premise.chars().count() % 7 + 1) as f64 / 10.0
}

#[test]
fn scores_batches_in_order() {
    let gw = gateway(5000);
    let pairs: Vec<_> = (0..37).map(|i| pair(i, &"x".repeat(i + 1))).collect();
    let dists = gw.score_batch(&pairs).unwrap();
    assert_eq!(dists.len(), 37);
    for (p, d) in pairs.iter().zip(&dists) {
        assert!((d.entailment - expected_entailment(&p.premise)).abs() < 1e-12);
        assert!((d.neutral - 0.1).abs() < 1e-12);
    }
}

#[test]
fn handshake_with_other_protocol_is_rejected() {
    match ProcessScorer::spawn(stub_command(&["2"]), Duration::from_secs(5)) {
        Err(GatewayError::Protocol(msg)) => assert!(msg.contains("protocol"), "{msg}"),
        Err(other) => panic!("unexpected {other}"),
        Ok(_) => panic!("accepted protocol 2"),
    }
}

#[test]
fn reports_handshake_concurrency() {
    let scorer = ProcessScorer::spawn(stub_command(&[]), Duration::from_secs(5)).unwrap();
    assert!(!scorer.handshake_concurrent());
}

#[test]
fn error_response_is_a_backend_error() {
    let gw = gateway(5000);
    let err = gw.score_batch(&[pair(0, "dit is kapot")]).unwrap_err();
    assert!(
        matches!(err, GatewayError::Backend(ref m) if m.contains("model exploded")),
        "{err}"
    );
}

#[test]
fn garbage_is_a_protocol_error() {
    let gw = gateway(5000);
    let err = gw.score_batch(&[pair(0, "rommel")]).unwrap_err();
    assert!(matches!(err, GatewayError::Protocol(_)), "{err}");
}

#[test]
fn small_deviation_renormalized_large_rejected() {
    let gw = gateway(5000);
    let d = gw.score_batch(&[pair(0, "scheef")]).unwrap()[0];
    assert!((d.sum() - 1.0).abs() < 1e-12);
    assert!((d.entailment - 0.5005 / 1.0005).abs() < 1e-12);
    let err = gw.score_batch(&[pair(0, "fout")]).unwrap_err();
    assert!(matches!(err, GatewayError::Distribution { .. }), "{err}");
}

#[test]
fn timeout_then_recovers_with_fresh_process() {
    let gw = gateway(300);
    let err = gw.score_batch(&[pair(0, "heel traag")]).unwrap_err();
    assert!(matches!(err, GatewayError::Timeout(_)), "{err}");
    let d = gw.score_batch(&[pair(0, "abc")]).unwrap();
    assert!((d[0].entailment - expected_entailment("abc")).abs() < 1e-12);
}

#[test]
fn crash_then_recovers_with_fresh_process() {
    let gw = gateway(5000);
    let err = gw.score_batch(&[pair(0, "sterf")]).unwrap_err();
    assert!(err.is_transient(), "{err}");
    assert_eq!(gw.score_batch(&[pair(0, "abcd")]).unwrap().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn arbitrary_text_survives_the_wire(
        premises in prop::collection::vec("[^\u{0}-\u{1f}]{1,40}", 1..12)
    ) {
        let premises: Vec<String> = premises
            .into_iter()
            .filter(|p| !["kapot", "traag", "rommel", "sterf", "scheef", "fout"].iter().any(|k| p.contains(k)))
            .filter(|p| !p.trim().is_empty())
            .collect();
        prop_assume!(!premises.is_empty());
        let gw = gateway(5000);
        let pairs: Vec<_> = premises.iter().enumerate().map(|(i, p)| pair(i, p)).collect();
        let dists = gw.score_batch(&pairs).unwrap();
        for (p, d) in premises.iter().zip(dists) {
            prop_assert!((d.entailment - expected_entailment(p)).abs() < 1e-12, "{:?}", p);
        }
    }
}
