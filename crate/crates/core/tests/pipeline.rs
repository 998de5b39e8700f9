use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use stance_nli::metrics::{Cell, CorpusTag, HypothesisTag};
use stance_nli::pipeline::{self, PipelineConfig, PipelineError, Stage};

fn demo_config(out: &Path) -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo/config.toml");
    let mut config = PipelineConfig::load(path).unwrap();
    config.output_dir = out.to_path_buf();
    config
}

fn stages(list: &[Stage]) -> BTreeSet<Stage> {
    list.iter().copied().collect()
}

#[test]
fn demo_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo_config(dir.path());
    let manifest = pipeline::run_all(&config).unwrap();
    assert_eq!(manifest.seed, Some(7));
    assert_eq!(manifest.artifacts.len(), 12);

    let report = pipeline::load_report(dir.path()).unwrap();
    println!("{}", report.render_table());
    assert_eq!(report.conditions.len(), 4);
    let survey = report.condition(CorpusTag::Filtered, HypothesisTag::Survey).unwrap();
    for cell in &survey.precision {
        assert!(matches!(cell, Cell::Ok(_)), "{cell:?}");
    }
    assert!(report.baseline(CorpusTag::All).unwrap().precision.ok().is_some());
}

#[test]
fn evaluate_without_scores_names_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo_config(dir.path());
    pipeline::run(&config, &stages(&[Stage::Ingest, Stage::Filter, Stage::Panel])).unwrap();
    match pipeline::run(&config, &stages(&[Stage::Evaluate])) {
        Err(PipelineError::MissingArtifact { stage, .. }) => assert_eq!(stage, Stage::Score),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn stages_can_run_one_at_a_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline::run_all(&demo_config(a.path())).unwrap();
    let config = demo_config(b.path());
    let mut last = None;
    for stage in Stage::ALL {
        last = Some(pipeline::run(&config, &stages(&[stage])).unwrap());
    }
    let whole = pipeline::run_all(&demo_config(a.path())).unwrap();
    assert_eq!(last.unwrap().artifacts, whole.artifacts);
}

#[test]
fn baseline_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = demo_config(dir.path());
    config.baseline.seed = None;
    let err = pipeline::run(&config, &stages(&[Stage::Baseline])).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)), "{err}");
}

fn demo6(out: &Path) -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo6/config.toml");
    let mut config = PipelineConfig::load(path).unwrap();
    config.output_dir = out.to_path_buf();
    config
}

// Expected numbers for the six tweet fixture, worked out by hand.
// Simple hypothesis: favor = entailment, so the ranking is t1 .9, t3 .8, t6 .3, t2 .2, t4 .1, t5 .05.
// Gold: t1 favor, t2 against, t3 favor, t4 neutral, t5 against, t6 neutral.
// Panel (party, 2020): A 2.0, B 3.0, C 1.0.
#[test]
fn six_tweet_report_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    pipeline::run_all(&demo6(dir.path())).unwrap();
    let report = pipeline::load_report(dir.path()).unwrap();

    for corpus in CorpusTag::BOTH {
        for hyp in HypothesisTag::BOTH {
            let cond = report.condition(corpus, hyp).unwrap();
            assert_eq!(cond.tweets, 6);
            let p: Vec<_> = cond.precision.iter().map(|c| c.ok().unwrap()).collect();
            // top 2: t1, t3 both favor
            assert_eq!((p[0].k, p[0].p_entail, p[0].p_nonneutral), (2, 1.0, 1.0));
            // top 4 adds t6 (neutral) and t2 (against)
            assert_eq!((p[1].k, p[1].p_entail, p[1].p_nonneutral), (4, 0.5, 0.75));

            let rho: Vec<_> = cond.correlation.iter().map(|c| c.ok().unwrap()).collect();
            // top 2 covers A and B only, ordered opposite to the panel
            assert_eq!((rho[0].n_pairs, rho[0].rho), (2, -1.0));
            // top 4: B .8 > A .55 > C .3 (simple), same order for survey; panel B > A > C
            assert_eq!((rho[1].n_pairs, rho[1].rho), (3, 1.0));
            if hyp == HypothesisTag::Simple {
                // all tweets: A .55 > B .45 > C .175 vs panel B > A > C, sum d^2 = 2
                assert!((rho[2].rho - 0.5).abs() < 1e-12);
            }
        }
    }

    // survey favor = (7 e + 4 c) / 11, seven items pro and four anti
    let all: Vec<stance_nli::TweetStanceF64> = std::fs::read_to_string(dir.path().join("aggregate_all_survey.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let t1 = all.iter().find(|s| s.tweet_id == "t1").unwrap();
    assert!((t1.favor_prob - (7.0 * 0.9 + 4.0 * 0.05) / 11.0).abs() < 1e-12);
    assert!((t1.aggregated.against - (7.0 * 0.05 + 4.0 * 0.9) / 11.0).abs() < 1e-12);
}
