use std::collections::BTreeSet;

use proptest::prelude::*;
use stance_nli::ingest::{self, CleanTweet, MatchMode, PanelResponse};
use stance_nli::metrics::{self, Grouping, DEFAULT_REVERSE_CODED};

fn non_constant(v: &[f64]) -> bool {
    v.iter().any(|&x| x != v[0])
}

fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(-50i32..50, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
            prop::collection::vec(-50i32..50, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
        )
    })
}

fn response() -> impl Strategy<Value = PanelResponse> {
    (
        0u32..10_000,
        2017i32..=2021,
        prop::sample::select(vec!["VVD", "PVV", "CDA", "D66", "SGP"]),
        prop::array::uniform11(1u8..=5),
    )
        .prop_map(|(id, year, party, items)| PanelResponse {
            respondent_id: format!("r{id}"),
            year,
            party_voted: party.to_string(),
            item_responses: items,
        })
}

proptest! {
    #[test]
    fn spearman_symmetric_and_bounded((xs, ys) in series()) {
        prop_assume!(non_constant(&xs) && non_constant(&ys));
        let a = metrics::spearman_rho(&xs, &ys).unwrap();
        let b = metrics::spearman_rho(&ys, &xs).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn spearman_invariant_under_monotone_transform((xs, ys) in series()) {
        prop_assume!(non_constant(&xs) && non_constant(&ys));
        let a = metrics::spearman_rho(&xs, &ys).unwrap();
        let warped: Vec<f64> = xs.iter().map(|x| (x / 10.0).exp() * 3.0 + 1.0).collect();
        let b = metrics::spearman_rho(&warped, &ys).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let reversed: Vec<f64> = xs.iter().map(|x| -x).collect();
        let c = metrics::spearman_rho(&reversed, &ys).unwrap();
        prop_assert!((a + c).abs() < 1e-12);
    }

    #[test]
    fn panel_scores_ignore_row_order(
        mut rows in prop::collection::vec(response(), 1..60),
        by_year in any::<bool>(),
    ) {
        let reverse: BTreeSet<usize> = DEFAULT_REVERSE_CODED.into_iter().collect();
        let grouping = if by_year { Grouping::ByPartyYear } else { Grouping::ByParty };
        let before = metrics::panel_scores::<f64>(&rows, &reverse, grouping).unwrap();
        rows.reverse();
        let after = metrics::panel_scores::<f64>(&rows, &reverse, grouping).unwrap();
        prop_assert_eq!(&before, &after);
        for s in &before {
            prop_assert!((1.0..=5.0).contains(&s.score));
        }
        prop_assert_eq!(before.iter().map(|s| s.respondents).sum::<usize>(), rows.len());
    }

    #[test]
    fn keyword_filter_is_an_ordered_subset(
        texts in prop::collection::vec("[a-z ]{0,30}", 0..30),
        whole in any::<bool>(),
    ) {
        let tweets: Vec<CleanTweet> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| CleanTweet {
                id: format!("t{i}"),
                party: "X".into(),
                year: 2020,
                text: t.clone(),
                token_count: ingest::token_count(t),
            })
            .collect();
        let mode = if whole { MatchMode::WholeWord } else { MatchMode::Substring };
        let kept = ingest::filter_by_keywords(&tweets, &["man", "vrouw"], mode).unwrap();
        let mut cursor = tweets.iter();
        for k in &kept {
            prop_assert!(cursor.any(|t| t.id == k.id));
            prop_assert!(k.text.contains("man") || k.text.contains("vrouw"));
        }
        let substring = ingest::filter_by_keywords(&tweets, &["man", "vrouw"], MatchMode::Substring).unwrap();
        prop_assert!(kept.len() <= substring.len());
    }
}
