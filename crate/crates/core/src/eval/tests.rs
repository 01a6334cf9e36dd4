use proptest::prelude::*;

use super::*;
use crate::models::{ModelConfig, Variant, Vocab};

fn o(rank: usize) -> Outcome {
    Outcome { rank, type_match: true }
}

fn d(confidence: f64, correct: bool) -> Decision {
    Decision { confidence, correct }
}

#[test]
fn per_placeholder_examples() {
    let oracle = per_placeholder_metrics(&[o(1), o(1), o(1)]);
    assert_eq!((oracle.accuracy, oracle.mrr, oracle.type_match), (1.0, 1.0, 1.0));
    let second = per_placeholder_metrics(&[o(2), o(2)]);
    assert_eq!((second.accuracy, second.mrr), (0.0, 0.5));
    let mixed = per_placeholder_metrics(&[o(1), o(2), o(1), o(4)]);
    assert_eq!(mixed.accuracy, 0.5);
    assert!((mixed.mrr - (1.0 + 0.5 + 1.0 + 0.25) / 4.0).abs() < 1e-15);
}

#[test]
fn full_snippet_examples() {
    let one = full_snippet_metrics(&[vec![o(1), o(3)]]);
    assert_eq!((one.accuracy, one.exact_match), (0.5, 0.0));
    let solved = full_snippet_metrics(&[vec![o(1)], vec![o(1), o(1)]]);
    assert_eq!(solved.exact_match, 1.0);
    let three = full_snippet_metrics(&[vec![o(1), o(1)], vec![o(1), o(2)], vec![o(2), o(2)]]);
    assert_eq!(three.accuracy, 0.5);
    assert!((three.exact_match - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn type_match_counts_top_prediction_types() {
    let outs = [Outcome { rank: 2, type_match: true }, Outcome { rank: 2, type_match: false }];
    let full = full_snippet_metrics(&[outs.to_vec(), vec![Outcome { rank: 1, type_match: true }]]);
    assert_eq!(full.type_match, 0.75);
    assert_eq!(full.type_exact_match, 0.5);
}

#[test]
fn oracle_decisions_have_unit_pr_auc() {
    let s = same_type_metrics(&[d(0.9, true), d(0.6, true), d(0.5, true)]).unwrap();
    assert_eq!((s.pr_auc, s.precision_at_10_recall, s.n_decisions), (1.0, 1.0, 3));
    assert_eq!(same_type_metrics(&[]), None);
}

#[test]
fn tied_confidences_form_one_block() {
    let curve = pr_curve(&[d(0.5, true), d(0.5, false), d(0.9, true), d(0.1, false)]);
    assert_eq!(curve, vec![(0.25, 1.0), (0.75, 2.0 / 3.0), (1.0, 0.5)]);
    let auc = pr_auc(&curve);
    let hand = 0.25 * 1.0 + 0.5 * (1.0 + 2.0 / 3.0) / 2.0 + 0.25 * (2.0 / 3.0 + 0.5) / 2.0;
    assert!((auc - hand).abs() < 1e-12);
}

#[test]
fn uniform_predictor_has_chance_precision() {
    let decisions: Vec<Decision> = (0..300).map(|i| d(1.0 / 3.0, i % 3 == 0)).collect();
    let s = same_type_metrics(&decisions).unwrap();
    assert!((s.precision_at_10_recall - 1.0 / 3.0).abs() < 1e-12);
    assert!((s.pr_auc - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn report_serializes_with_table_labels() {
    let r = MetricsReport::from_outcomes(&[o(1), o(2)], Some(&[vec![o(1), o(2)]]), &[d(0.7, true), d(0.6, false)], 1);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["per_placeholder", "full_snippet", "same_type", "counts"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let back: MetricsReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, r);
    let table = r.to_string();
    for label in ["Accuracy (%)", "MRR", "Ex Match (%)", "Type Match (%)", "PR AUC", "Precision@10%"] {
        assert!(table.contains(label), "{label}");
    }
    let none = MetricsReport::from_outcomes(&[o(1)], None, &[], 1);
    assert!(serde_json::to_value(&none).unwrap().get("same_type").is_none());
}

#[test]
fn model_evaluation_is_consistent() {
    let inst = crate::models::tests::figure_instance();
    let cfg = ModelConfig { variant: Variant::Hybrid, embed: 8, hidden: 8, ..Default::default() };
    let m = Model::new(cfg, Vocab::build([&inst.program], 1), 4).unwrap();
    let icm_cfg = IcmConfig::default();
    let e = eval_instance(&m, &inst, Some((&icm_cfg, 0))).unwrap();
    assert_eq!(e.single.len(), 8);
    assert!(e.single.iter().all(|o| (1..=4).contains(&o.rank)));
    assert_eq!(e.decisions.len(), inst.placeholders.iter().filter(|p| p.same_type_candidates.len() >= 2).count());
    let (chosen, full) = e.full.unwrap();
    assert_eq!(chosen.len(), 8);
    let exact = chosen == inst.truth();
    assert_eq!(full.iter().all(Outcome::correct), exact);
    let report = evaluate(&m, std::slice::from_ref(&inst), Some((&icm_cfg, 0))).unwrap();
    assert_eq!(report.per_placeholder.accuracy, per_placeholder_accuracy(&m, std::slice::from_ref(&inst)).unwrap());
    assert_eq!(report.counts, Counts { instances: 1, placeholders: 8 });
}

fn outcome_strategy() -> impl Strategy<Value = Outcome> {
    (1usize..6, any::<bool>()).prop_map(|(rank, t)| Outcome { rank, type_match: t || rank == 1 })
}

proptest! {
    #[test]
    fn metric_invariants(instances in prop::collection::vec(prop::collection::vec(outcome_strategy(), 1..4), 1..12)) {
        let flat: Vec<Outcome> = instances.iter().flatten().copied().collect();
        let p = per_placeholder_metrics(&flat);
        let f = full_snippet_metrics(&instances);
        prop_assert!(p.mrr >= p.accuracy);
        prop_assert!(f.exact_match <= f.accuracy + 1e-15);
        prop_assert!(f.type_exact_match <= f.type_match + 1e-15);
        for x in [p.accuracy, p.mrr, p.type_match, f.exact_match, f.type_exact_match] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let mut rev = instances.clone();
        rev.reverse();
        let g = full_snippet_metrics(&rev);
        prop_assert!((g.accuracy - f.accuracy).abs() < 1e-12 && g.exact_match == f.exact_match);
    }

    #[test]
    fn pr_invariants(raw in prop::collection::vec((0u8..10, any::<bool>()), 1..40)) {
        let decisions: Vec<Decision> = raw.iter().map(|&(c, ok)| d(c as f64 / 10.0, ok)).collect();
        let s = same_type_metrics(&decisions).unwrap();
        let curve = pr_curve(&decisions);
        let acc = decisions.iter().filter(|x| x.correct).count() as f64 / decisions.len() as f64;
        prop_assert!((curve.last().unwrap().1 - acc).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s.pr_auc));
        let mut rev = decisions.clone();
        rev.reverse();
        prop_assert_eq!(same_type_metrics(&rev).unwrap(), s);
    }
}
