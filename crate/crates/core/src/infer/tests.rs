use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::minilang::fixtures::{SUM_POSITIVE_CONTEXT, SUM_POSITIVE_SNIPPET};
use crate::minilang::TypedProgram;
use crate::models::{ContextEncoder, ModelConfig, Variant, Vocab};
use crate::taskgen::{make_instance, select_snippets, TaskInstance};

fn figure_instance() -> TaskInstance {
    crate::models::tests::figure_instance()
}

fn model_for(inst: &TaskInstance, variant: Variant, seed: u64) -> Model {
    let cfg = ModelConfig { variant, context_encoder: ContextEncoder::LogBilinear, embed: 8, hidden: 8, ..Default::default() };
    Model::new(cfg, Vocab::build([&inst.program], 1), seed).unwrap()
}

#[test]
fn single_candidate_has_probability_one() {
    let p = TypedProgram::from_source("int f(int a) {\n    return a;\n}\n", "x").unwrap();
    let inst = make_instance(&p, select_snippets(&p, 80)[0]).unwrap();
    let m = model_for(&inst, Variant::Hybrid, 0);
    let scene = Scene::new(&inst);
    let r = rank_single(&m, &scene, 0, &inst.truth()).unwrap();
    assert_eq!(r.entries.len(), 1);
    assert_eq!(r.entries[0].1, 1.0);
}

#[test]
fn equal_usages_split_evenly_and_tie_to_lowest_id() {
    let p = TypedProgram::from_source("int f(int a, int b) {\n    return a;\n}\n", "x").unwrap();
    let inst = make_instance(&p, select_snippets(&p, 80)[0]).unwrap();
    let m = model_for(&inst, Variant::Loc, 0);
    let scene = Scene::new(&inst);
    let r = rank_single(&m, &scene, 0, &inst.truth()).unwrap();
    assert_eq!(r.entries.iter().map(|e| e.1).collect::<Vec<_>>(), vec![0.5, 0.5]);
    assert_eq!(r.top(), p.symbol_by_name(0, "a").unwrap());
    assert!(r.top() < r.entries[1].0);
}

#[test]
fn icm_with_one_placeholder_is_rank_single() {
    let p = TypedProgram::from_source("int f(int a, int b) {\n    int c = a * 2;\n    b = c - 1;\n    return c;\n}\n", "x").unwrap();
    let span = *select_snippets(&p, 80).iter().find(|s| p.tokens[s.lo].text == "return").unwrap();
    let inst = make_instance(&p, span).unwrap();
    assert_eq!(inst.placeholders.len(), 1);
    for seed in 0..5 {
        let m = model_for(&inst, Variant::Hybrid, seed);
        let scene = Scene::new(&inst);
        let top = rank_single(&m, &scene, 0, &inst.truth()).unwrap().top();
        for restarts in [1, 3] {
            let mut ranker = Ranker::new(&m, &scene);
            let cfg = IcmConfig { restarts, ..Default::default() };
            let out = icm(&mut ranker, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(out.assignment.values[&inst.placeholders[0].token], top);
        }
    }
}

#[test]
fn icm_is_monotone_and_deterministic() {
    let inst = figure_instance();
    for seed in 0..4 {
        let m = model_for(&inst, Variant::Hybrid, seed);
        let scene = Scene::new(&inst);
        let run = || {
            let mut ranker = Ranker::new(&m, &scene);
            icm(&mut ranker, &IcmConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        };
        let a = run();
        for tr in &a.traces {
            assert!(tr.windows(2).all(|w| w[1] >= w[0]), "{tr:?}");
        }
        assert_eq!(a, run());
        for ph in &inst.placeholders {
            assert!(ph.candidates.contains(&a.assignment.values[&ph.token]));
        }
    }
}

#[test]
fn independent_placeholders_converge_in_two_sweeps() {
    let inst = figure_instance();
    let m = model_for(&inst, Variant::Loc, 3);
    let scene = Scene::new(&inst);
    let mut ranker = Ranker::new(&m, &scene);
    let out = icm(&mut ranker, &IcmConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(out.sweeps.iter().all(|&s| s <= 2), "{:?}", out.sweeps);
}

#[test]
fn conditional_updates_keep_candidates() {
    let inst = figure_instance();
    let m = model_for(&inst, Variant::GruD, 2);
    let scene = Scene::new(&inst);
    let mut ranker = Ranker::new(&m, &scene);
    let cfg = IcmConfig { update: IcmUpdate::Conditional, ..Default::default() };
    let out = icm(&mut ranker, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(out.assignment.values.len(), 8);
}

#[test]
fn paste_single_variable() {
    let target = "int f(int only) {\n    int unused;\n}\n";
    let p = TypedProgram::from_source("int f(int only) {\n    return only;\n}\n", "x").unwrap();
    let m = Model::new(ModelConfig { embed: 8, hidden: 8, ..Default::default() }, Vocab::build([&p], 1), 0).unwrap();
    let target = target.replace("    int unused;\n", "");
    let res = paste(&m, &target, "return x;", 2, 1, &IcmConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(res.report.placeholders.len(), 1);
    assert_eq!(res.report.placeholders[0].chosen, "only");
    assert_eq!(res.report.placeholders[0].ranking, vec![("only".to_string(), 1.0)]);
    TypedProgram::from_source(&res.source, "out").unwrap();
    assert!(res.source.contains("return only;"));
}

#[test]
fn paste_figure_loop_runs() {
    let inst = figure_instance();
    let m = model_for(&inst, Variant::Hybrid, 0);
    let res = paste(&m, SUM_POSITIVE_CONTEXT, SUM_POSITIVE_SNIPPET, 3, 5, &IcmConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(res.report.placeholders.len(), 8);
    for r in &res.report.placeholders {
        let names: Vec<&str> = r.ranking.iter().map(|e| e.0.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(sorted, ["arr", "i", "lim", "sum"]);
    }
    assert!(res.source.contains("for (int i = 0;"));
    assert!(!res.report.to_string().is_empty());
}

#[test]
fn paste_errors() {
    let inst = figure_instance();
    let m = model_for(&inst, Variant::Loc, 0);
    let cfg = IcmConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let empty = "void f() {\n}\n";
    assert!(matches!(paste(&m, empty, "x = 1;", 2, 1, &cfg, &mut rng), Err(PasteError::NoCandidates { .. })));
    assert!(matches!(paste(&m, empty, "x = = 1;", 2, 1, &cfg, &mut rng), Err(PasteError::Splice(_))));
    assert!(matches!(paste(&m, empty, "x = 1;", 9, 1, &cfg, &mut rng), Err(PasteError::Splice(_))));
}
