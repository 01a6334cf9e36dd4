//! End-to-end acceptance checks. Each criterion writes one PASS/FAIL line to stderr;
//! the test fails if any criterion fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smartpaste::dataflow::{build_cfg, dataflow_uses, UsePoint, UseSet};
use smartpaste::eval::{eval_instance, per_placeholder_accuracy, Decision};
use smartpaste::infer::{icm, paste, IcmConfig, IcmUpdate, Ranker};
use smartpaste::minilang::fixtures::{SUM_POSITIVE, SUM_POSITIVE_CONTEXT, SUM_POSITIVE_SNIPPET};
use smartpaste::minilang::TypedProgram;
use smartpaste::models::{ContextEncoder, Model, ModelConfig, Scene, Variant, Vocab};
use smartpaste::nn::softmax;
use smartpaste::oracle::{finite_diff_coords, oracle_dataflow, oracle_map};
use smartpaste::taskgen::random::{random_flow_program, FlowProgramConfig};
use smartpaste::taskgen::{generate_corpus, instances_of, make_instance, select_snippets, CorpusFile, Profile, TaskInstance};
use smartpaste::train::{batch_loss, fit, make_batches, TrainConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn instances(files: &[CorpusFile]) -> Vec<TaskInstance> {
    files.iter().flat_map(|f| instances_of(&TypedProgram::from_source(&f.source, &f.path()).unwrap(), 80)).collect()
}

/// Train on the first 70% of the files, validate on the rest.
fn split(files: &[CorpusFile]) -> (Vec<TaskInstance>, Vec<TaskInstance>) {
    let n = files.len() * 7 / 10;
    (instances(&files[..n]), instances(&files[n..]))
}

fn figure_instance() -> TaskInstance {
    let p = TypedProgram::from_source(SUM_POSITIVE, "SumPositive.ml0").unwrap();
    let span = select_snippets(&p, 80).into_iter().find(|s| p.tokens[s.lo].text == "for" && p.tokens[s.hi - 1].text == ";").unwrap();
    make_instance(&p, span).unwrap()
}

fn dataflow_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut programs, mut pairs, mut mismatches) = (0, 0, 0);
    while programs < 500 {
        let src = random_flow_program(&mut rng, FlowProgramConfig { max_stmts: 12, ..Default::default() });
        let p = TypedProgram::from_source(&src, "r.ml0").unwrap();
        let Ok(oracle) = oracle_dataflow(&p, 3) else { continue };
        let fixed = dataflow_uses(&p, &build_cfg(&p, 0));
        pairs += oracle.entries.len();
        mismatches += (oracle != fixed) as usize;
        programs += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(mismatches == 0 && secs < 120.0, format!("{programs} programs, {pairs} (token, symbol) pairs, {mismatches} mismatching programs, {secs:.1}s"))
}

fn lexical_degeneration() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut total, mut equal) = (0, 0);
    for _ in 0..300 {
        let src = random_flow_program(&mut rng, FlowProgramConfig { branch_free: true, ..Default::default() });
        let p = TypedProgram::from_source(&src, "r.ml0").unwrap();
        for e in dataflow_uses(&p, &build_cfg(&p, 0)).entries.values() {
            total += 1;
            let lex_in = UseSet::from([e.lex_prev.map_or(UsePoint::Eps, UsePoint::Tok)]);
            let lex_out = UseSet::from([e.lex_next.map_or(UsePoint::Eps, UsePoint::Tok)]);
            equal += (e.df_in == lex_in && e.df_out == lex_out) as usize;
        }
    }
    verdict(total > 0 && equal == total, format!("{equal}/{total} occurrences"))
}

fn gradients() -> Verdict {
    let fig = figure_instance();
    let loops = instances(&generate_corpus(5, 1, 1, Profile::LoopRoles));
    let insts = vec![fig, loops[0].clone()];
    let scenes: Vec<Scene> = insts.iter().map(Scene::new).collect();
    let vocab = Vocab::build(insts.iter().map(|i| &i.program), 1);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for enc in [ContextEncoder::LogBilinear, ContextEncoder::Gru] {
        for variant in Variant::ALL {
            for seed in 0..20u64 {
                let cfg = ModelConfig { variant, context_encoder: enc, embed: 8, hidden: 8, ..Default::default() };
                let m = Model::new(cfg, vocab.clone(), seed).unwrap();
                let mut pick = ChaCha8Rng::seed_from_u64(seed);
                let batch = make_batches(&insts, 3, &mut pick).remove(0);
                let loss = |m: &Model| batch_loss(m, &scenes, &batch, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
                let (_, grads) = loss(&m);
                for id in m.params.ids() {
                    let n = m.params.get(id).len();
                    let coords: Vec<usize> = (0..4).map(|_| pick.gen_range(0..n)).collect();
                    let x = m.params.get(id).data.clone();
                    let fd = finite_diff_coords(
                        |w| {
                            let mut m2 = m.clone();
                            m2.params.get_mut(id).data.copy_from_slice(w);
                            loss(&m2).0
                        },
                        &x,
                        &coords,
                        1e-6,
                    );
                    let an: Vec<f64> = coords.iter().map(|&c| grads.get(id)[c]).collect();
                    let diff = an.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    let scale = an.iter().chain(&fd).map(|a| a * a).sum::<f64>().sqrt();
                    if scale > 1e-8 {
                        worst = worst.max(diff / scale);
                    }
                    checked += 1;
                }
            }
        }
    }
    verdict(worst < 1e-4, format!("{checked} parameter tensors over 5 variants x 2 encoders x 20 seeds, worst relative error {worst:.2e}"))
}

fn scoring_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_sum: f64 = 0.0;
    let mut shift_ok = true;
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let p = softmax(&s);
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        let c = rng.gen_range(-100.0..100.0);
        let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
        let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, x)| if *x > v[b] { i } else { b });
        shift_ok &= argmax(&p) == argmax(&softmax(&shifted));
    }
    let inst = figure_instance();
    let p = &inst.program;
    let cfg = ModelConfig { variant: Variant::Loc, embed: 8, hidden: 8, ..Default::default() };
    let m = Model::new(cfg, Vocab::build([p], 1), 3).unwrap();
    let scene = Scene::new(&inst);
    let mut ranker = Ranker::new(&m, &scene);
    let truth = inst.truth();
    let mut same_closure = true;
    for ph in &inst.placeholders {
        let ints: Vec<Vec<f64>> = ["i", "sum", "lim"]
            .iter()
            .map(|n| ranker.usage(ph.token, p.symbol_by_name(0, n).unwrap(), &truth).unwrap())
            .collect();
        same_closure &= ints[0] == ints[1] && ints[1] == ints[2];
    }
    verdict(
        worst_sum <= 1e-9 && shift_ok && same_closure,
        format!("max |sum - 1| = {worst_sum:.1e}, shift invariant: {shift_ok}, Loc same-closure usages equal: {same_closure}"),
    )
}

fn random_model(inst: &TaskInstance, seed: u64) -> Model {
    let cfg = ModelConfig { variant: Variant::Hybrid, embed: 8, hidden: 8, tree_depth: 4, ..Default::default() };
    Model::new(cfg, Vocab::build([&inst.program], 1), seed).unwrap()
}

fn icm_monotone() -> Verdict {
    let insts: Vec<TaskInstance> =
        instances(&generate_corpus(7, 2, 12, Profile::Mixed)).into_iter().filter(|i| i.placeholders.len() >= 2).take(200).collect();
    let (mut monotone, mut deterministic) = (0, 0);
    for (n, inst) in insts.iter().enumerate() {
        let m = random_model(inst, n as u64);
        let scene = Scene::new(inst);
        let run = || icm(&mut Ranker::new(&m, &scene), &IcmConfig::default(), &mut ChaCha8Rng::seed_from_u64(n as u64)).unwrap();
        let a = run();
        monotone += a.traces.iter().all(|t| t.windows(2).all(|w| w[1] >= w[0])) as usize;
        deterministic += (a == run()) as usize;
    }
    let n = insts.len();
    verdict(n == 200 && monotone == n && deterministic == n, format!("{n} instances: monotone {monotone}, deterministic {deterministic}"))
}

fn icm_vs_map() -> Verdict {
    let insts: Vec<TaskInstance> = instances(&generate_corpus(11, 2, 12, Profile::Mixed))
        .into_iter()
        .filter(|i| i.placeholders.len() >= 2 && i.placeholders.iter().map(|p| p.candidates.len()).product::<usize>() <= 4096)
        .take(200)
        .collect();
    let mut matched = 0;
    for (n, inst) in insts.iter().enumerate() {
        let m = random_model(inst, n as u64);
        let scene = Scene::new(inst);
        let mut ranker = Ranker::new(&m, &scene);
        let out = icm(&mut ranker, &IcmConfig::default(), &mut ChaCha8Rng::seed_from_u64(n as u64)).unwrap();
        let candidates: Vec<_> = inst.placeholders.iter().map(|p| p.candidates.clone()).collect();
        let (best, best_pll) = oracle_map(&candidates, |a| {
            let asg: BTreeMap<_, _> = inst.placeholders.iter().zip(a).map(|(p, &v)| (p.token, v)).collect();
            ranker.pseudo_log_likelihood(&asg).unwrap()
        })
        .unwrap();
        let got: Vec<_> = inst.placeholders.iter().map(|p| out.assignment.values[&p.token]).collect();
        matched += (got == best || (out.assignment.log_prob - best_pll).abs() < 1e-12) as usize;
    }
    let n = insts.len();
    let rate = matched as f64 / n as f64;
    verdict(n == 200 && rate >= 0.9, format!("{matched}/{n} = {:.1}%", 100.0 * rate))
}

fn train(variant: Variant, hidden: usize, epochs: usize, use_types: bool, train: &[TaskInstance], valid: &[TaskInstance]) -> Model {
    let cfg = TrainConfig {
        model: ModelConfig { variant, embed: hidden, hidden, use_types, ..Default::default() },
        epochs,
        seed: 1,
        patience: 3,
        checkpoint: None,
        ..Default::default()
    };
    fit(&cfg, train, valid, None, &mut std::io::sink()).unwrap().checkpoint.model().unwrap()
}

fn type_separable() -> Verdict {
    let start = Instant::now();
    let (tr, va) = split(&generate_corpus(1, 2, 10, Profile::TypeSeparable));
    let m = train(Variant::Loc, 16, 20, true, &tr, &va);
    let acc = per_placeholder_accuracy(&m, &va).unwrap();
    let secs = start.elapsed().as_secs_f64();
    verdict(acc >= 0.95 && secs < 300.0, format!("Loc valid accuracy {:.1}%, {secs:.0}s", 100.0 * acc))
}

struct LoopModels {
    hybrid: Model,
    hybrid_accuracy: f64,
}

fn same_type_chance(model: &Model, valid: &[TaskInstance]) -> (f64, f64, usize) {
    let mut decisions: Vec<Decision> = Vec::new();
    let mut chance = 0.0;
    for inst in valid {
        decisions.extend(eval_instance(model, inst, None).unwrap().decisions);
        chance += inst.placeholders.iter().filter(|p| p.same_type_candidates.len() >= 2).map(|p| 1.0 / p.same_type_candidates.len() as f64).sum::<f64>();
    }
    let n = decisions.len();
    (decisions.iter().filter(|d| d.correct).count() as f64 / n as f64, chance / n as f64, n)
}

/// Models are trained on `tr`, selected on `va` and scored on `test`.
fn same_type_separation(tr: &[TaskInstance], va: &[TaskInstance], test: &[TaskInstance]) -> (Verdict, LoopModels) {
    let start = Instant::now();
    let hybrid = train(Variant::Hybrid, 32, 8, true, tr, va);
    let avgg = train(Variant::AvgG, 32, 8, true, tr, va);
    let loc = train(Variant::Loc, 32, 8, true, tr, va);
    let h = per_placeholder_accuracy(&hybrid, test).unwrap();
    let a = per_placeholder_accuracy(&avgg, test).unwrap();
    let (loc_same, chance, n) = same_type_chance(&loc, test);
    let elapsed = start.elapsed();
    let pass = h >= 0.75 && a >= 0.75 && (loc_same - chance).abs() <= 0.05 && elapsed.as_secs_f64() < 900.0;
    let detail = format!(
        "Hybrid {:.1}%, AvgG {:.1}%, Loc same-type {:.1}% vs chance {:.1}% over {n} decisions, {:.0}s",
        100.0 * h,
        100.0 * a,
        100.0 * loc_same,
        100.0 * chance,
        elapsed.as_secs_f64()
    );
    (verdict(pass, detail), LoopModels { hybrid, hybrid_accuracy: h })
}

fn ablation(tr: &[TaskInstance], va: &[TaskInstance], test: &[TaskInstance], typed: &LoopModels) -> Verdict {
    let untyped = train(Variant::Hybrid, 32, 8, false, tr, va);
    let u = per_placeholder_accuracy(&untyped, test).unwrap();
    verdict(u < typed.hybrid_accuracy, format!("Hybrid {:.2}% with types, {:.2}% without", 100.0 * typed.hybrid_accuracy, 100.0 * u))
}

fn metrics_fixture() -> Verdict {
    use smartpaste::eval::{MetricsReport, Outcome};
    let o = |rank: usize, type_match: bool| Outcome { rank, type_match };
    let (t, f) = (true, false);
    let full = vec![
        vec![o(1, t), o(1, t)],
        vec![o(1, t), o(2, t)],
        vec![o(3, f)],
        vec![o(1, t)],
        vec![o(2, t), o(1, t), o(1, t)],
        vec![o(4, f), o(1, t)],
        vec![o(1, t)],
        vec![o(2, f)],
        vec![o(1, t), o(1, t)],
        vec![o(5, t)],
    ];
    let single: Vec<Outcome> = full.iter().flatten().copied().collect();
    let d = |confidence: f64, correct: bool| Decision { confidence, correct };
    let decisions = [d(0.9, t), d(0.8, t), d(0.8, f), d(0.7, t), d(0.6, f), d(0.5, t), d(0.5, t), d(0.4, f), d(0.3, t), d(0.2, f)];
    let r = MetricsReport::from_outcomes(&single, Some(&full), &decisions, 10);
    let fs = r.full_snippet.unwrap();
    let st = r.same_type.unwrap();
    let full_acc = (1.0 + 0.5 + 0.0 + 1.0 + 2.0 / 3.0 + 0.5 + 1.0 + 0.0 + 1.0 + 0.0) / 10.0;
    let full_mrr = (1.0 + 0.75 + 1.0 / 3.0 + 1.0 + 2.5 / 3.0 + 0.625 + 1.0 + 0.5 + 1.0 + 0.2) / 10.0;
    let auc = 0.1 + 1.0 / 6.0 + 17.0 / 240.0 + 0.0675 + 23.0 / 175.0 + 15.0 / 224.0 + 31.0 / 480.0 + 19.0 / 300.0;
    let checks = [
        ("accuracy", r.per_placeholder.accuracy, 10.0 / 16.0),
        ("mrr", r.per_placeholder.mrr, 737.0 / 960.0),
        ("type match", r.per_placeholder.type_match, 13.0 / 16.0),
        ("full accuracy", fs.accuracy, full_acc),
        ("full mrr", fs.mrr, full_mrr),
        ("exact match", fs.exact_match, 0.4),
        ("type exact match", fs.type_exact_match, 0.7),
        ("pr auc", st.pr_auc, auc),
        ("precision@10", st.precision_at_10_recall, 1.0),
    ];
    let worst = checks.iter().map(|(_, a, b)| (a - b).abs()).fold(0.0, f64::max);
    let bad: Vec<&str> = checks.iter().filter(|(_, a, b)| (a - b).abs() > 1e-12).map(|c| c.0).collect();
    verdict(bad.is_empty() && r.counts.placeholders == 16, format!("max deviation {worst:.1e}, off: {bad:?}"))
}

fn figure_end_to_end(loops: &LoopModels) -> Verdict {
    let inst = figure_instance();
    let p = &inst.program;
    let names = ["arr", "lim", "sum", "i"];
    let mut want: Vec<_> = names.iter().map(|n| p.symbol_by_name(0, n).unwrap()).collect();
    want.sort();
    let extraction = inst.placeholders.len() == 8 && inst.placeholders.iter().all(|ph| ph.candidates == want);
    let cfg = IcmConfig { update: IcmUpdate::Conditional, restarts: 25, ..Default::default() };
    let res = paste(&loops.hybrid, SUM_POSITIVE_CONTEXT, SUM_POSITIVE_SNIPPET, 3, 5, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let chosen: Vec<&str> = res.report.placeholders.iter().map(|r| r.chosen.as_str()).collect();
    let original: Vec<&str> = res.report.placeholders.iter().map(|r| r.original.as_str()).collect();
    let recovered = res.source == SUM_POSITIVE && chosen == original;
    verdict(extraction && recovered, format!("8 placeholders over {names:?}: {extraction}; paste chose {chosen:?}"))
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let mut run = |name: &'static str, v: Verdict| {
        let mut err = std::io::stderr().lock();
        writeln!(err, "\n{} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail).unwrap();
        results.push((name, v));
    };
    run("1 data-flow matches path enumeration", dataflow_oracle());
    run("2 lexical degeneration on branch-free code", lexical_degeneration());
    run("3 gradients match finite differences", gradients());
    run("4 softmax and scoring invariants", scoring_invariants());
    run("5 ICM monotone and deterministic", icm_monotone());
    run("6 ICM matches exhaustive MAP", icm_vs_map());
    run("7 Loc learns type-separable corpus", type_separable());
    let (tr, va) = split(&generate_corpus(1, 2, 10, Profile::LoopRoles));
    let test = instances(&generate_corpus(2, 2, 30, Profile::LoopRoles));
    let (v8, loops) = same_type_separation(&tr, &va, &test);
    run("8 same-type separation on loop roles", v8);
    run("9 removing types lowers Hybrid accuracy", ablation(&tr, &va, &test, &loops));
    run("10 metrics on hand fixture", metrics_fixture());
    run("11 figure extraction and paste", figure_end_to_end(&loops));
    let failed: Vec<&str> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
