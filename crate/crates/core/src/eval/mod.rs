//! Evaluation metrics: one placeholder at a time, full snippets under ICM,
//! and precision/recall over same-type decisions.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::infer::{icm, IcmConfig, Ranker, Ranking};
use crate::minilang::SymbolId;
use crate::models::{Model, ModelError, Scene};
use crate::taskgen::TaskInstance;

/// How the truth fared in one ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    /// 1-based rank of the truth.
    pub rank: usize,
    /// Whether the top prediction has the truth's declared type.
    pub type_match: bool,
}

impl Outcome {
    pub fn correct(&self) -> bool {
        self.rank == 1
    }
}

/// One same-type decision: the top probability within the same-type
/// candidates and whether that top candidate is the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub confidence: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerPlaceholder {
    pub accuracy: f64,
    pub mrr: f64,
    pub type_match: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullSnippet {
    pub accuracy: f64,
    pub mrr: f64,
    pub exact_match: f64,
    pub type_match: f64,
    pub type_exact_match: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SameType {
    pub pr_auc: f64,
    pub precision_at_10_recall: f64,
    pub n_decisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub instances: usize,
    pub placeholders: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_placeholder: PerPlaceholder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_snippet: Option<FullSnippet>,
    /// Absent when no placeholder has two or more same-type candidates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub same_type: Option<SameType>,
    pub counts: Counts,
}

fn ratio(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

pub fn per_placeholder_metrics(outcomes: &[Outcome]) -> PerPlaceholder {
    let n = outcomes.len();
    PerPlaceholder {
        accuracy: ratio(outcomes.iter().filter(|o| o.correct()).count() as f64, n),
        mrr: ratio(outcomes.iter().map(|o| 1.0 / o.rank as f64).sum(), n),
        type_match: ratio(outcomes.iter().filter(|o| o.type_match).count() as f64, n),
    }
}

/// Each instance contributes the mean over its placeholders; exact matches
/// require every placeholder of an instance.
pub fn full_snippet_metrics(instances: &[Vec<Outcome>]) -> FullSnippet {
    let per: Vec<PerPlaceholder> = instances.iter().map(|i| per_placeholder_metrics(i)).collect();
    let n = instances.len();
    let mean = |f: fn(&PerPlaceholder) -> f64| ratio(per.iter().map(f).sum(), n);
    FullSnippet {
        accuracy: mean(|p| p.accuracy),
        mrr: mean(|p| p.mrr),
        exact_match: ratio(instances.iter().filter(|i| i.iter().all(Outcome::correct)).count() as f64, n),
        type_match: mean(|p| p.type_match),
        type_exact_match: ratio(instances.iter().filter(|i| i.iter().all(|o| o.type_match)).count() as f64, n),
    }
}

/// `(recall, precision)` points from sweeping a threshold down the
/// confidences; tied confidences enter together.
pub fn pr_curve(decisions: &[Decision]) -> Vec<(f64, f64)> {
    let mut d = decisions.to_vec();
    d.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let n = d.len();
    let mut points = Vec::new();
    let (mut answered, mut correct) = (0usize, 0usize);
    let mut i = 0;
    while i < n {
        let c = d[i].confidence;
        while i < n && d[i].confidence == c {
            answered += 1;
            correct += d[i].correct as usize;
            i += 1;
        }
        points.push((answered as f64 / n as f64, correct as f64 / answered as f64));
    }
    points
}

/// Trapezoidal area under the precision-recall curve, starting from recall
/// 0 at the first point's precision.
pub fn pr_auc(curve: &[(f64, f64)]) -> f64 {
    let Some(&(_, p0)) = curve.first() else { return 0.0 };
    let mut prev = (0.0, p0);
    let mut area = 0.0;
    for &(r, p) in curve {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    area
}

pub fn same_type_metrics(decisions: &[Decision]) -> Option<SameType> {
    if decisions.is_empty() {
        return None;
    }
    let curve = pr_curve(decisions);
    let at10 = curve.iter().find(|&&(r, _)| r >= 0.1).map_or(0.0, |&(_, p)| p);
    Some(SameType { pr_auc: pr_auc(&curve), precision_at_10_recall: at10, n_decisions: decisions.len() })
}

impl MetricsReport {
    pub fn from_outcomes(single: &[Outcome], full: Option<&[Vec<Outcome>]>, decisions: &[Decision], instances: usize) -> Self {
        MetricsReport {
            per_placeholder: per_placeholder_metrics(single),
            full_snippet: full.map(full_snippet_metrics),
            same_type: same_type_metrics(decisions),
            counts: Counts { instances, placeholders: single.len() },
        }
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |x: f64| format!("{:.1}", 100.0 * x);
        writeln!(f, "{:<22}{:>14}{:>14}", "", "Per-Placeholder", "Full Snippet")?;
        let full = self.full_snippet.as_ref();
        let row = |f: &mut fmt::Formatter<'_>, name: &str, a: Option<String>, b: Option<String>| {
            writeln!(f, "{:<22}{:>14}{:>14}", name, a.unwrap_or_else(|| "-".into()), b.unwrap_or_else(|| "-".into()))
        };
        let pp = &self.per_placeholder;
        row(f, "Accuracy (%)", Some(pct(pp.accuracy)), full.map(|s| pct(s.accuracy)))?;
        row(f, "MRR", Some(format!("{:.3}", pp.mrr)), full.map(|s| format!("{:.3}", s.mrr)))?;
        row(f, "Ex Match (%)", None, full.map(|s| pct(s.exact_match)))?;
        row(f, "Type Match (%)", Some(pct(pp.type_match)), full.map(|s| pct(s.type_match)))?;
        row(f, "Type Ex Match (%)", None, full.map(|s| pct(s.type_exact_match)))?;
        match &self.same_type {
            Some(s) => {
                writeln!(f, "{:<22}{:>14.3}", "PR AUC", s.pr_auc)?;
                writeln!(f, "{:<22}{:>14}", "Precision@10% (%)", pct(s.precision_at_10_recall))?;
                writeln!(f, "{:<22}{:>14}", "Same-type decisions", s.n_decisions)?;
            }
            None => writeln!(f, "{:<22}{:>14}", "Same-type decisions", 0)?,
        }
        write!(f, "{} instances, {} placeholders", self.counts.instances, self.counts.placeholders)
    }
}

fn outcome(inst: &TaskInstance, ranking: &Ranking, truth: SymbolId) -> Outcome {
    let p = &inst.program;
    Outcome {
        rank: ranking.rank_of(truth).expect("truth is a candidate"),
        type_match: p.symbol(ranking.top()).declared_type == p.symbol(truth).declared_type,
    }
}

/// The truth's standing among its same-type candidates, if it has at least
/// two of them.
fn decision(ranking: &Ranking, same_type: &[SymbolId], truth: SymbolId) -> Option<Decision> {
    if same_type.len() < 2 {
        return None;
    }
    let kept: Vec<_> = ranking.entries.iter().filter(|e| same_type.contains(&e.0)).collect();
    let total: f64 = kept.iter().map(|e| e.1).sum();
    let top = kept[0];
    Some(Decision { confidence: if total > 0.0 { top.1 / total } else { 1.0 / kept.len() as f64 }, correct: top.0 == truth })
}

/// Per-instance ICM seed, independent of where the instance sits in a list.
fn instance_seed(seed: u64, id: &str) -> u64 {
    id.bytes().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Everything a model produced on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceEval {
    pub single: Vec<Outcome>,
    pub decisions: Vec<Decision>,
    pub full: Option<(BTreeMap<usize, SymbolId>, Vec<Outcome>)>,
}

/// Ranks every placeholder with the others at ground truth and, when `icm_config`
/// is given, also runs ICM over the whole snippet.
pub fn eval_instance(model: &Model, inst: &TaskInstance, icm_config: Option<(&IcmConfig, u64)>) -> Result<InstanceEval, ModelError> {
    let scene = Scene::new(inst);
    let mut ranker = Ranker::new(model, &scene);
    let truth = inst.truth();
    let mut single = Vec::new();
    let mut decisions = Vec::new();
    for (k, ph) in inst.placeholders.iter().enumerate() {
        let r = ranker.rank(k, &truth)?;
        single.push(outcome(inst, &r, ph.truth));
        decisions.extend(decision(&r, &ph.same_type_candidates, ph.truth));
    }
    let full = match icm_config {
        None => None,
        Some((cfg, seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, &inst.id));
            let out = icm(&mut ranker, cfg, &mut rng)?;
            let chosen = out.assignment.values;
            let mut outcomes = Vec::new();
            for (k, ph) in inst.placeholders.iter().enumerate() {
                let r = ranker.rank(k, &chosen)?;
                outcomes.push(outcome(inst, &r, ph.truth));
            }
            Some((chosen, outcomes))
        }
    };
    Ok(InstanceEval { single, decisions, full })
}

/// Per-placeholder top-1 accuracy with the other placeholders at ground truth.
pub fn per_placeholder_accuracy(model: &Model, instances: &[TaskInstance]) -> Result<f64, ModelError> {
    let mut outcomes = Vec::new();
    for inst in instances {
        outcomes.extend(eval_instance(model, inst, None)?.single);
    }
    Ok(per_placeholder_metrics(&outcomes).accuracy)
}

/// The full report; the full-snippet block is computed only when `icm_config` is given.
pub fn evaluate(model: &Model, instances: &[TaskInstance], icm_config: Option<(&IcmConfig, u64)>) -> Result<MetricsReport, ModelError> {
    let mut single = Vec::new();
    let mut decisions = Vec::new();
    let mut full = Vec::new();
    for inst in instances {
        let e = eval_instance(model, inst, icm_config)?;
        single.extend(e.single);
        decisions.extend(e.decisions);
        full.extend(e.full.map(|f| f.1));
    }
    let full = icm_config.map(|_| full);
    Ok(MetricsReport::from_outcomes(&single, full.as_deref(), &decisions, instances.len()))
}

#[cfg(test)]
mod tests;
