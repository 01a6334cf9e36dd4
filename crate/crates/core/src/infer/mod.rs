//! Ranking candidates for one placeholder, iterated conditional modes over
//! all placeholders of a snippet, and pasting a snippet into a program.

mod paste;

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::minilang::SymbolId;
use crate::models::{Encoder, Model, ModelError, Scene, TypeMode};
use crate::nn::softmax;

pub use paste::{paste, PasteError, PasteReport, PasteResult, PlaceholderReport};

/// Candidates of one placeholder, most probable first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub token: usize,
    /// `(candidate, probability, score)`; ties in score go to the lower id.
    pub entries: Vec<(SymbolId, f64, f64)>,
}

impl Ranking {
    pub fn top(&self) -> SymbolId {
        self.entries[0].0
    }

    /// 1-based rank of `v`, if it is a candidate.
    pub fn rank_of(&self, v: SymbolId) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == v).map(|i| i + 1)
    }

    pub fn prob_of(&self, v: SymbolId) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == v).map(|e| e.1)
    }
}

/// Scores candidates of one scene under changing assignments, caching
/// scores by `(placeholder, candidate, candidate occurrences)`.
pub struct Ranker<'a> {
    model: &'a Model,
    scene: &'a Scene<'a>,
    enc: Encoder<'a>,
    contexts: HashMap<usize, Vec<f64>>,
    scores: HashMap<(usize, SymbolId, Vec<usize>), f64>,
}

const TAPE_LIMIT: usize = 200_000;

impl<'a> Ranker<'a> {
    pub fn new(model: &'a Model, scene: &'a Scene<'a>) -> Self {
        let mut enc = Encoder::new(model, TypeMode::Eval);
        enc.set_scene(scene);
        Ranker { model, scene, enc, contexts: HashMap::new(), scores: HashMap::new() }
    }

    pub fn scene(&self) -> &'a Scene<'a> {
        self.scene
    }

    fn refresh(&mut self) {
        if self.enc.tape().len() > TAPE_LIMIT {
            self.enc = Encoder::new(self.model, TypeMode::Eval);
            self.enc.set_scene(self.scene);
        }
    }

    pub fn context(&mut self, t: usize) -> Result<Vec<f64>, ModelError> {
        if let Some(c) = self.contexts.get(&t) {
            return Ok(c.clone());
        }
        self.refresh();
        let n = self.enc.context(t)?;
        let c = self.enc.value(n).to_vec();
        self.contexts.insert(t, c.clone());
        Ok(c)
    }

    /// `u(t, v)` under `assignment`.
    pub fn usage(&mut self, t: usize, v: SymbolId, assignment: &BTreeMap<usize, SymbolId>) -> Result<Vec<f64>, ModelError> {
        self.refresh();
        let n = self.enc.usage_at(t, v, assignment)?;
        Ok(self.enc.value(n).to_vec())
    }

    /// `c(t)ᵀ u(t, v)` with `v`'s occurrences taken from `assignment`.
    pub fn score(&mut self, t: usize, v: SymbolId, assignment: &BTreeMap<usize, SymbolId>) -> Result<f64, ModelError> {
        let occ = self.scene.occurrences(v, assignment, t);
        let key = (t, v, occ);
        if let Some(&s) = self.scores.get(&key) {
            return Ok(s);
        }
        let c = self.context(t)?;
        self.refresh();
        let n = self.enc.usage(t, v, &key.2)?;
        let s = crate::nn::dot(&c, self.enc.value(n))?;
        self.scores.insert(key, s);
        Ok(s)
    }

    /// Softmax over the candidates of placeholder `k`; other placeholders
    /// take their values from `assignment`.
    pub fn rank(&mut self, k: usize, assignment: &BTreeMap<usize, SymbolId>) -> Result<Ranking, ModelError> {
        let ph = &self.scene.instance.placeholders[k];
        let scores = ph.candidates.iter().map(|&v| self.score(ph.token, v, assignment)).collect::<Result<Vec<_>, _>>()?;
        let probs = softmax(&scores);
        let mut entries: Vec<(SymbolId, f64, f64)> =
            ph.candidates.iter().zip(probs).zip(&scores).map(|((&v, p), &s)| (v, p, s)).collect();
        entries.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        Ok(Ranking { token: ph.token, entries })
    }

    /// `log p(t_k ← assignment[t_k] | others)`.
    pub fn log_prob(&mut self, k: usize, assignment: &BTreeMap<usize, SymbolId>) -> Result<f64, ModelError> {
        let ph = &self.scene.instance.placeholders[k];
        let scores = ph.candidates.iter().map(|&v| self.score(ph.token, v, assignment)).collect::<Result<Vec<_>, _>>()?;
        let own = self.score(ph.token, assignment[&ph.token], assignment)?;
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(own - m - scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln())
    }

    /// Total log pseudo-likelihood `Σ_k log p(t_k ← α(t_k) | α)`.
    pub fn pseudo_log_likelihood(&mut self, assignment: &BTreeMap<usize, SymbolId>) -> Result<f64, ModelError> {
        let mut total = 0.0;
        for k in 0..self.scene.instance.placeholders.len() {
            total += self.log_prob(k, assignment)?;
        }
        Ok(total)
    }
}

/// Ranks the candidates of placeholder `k` with the other placeholders set
/// from `context_assignment`.
pub fn rank_single(model: &Model, scene: &Scene, k: usize, context_assignment: &BTreeMap<usize, SymbolId>) -> Result<Ranking, ModelError> {
    Ranker::new(model, scene).rank(k, context_assignment)
}

/// How one placeholder is updated within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcmUpdate {
    /// The candidate maximizing the total pseudo-log-likelihood of the
    /// snippet; never decreases it.
    Joint,
    /// The candidate maximizing the placeholder's own conditional.
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcmConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub update: IcmUpdate,
}

impl Default for IcmConfig {
    fn default() -> Self {
        IcmConfig { restarts: 5, max_sweeps: 10, update: IcmUpdate::Joint }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: BTreeMap<usize, SymbolId>,
    /// Total pseudo-log-likelihood at convergence.
    pub log_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcmOutcome {
    pub assignment: Assignment,
    /// Per restart: the pseudo-log-likelihood at initialization and after
    /// every single-placeholder update.
    pub traces: Vec<Vec<f64>>,
    /// Per restart: sweeps performed.
    pub sweeps: Vec<usize>,
}

/// Iterated conditional modes with random restarts; placeholders are swept
/// in token order and the best restart (first on ties) wins.
pub fn icm<R: Rng>(ranker: &mut Ranker, config: &IcmConfig, rng: &mut R) -> Result<IcmOutcome, ModelError> {
    let phs = &ranker.scene().instance.placeholders;
    let mut order: Vec<usize> = (0..phs.len()).collect();
    order.sort_by_key(|&k| phs[k].token);
    let mut best: Option<Assignment> = None;
    let mut traces = Vec::new();
    let mut sweeps = Vec::new();
    for _ in 0..config.restarts.max(1) {
        let mut a: BTreeMap<usize, SymbolId> =
            phs.iter().map(|p| (p.token, p.candidates[rng.gen_range(0..p.candidates.len())])).collect();
        let mut total = ranker.pseudo_log_likelihood(&a)?;
        let mut trace = vec![total];
        let mut n = 0;
        while n < config.max_sweeps {
            n += 1;
            let mut changed = false;
            for &k in &order {
                let ph = &phs[k];
                let current = a[&ph.token];
                let choice = match config.update {
                    IcmUpdate::Joint => {
                        let mut choice = (current, total);
                        for &v in &ph.candidates {
                            if v == current {
                                continue;
                            }
                            let mut trial = a.clone();
                            trial.insert(ph.token, v);
                            let t = ranker.pseudo_log_likelihood(&trial)?;
                            if t > choice.1 {
                                choice = (v, t);
                            }
                        }
                        choice
                    }
                    IcmUpdate::Conditional => {
                        let r = ranker.rank(k, &a)?;
                        let top = r.top();
                        let keep = r.entries.iter().find(|e| e.0 == current).is_some_and(|e| e.2 >= r.entries[0].2);
                        let v = if keep { current } else { top };
                        let mut trial = a.clone();
                        trial.insert(ph.token, v);
                        (v, ranker.pseudo_log_likelihood(&trial)?)
                    }
                };
                if choice.0 != current {
                    changed = true;
                    a.insert(ph.token, choice.0);
                }
                total = choice.1;
                trace.push(total);
            }
            if !changed {
                break;
            }
        }
        traces.push(trace);
        sweeps.push(n);
        if best.as_ref().map_or(true, |b| total > b.log_prob) {
            best = Some(Assignment { values: a, log_prob: total });
        }
    }
    Ok(IcmOutcome { assignment: best.expect("at least one restart"), traces, sweeps })
}

#[cfg(test)]
mod tests;
