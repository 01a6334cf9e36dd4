//! Brute-force references for tests: execution-path enumeration for the
//! data-flow relations, exhaustive search over assignments, and central
//! finite differences.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::dataflow::{build_cfg, lexical_neighbors, occurrences_by_symbol, Cfg, UseEntry, UseGraph, UsePoint, UseSet};
use crate::minilang::{SymbolId, TypedProgram};

pub const DEFAULT_LOOP_BOUND: usize = 3;
pub const DEFAULT_PATH_CAP: usize = 200_000;
pub const MAP_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("more than {cap} execution paths")]
    PathExplosion { cap: usize },
    #[error("{count} assignments exceed the cap of {cap}")]
    TooLarge { count: u128, cap: usize },
}

/// All entry-to-exit node sequences of a CFG in which every loop runs
/// between 0 and `k` iterations. Entering a loop header from outside the loop
/// resets its iteration count.
#[derive(Debug, Clone)]
pub struct PathEnumeration {
    pub paths: Vec<Vec<usize>>,
    pub loop_bound: usize,
}

pub fn enumerate_paths(cfg: &Cfg, k: usize, cap: usize) -> Result<PathEnumeration, OracleError> {
    struct Walk<'a> {
        cfg: &'a Cfg,
        k: usize,
        cap: usize,
        counts: HashMap<usize, usize>,
        path: Vec<usize>,
        out: Vec<Vec<usize>>,
    }
    impl Walk<'_> {
        fn go(&mut self, node: usize) -> Result<(), OracleError> {
            self.path.push(node);
            if node == self.cfg.exit {
                if self.out.len() >= self.cap {
                    return Err(OracleError::PathExplosion { cap: self.cap });
                }
                self.out.push(self.path.clone());
            } else {
                for &s in &self.cfg.succs[node] {
                    let back = self.cfg.is_back_edge(node, s);
                    let saved = self.counts.get(&s).copied();
                    let next = if back { saved.unwrap_or(0) + 1 } else { 0 };
                    if next > self.k {
                        continue;
                    }
                    let is_header = back || self.cfg.back_edges.iter().any(|&(_, h)| h == s);
                    if is_header {
                        self.counts.insert(s, next);
                    }
                    self.go(s)?;
                    if is_header {
                        match saved {
                            Some(c) => self.counts.insert(s, c),
                            None => self.counts.remove(&s),
                        };
                    }
                }
            }
            self.path.pop();
            Ok(())
        }
    }
    let mut w = Walk { cfg, k, cap, counts: HashMap::new(), path: Vec::new(), out: Vec::new() };
    w.go(cfg.entry)?;
    Ok(PathEnumeration { paths: w.out, loop_bound: k })
}

/// Walks every path and records, for each tracked token, which occurrence of
/// `occurrences` precedes and follows it. Tracked tokens that are not in
/// `occurrences` are transparent.
fn neighbours_on_paths(
    cfg: &Cfg,
    paths: &PathEnumeration,
    occurrences: &[usize],
    tracked: &[usize],
) -> BTreeMap<usize, (UseSet, UseSet)> {
    let is_occ: std::collections::HashSet<usize> = occurrences.iter().copied().collect();
    let mut interesting: Vec<usize> = occurrences.iter().chain(tracked).copied().collect();
    interesting.sort_unstable();
    interesting.dedup();
    let mut by_node: HashMap<usize, Vec<usize>> = HashMap::new();
    for &t in &interesting {
        if let Some((n, _)) = cfg.locate(t) {
            by_node.entry(n).or_default().push(t);
        }
    }
    let mut out: BTreeMap<usize, (UseSet, UseSet)> = BTreeMap::new();
    for &t in tracked {
        if cfg.locate(t).is_some() {
            out.insert(t, Default::default());
        }
    }
    for path in &paths.paths {
        let seq: Vec<usize> = path.iter().flat_map(|n| by_node.get(n).into_iter().flatten().copied()).collect();
        let mut last = UsePoint::Eps;
        let mut waiting: Vec<usize> = Vec::new();
        for &t in &seq {
            if let Some(e) = out.get_mut(&t) {
                e.0.insert(last);
            }
            if is_occ.contains(&t) {
                for w in waiting.drain(..) {
                    out.get_mut(&w).unwrap().1.insert(UsePoint::Tok(t));
                }
                last = UsePoint::Tok(t);
            }
            if out.contains_key(&t) {
                waiting.push(t);
            }
        }
        for w in waiting {
            out.get_mut(&w).unwrap().1.insert(UsePoint::Eps);
        }
    }
    out
}

/// Uses of the occurrence set immediately before and after token `t` on the
/// enumerated paths, `t` itself excluded.
pub fn oracle_around(cfg: &Cfg, paths: &PathEnumeration, occurrences: &[usize], t: usize) -> (UseSet, UseSet) {
    let occ: Vec<usize> = occurrences.iter().copied().filter(|&x| x != t).collect();
    neighbours_on_paths(cfg, paths, &occ, &[t]).remove(&t).unwrap_or_default()
}

/// Data-flow relations for every occurrence of every symbol, by enumerating
/// paths with loops bounded to `k` iterations.
pub fn oracle_dataflow(program: &TypedProgram, k: usize) -> Result<UseGraph, OracleError> {
    oracle_dataflow_capped(program, k, DEFAULT_PATH_CAP)
}

pub fn oracle_dataflow_capped(program: &TypedProgram, k: usize, cap: usize) -> Result<UseGraph, OracleError> {
    let mut g = UseGraph::default();
    for f in 0..program.functions.len() {
        let cfg = build_cfg(program, f);
        let paths = enumerate_paths(&cfg, k, cap)?;
        for (v, occ) in occurrences_by_symbol(program, f) {
            let rel = neighbours_on_paths(&cfg, &paths, &occ, &occ);
            for &t in &occ {
                let (lex_prev, lex_next) = lexical_neighbors(&occ, t);
                // tokens in unreachable code appear on no path
                let (df_in, df_out) = rel.get(&t).cloned().unwrap_or_default();
                g.entries.insert((t, v), UseEntry { lex_prev, lex_next, df_in, df_out });
            }
        }
    }
    Ok(g)
}

/// Exhaustive maximization of `score` over the product of the candidate
/// lists. Ties keep the first assignment in lexicographic candidate order.
pub fn oracle_map<F>(candidates: &[Vec<SymbolId>], mut score: F) -> Result<(Vec<SymbolId>, f64), OracleError>
where
    F: FnMut(&[SymbolId]) -> f64,
{
    let count = candidates.iter().map(|c| c.len() as u128).product::<u128>();
    if count > MAP_CAP as u128 {
        return Err(OracleError::TooLarge { count, cap: MAP_CAP });
    }
    let mut best: Option<(Vec<SymbolId>, f64)> = None;
    if count == 0 {
        return Ok((Vec::new(), f64::NEG_INFINITY));
    }
    let mut idx = vec![0usize; candidates.len()];
    loop {
        let a: Vec<SymbolId> = idx.iter().zip(candidates).map(|(&i, c)| c[i]).collect();
        let s = score(&a);
        if best.as_ref().map_or(true, |(_, b)| s > *b) {
            best = Some((a, s));
        }
        let mut pos = candidates.len();
        loop {
            if pos == 0 {
                return Ok(best.unwrap());
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < candidates[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn finite_diff_grad<F: FnMut(&[f64]) -> f64>(f: F, x: &[f64], step: f64) -> Vec<f64> {
    let all: Vec<usize> = (0..x.len()).collect();
    finite_diff_coords(f, x, &all, step)
}

/// Central differences for the listed coordinates only.
pub fn finite_diff_coords<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], coords: &[usize], step: f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    coords
        .iter()
        .map(|&i| {
            buf[i] = x[i] + step;
            let hi = f(&buf);
            buf[i] = x[i] - step;
            let lo = f(&buf);
            buf[i] = x[i];
            (hi - lo) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::program_use_graph;
    use crate::minilang::fixtures::SUM_POSITIVE;

    fn lambda(p: &TypedProgram, k: usize) -> usize {
        p.tokens.iter().filter(|t| t.symbol.is_some()).nth(k).unwrap().index
    }

    #[test]
    fn straight_line_matches_lexical() {
        let p = TypedProgram::from_source("int f(int a) { int b = a; a = b + a; return a; }", "t").unwrap();
        let g = oracle_dataflow(&p, 3).unwrap();
        for ((t, _), e) in &g.entries {
            let want_in = e.lex_prev.map_or(UsePoint::Eps, UsePoint::Tok);
            let want_out = e.lex_next.map_or(UsePoint::Eps, UsePoint::Tok);
            assert_eq!(e.df_in, UseSet::from([want_in]), "token {t}");
            assert_eq!(e.df_out, UseSet::from([want_out]), "token {t}");
        }
    }

    #[test]
    fn figure_loop_sum_before_lambda8() {
        let p = TypedProgram::from_source(SUM_POSITIVE, "fig").unwrap();
        let cfg = build_cfg(&p, 0);
        let paths = enumerate_paths(&cfg, 2, DEFAULT_PATH_CAP).unwrap();
        let sum = p.symbol_by_name(0, "sum").unwrap();
        let (before, _) = oracle_around(&cfg, &paths, &p.occurrences(sum), lambda(&p, 8));
        assert_eq!(before, UseSet::from([UsePoint::Tok(lambda(&p, 2)), UsePoint::Tok(lambda(&p, 9))]));
    }

    #[test]
    fn figure_loop_agrees_with_fixed_point() {
        let p = TypedProgram::from_source(SUM_POSITIVE, "fig").unwrap();
        assert_eq!(oracle_dataflow(&p, 3).unwrap(), program_use_graph(&p));
    }

    #[test]
    fn branches_give_both_uses() {
        let p = TypedProgram::from_source("int g(bool b) { int x = 0; if (b) { x = 1; } else { x = 2; } return x; }", "t")
            .unwrap();
        let g = oracle_dataflow(&p, 3).unwrap();
        let x = p.symbol_by_name(0, "x").unwrap();
        let occ = p.occurrences(x);
        assert_eq!(g.get(occ[3], x).unwrap().df_in, UseSet::from([UsePoint::Tok(occ[1]), UsePoint::Tok(occ[2])]));
    }

    #[test]
    fn loop_bound_limits_paths() {
        let p = TypedProgram::from_source("void f(bool b) { while (b) { b = !b; } }", "t").unwrap();
        let cfg = build_cfg(&p, 0);
        for k in 0..5 {
            assert_eq!(enumerate_paths(&cfg, k, DEFAULT_PATH_CAP).unwrap().paths.len(), k + 1);
        }
        assert_eq!(enumerate_paths(&cfg, 10, 3).unwrap_err(), OracleError::PathExplosion { cap: 3 });
    }

    #[test]
    fn map_over_small_products() {
        let c = vec![vec![SymbolId(0)]];
        assert_eq!(oracle_map(&c, |_| 1.0).unwrap().0, vec![SymbolId(0)]);
        let c = vec![vec![SymbolId(0), SymbolId(1)], vec![SymbolId(2), SymbolId(3)]];
        let (a, s) = oracle_map(&c, |a| (a[0].0 * 10 + a[1].0) as f64 * if a[1].0 == 3 { -1.0 } else { 1.0 }).unwrap();
        assert_eq!(a, vec![SymbolId(1), SymbolId(2)]);
        assert_eq!(s, 12.0);
        let big = vec![(0..8).map(SymbolId).collect::<Vec<_>>(); 5];
        assert!(matches!(oracle_map(&big, |_| 0.0), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn finite_differences() {
        let g = finite_diff_grad(|w| w[0] * w[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
        let g = finite_diff_grad(|_| 4.0, &[1.0, 2.0], 1e-5);
        assert_eq!(g, vec![0.0, 0.0]);
    }
}
