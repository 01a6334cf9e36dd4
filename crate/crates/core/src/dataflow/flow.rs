//! May-analysis of the previous and next uses of a variable along execution paths.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::cfg::Cfg;

/// A member of a use set: an occurrence token, or ε for "no prior (next) use
/// on some path".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UsePoint {
    Eps,
    Tok(usize),
}

impl UsePoint {
    pub fn token(self) -> Option<usize> {
        match self {
            UsePoint::Eps => None,
            UsePoint::Tok(t) => Some(t),
        }
    }
}

impl fmt::Display for UsePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UsePoint::Eps => f.write_str("eps"),
            UsePoint::Tok(t) => write!(f, "{t}"),
        }
    }
}

pub type UseSet = BTreeSet<UsePoint>;

/// Data-flow neighbours of every occurrence of one variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarFlow {
    pub df_in: BTreeMap<usize, UseSet>,
    pub df_out: BTreeMap<usize, UseSet>,
    /// Per node: occurrences inside it, the set flowing in, and the set
    /// flowing back from its successors.
    nodes: Vec<(Vec<usize>, UseSet, UseSet)>,
    locations: BTreeMap<usize, usize>,
}

impl VarFlow {
    pub fn prev(&self, t: usize) -> Option<&UseSet> {
        self.df_in.get(&t)
    }

    pub fn next(&self, t: usize) -> Option<&UseSet> {
        self.df_out.get(&t)
    }

    /// Uses of the variable immediately before and after the position of
    /// token `t`, treating `t` itself as transparent (it is never reported,
    /// even if it is an occurrence). `None` when `t` is not a located token
    /// of the CFG.
    pub fn around(&self, cfg: &Cfg, t: usize) -> Option<(UseSet, UseSet)> {
        let (node, _) = cfg.locate(t)?;
        let (toks, inn, after) = &self.nodes[node];
        let before = match toks.iter().rev().find(|&&x| x < t) {
            Some(&x) => UseSet::from([UsePoint::Tok(x)]),
            None => inn.clone(),
        };
        let next = match toks.iter().find(|&&x| x > t) {
            Some(&x) => UseSet::from([UsePoint::Tok(x)]),
            None => after.clone(),
        };
        Some((before, next))
    }

    /// Whether `t` is an occurrence this flow was computed for.
    pub fn is_occurrence(&self, t: usize) -> bool {
        self.locations.contains_key(&t)
    }
}

/// Runs the forward and backward analyses for a variable whose occurrences
/// are `occurrences` (tokens of the CFG's function). An occurrence replaces
/// the incoming set with itself; sets join by union; ε is seeded at entry
/// (forward) and exit (backward). Occurrences outside the CFG are ignored.
pub fn var_flow(cfg: &Cfg, occurrences: &[usize]) -> VarFlow {
    let n = cfg.len();
    let mut per_node: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut located: Vec<(usize, usize, usize)> = Vec::new();
    for &t in occurrences {
        if let Some((node, pos)) = cfg.locate(t) {
            located.push((node, pos, t));
        }
    }
    located.sort_unstable();
    located.dedup();
    for &(node, _, t) in &located {
        per_node[node].push(t);
    }

    // forward: in_sets[n] = union of predecessors' out sets
    let mut in_sets: Vec<UseSet> = vec![UseSet::new(); n];
    let mut out_sets: Vec<UseSet> = vec![UseSet::new(); n];
    let mut changed = true;
    while changed {
        changed = false;
        for node in 0..n {
            let mut inn = UseSet::new();
            if node == cfg.entry {
                inn.insert(UsePoint::Eps);
            }
            for &p in &cfg.preds[node] {
                inn.extend(out_sets[p].iter().copied());
            }
            let out = match per_node[node].last() {
                Some(&t) => UseSet::from([UsePoint::Tok(t)]),
                None => inn.clone(),
            };
            if inn != in_sets[node] || out != out_sets[node] {
                in_sets[node] = inn;
                out_sets[node] = out;
                changed = true;
            }
        }
    }

    // backward: after_sets[n] = union of successors' before sets
    let mut before: Vec<UseSet> = vec![UseSet::new(); n];
    let mut after: Vec<UseSet> = vec![UseSet::new(); n];
    changed = true;
    while changed {
        changed = false;
        for node in (0..n).rev() {
            let mut aft = UseSet::new();
            if node == cfg.exit {
                aft.insert(UsePoint::Eps);
            }
            for &s in &cfg.succs[node] {
                aft.extend(before[s].iter().copied());
            }
            let bef = match per_node[node].first() {
                Some(&t) => UseSet::from([UsePoint::Tok(t)]),
                None => aft.clone(),
            };
            if aft != after[node] || bef != before[node] {
                after[node] = aft;
                before[node] = bef;
                changed = true;
            }
        }
    }

    let mut flow = VarFlow::default();
    for (node, toks) in per_node.iter().enumerate() {
        for (i, &t) in toks.iter().enumerate() {
            let din = if i > 0 { UseSet::from([UsePoint::Tok(toks[i - 1])]) } else { in_sets[node].clone() };
            let dout = if i + 1 < toks.len() { UseSet::from([UsePoint::Tok(toks[i + 1])]) } else { after[node].clone() };
            flow.df_in.insert(t, din);
            flow.df_out.insert(t, dout);
            flow.locations.insert(t, node);
        }
    }
    flow.nodes = per_node.into_iter().zip(in_sets).zip(after).map(|((o, i), a)| (o, i, a)).collect();
    flow
}

/// Previous and next entries of `t` in the sorted occurrence list, excluding `t`.
pub fn lexical_neighbors(sorted_occurrences: &[usize], t: usize) -> (Option<usize>, Option<usize>) {
    let lo = sorted_occurrences.partition_point(|&x| x < t);
    let hi = sorted_occurrences.partition_point(|&x| x <= t);
    let prev = lo.checked_sub(1).map(|i| sorted_occurrences[i]);
    let next = sorted_occurrences.get(hi).copied();
    (prev, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::build_cfg;
    use crate::minilang::TypedProgram;

    fn flow_of(src: &str, name: &str) -> (TypedProgram, VarFlow) {
        let p = TypedProgram::from_source(src, "t").unwrap();
        let c = build_cfg(&p, 0);
        let v = p.symbol_by_name(0, name).unwrap();
        let f = var_flow(&c, &p.occurrences(v));
        (p, f)
    }

    #[test]
    fn straight_line_use_sees_definition() {
        let (p, f) = flow_of("void g() { int x = 1; int y = x; }", "x");
        let occ = p.occurrences(p.symbol_by_name(0, "x").unwrap());
        assert_eq!(f.df_in[&occ[1]], UseSet::from([UsePoint::Tok(occ[0])]));
        assert_eq!(f.df_in[&occ[0]], UseSet::from([UsePoint::Eps]));
        assert_eq!(f.df_out[&occ[1]], UseSet::from([UsePoint::Eps]));
    }

    #[test]
    fn branches_join() {
        let (p, f) = flow_of("int g(bool b) { int x = 0; if (b) { x = 1; } else { x = 2; } return x; }", "x");
        let occ = p.occurrences(p.symbol_by_name(0, "x").unwrap());
        assert_eq!(f.df_in[&occ[3]], UseSet::from([UsePoint::Tok(occ[1]), UsePoint::Tok(occ[2])]));
        assert_eq!(f.df_out[&occ[0]], UseSet::from([UsePoint::Tok(occ[1]), UsePoint::Tok(occ[2])]));
    }

    #[test]
    fn lexical_neighbors_skip_self() {
        let occ = [3, 7, 9];
        assert_eq!(lexical_neighbors(&occ, 7), (Some(3), Some(9)));
        assert_eq!(lexical_neighbors(&occ, 3), (None, Some(7)));
        assert_eq!(lexical_neighbors(&occ, 9), (Some(7), None));
        assert_eq!(lexical_neighbors(&occ, 8), (Some(7), Some(9)));
    }
}
