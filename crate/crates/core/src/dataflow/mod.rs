//! Lexical and data-flow usage relations between variable occurrences.
//!
//! For a variable `v` and a token `t`, the lexical relations give the previous
//! and next occurrence of `v` in token order. The data-flow relations give the
//! sets of occurrences that may be the most recent (`df_in`) or the next
//! (`df_out`) use of `v` along some execution path through `t`; reads and
//! writes both count as uses, and ε marks paths with no such use.

mod cfg;
mod flow;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use cfg::{build_cfg, Cfg, CfgNode, NodeKind};
pub use flow::{lexical_neighbors, var_flow, UsePoint, UseSet, VarFlow};

use crate::minilang::{SymbolId, TypedProgram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseEntry {
    pub lex_prev: Option<usize>,
    pub lex_next: Option<usize>,
    pub df_in: UseSet,
    pub df_out: UseSet,
}

/// Relations for every `(occurrence token, symbol)` pair of a program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UseGraph {
    pub entries: BTreeMap<(usize, SymbolId), UseEntry>,
}

impl UseGraph {
    pub fn get(&self, t: usize, v: SymbolId) -> Option<&UseEntry> {
        self.entries.get(&(t, v))
    }

    /// Projection onto one symbol, in the form the context-tree builder uses.
    pub fn var_flow(&self, v: SymbolId) -> VarFlow {
        let mut f = VarFlow::default();
        for ((t, s), e) in &self.entries {
            if *s == v {
                f.df_in.insert(*t, e.df_in.clone());
                f.df_out.insert(*t, e.df_out.clone());
            }
        }
        f
    }
}

/// Occurrences of each symbol within one function, as bound in `program`.
pub fn occurrences_by_symbol(program: &TypedProgram, function: usize) -> BTreeMap<SymbolId, Vec<usize>> {
    let span = program.functions[function].span;
    let mut map: BTreeMap<SymbolId, Vec<usize>> = BTreeMap::new();
    for s in program.symbols.iter().filter(|s| s.function == function) {
        map.insert(s.id, Vec::new());
    }
    for t in &program.tokens[span.lo..span.hi] {
        if let Some(s) = t.symbol {
            map.entry(s).or_default().push(t.index);
        }
    }
    map
}

/// Relations for all symbols of the CFG's function, given explicit occurrence lists.
pub fn use_graph_for(cfg: &Cfg, occurrences: &BTreeMap<SymbolId, Vec<usize>>) -> UseGraph {
    let mut g = UseGraph::default();
    for (&v, occ) in occurrences {
        let flow = var_flow(cfg, occ);
        for &t in occ {
            let (lex_prev, lex_next) = lexical_neighbors(occ, t);
            g.entries.insert(
                (t, v),
                UseEntry {
                    lex_prev,
                    lex_next,
                    df_in: flow.df_in.get(&t).cloned().unwrap_or_default(),
                    df_out: flow.df_out.get(&t).cloned().unwrap_or_default(),
                },
            );
        }
    }
    g
}

/// Fixed-point relations for the function of `cfg` using the program's own bindings.
pub fn dataflow_uses(program: &TypedProgram, cfg: &Cfg) -> UseGraph {
    use_graph_for(cfg, &occurrences_by_symbol(program, cfg.function))
}

/// Relations for every function of the program.
pub fn program_use_graph(program: &TypedProgram) -> UseGraph {
    let mut g = UseGraph::default();
    for f in 0..program.functions.len() {
        let cfg = build_cfg(program, f);
        g.entries.extend(dataflow_uses(program, &cfg).entries);
    }
    g
}

/// Previous and next occurrence of `v` around token `t` (which need not be an
/// occurrence of `v`).
pub fn lexical_chain(program: &TypedProgram, t: usize, v: SymbolId) -> (Option<usize>, Option<usize>) {
    lexical_neighbors(&program.occurrences(v), t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Prev,
    Next,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Eps,
    Use { token: usize, children: Vec<TreeNode> },
}

/// Bounded unrolling of the data-flow relation below a token; `t` itself is
/// not a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTree {
    pub children: Vec<TreeNode>,
    pub depth: usize,
}

impl ContextTree {
    /// Number of levels actually present.
    pub fn height(&self) -> usize {
        fn h(n: &TreeNode) -> usize {
            match n {
                TreeNode::Eps => 1,
                TreeNode::Use { children, .. } => 1 + children.iter().map(h).max().unwrap_or(0),
            }
        }
        self.children.iter().map(h).max().unwrap_or(0)
    }

    pub fn tokens(&self) -> Vec<usize> {
        fn walk(n: &TreeNode, out: &mut Vec<usize>) {
            if let TreeNode::Use { token, children } = n {
                out.push(*token);
                for c in children {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        for c in &self.children {
            walk(c, &mut out);
        }
        out
    }
}

/// Materializes the context tree of `t`. Trees over loops grow exponentially
/// with depth; the models evaluate the same recursion with memoization instead.
pub fn context_tree(flow: &VarFlow, t: usize, direction: Direction, depth: usize) -> ContextTree {
    fn level(flow: &VarFlow, t: usize, dir: Direction, d: usize) -> Vec<TreeNode> {
        if d == 0 {
            return Vec::new();
        }
        let set = match dir {
            Direction::Prev => flow.df_in.get(&t),
            Direction::Next => flow.df_out.get(&t),
        };
        set.into_iter()
            .flatten()
            .map(|p| match p {
                UsePoint::Eps => TreeNode::Eps,
                UsePoint::Tok(u) => TreeNode::Use { token: *u, children: level(flow, *u, dir, d - 1) },
            })
            .collect()
    }
    ContextTree { children: level(flow, t, direction, depth), depth }
}

fn fmt_set(s: &UseSet) -> String {
    if s.is_empty() {
        return "-".into();
    }
    s.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

/// Tab-separated dump: `token symbol name lex_prev lex_next df_in df_out`,
/// one line per `(occurrence, symbol)`, ⊥ written as `-` and ε as `eps`.
pub fn dump_dataflow(program: &TypedProgram, graph: &UseGraph) -> String {
    let mut out = String::from("#token\tsymbol\tname\tlex_prev\tlex_next\tdf_in\tdf_out\n");
    for ((t, v), e) in &graph.entries {
        let opt = |o: Option<usize>| o.map_or("-".to_string(), |x| x.to_string());
        let _ = writeln!(
            out,
            "{t}\t{}\t{}\t{}\t{}\t{}\t{}",
            v.0,
            program.symbol(*v).name,
            opt(e.lex_prev),
            opt(e.lex_next),
            fmt_set(&e.df_in),
            fmt_set(&e.df_out)
        );
    }
    out
}
