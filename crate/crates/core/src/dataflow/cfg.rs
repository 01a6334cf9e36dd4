//! Statement-level control-flow graphs.

use std::collections::{BTreeSet, HashMap};

use crate::minilang::ast::*;
use crate::minilang::TypedProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Entry,
    Exit,
    Simple,
    Cond,
    LoopCond,
    Return,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgNode {
    pub kind: NodeKind,
    /// Token interval of the statement or expression this node evaluates.
    pub span: Span,
    /// Variable-position tokens evaluated by this node, ascending.
    pub occurrences: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub function: usize,
    pub nodes: Vec<CfgNode>,
    pub succs: Vec<Vec<usize>>,
    pub preds: Vec<Vec<usize>>,
    /// Loop-closing edges `(from, header)`.
    pub back_edges: BTreeSet<(usize, usize)>,
    pub entry: usize,
    pub exit: usize,
    token_node: HashMap<usize, (usize, usize)>,
}

impl Cfg {
    /// Node holding occurrence token `t` and its position within that node.
    pub fn locate(&self, t: usize) -> Option<(usize, usize)> {
        self.token_node.get(&t).copied()
    }

    pub fn is_back_edge(&self, from: usize, to: usize) -> bool {
        self.back_edges.contains(&(from, to))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Every variable-position token in the function, ascending.
    pub fn all_occurrences(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.token_node.keys().copied().collect();
        v.sort_unstable();
        v
    }
}

struct Builder {
    nodes: Vec<CfgNode>,
    edges: BTreeSet<(usize, usize)>,
    back: BTreeSet<(usize, usize)>,
    exit: usize,
}

impl Builder {
    fn node(&mut self, kind: NodeKind, span: Span, mut occurrences: Vec<usize>) -> usize {
        occurrences.sort_unstable();
        self.nodes.push(CfgNode { kind, span, occurrences });
        self.nodes.len() - 1
    }

    fn connect(&mut self, preds: &[usize], to: usize) {
        for &p in preds {
            self.edges.insert((p, to));
        }
    }

    fn connect_back(&mut self, preds: &[usize], header: usize) {
        for &p in preds {
            self.edges.insert((p, header));
            self.back.insert((p, header));
        }
    }

    /// Lowers `s` given the nodes that flow into it; returns the nodes that
    /// flow out to whatever follows.
    fn stmt(&mut self, s: &Stmt, preds: Vec<usize>) -> Vec<usize> {
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::IncDec { .. } | StmtKind::Expr(_) => {
                let n = self.node(NodeKind::Simple, s.span, simple_occurrences(s));
                self.connect(&preds, n);
                vec![n]
            }
            StmtKind::Return(e) => {
                let mut occ = Vec::new();
                if let Some(e) = e {
                    visit_vars(e, &mut |_, t| occ.push(t));
                }
                let n = self.node(NodeKind::Return, s.span, occ);
                self.connect(&preds, n);
                let exit = self.exit;
                self.connect(&[n], exit);
                Vec::new()
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.node(NodeKind::Cond, cond.span, expr_occurrences(cond));
                self.connect(&preds, c);
                let mut out = self.stmt(then_branch, vec![c]);
                match else_branch {
                    Some(e) => out.extend(self.stmt(e, vec![c])),
                    None => out.push(c),
                }
                out
            }
            StmtKind::While { cond, body } => {
                let c = self.node(NodeKind::LoopCond, cond.span, expr_occurrences(cond));
                self.connect(&preds, c);
                let body_out = self.stmt(body, vec![c]);
                self.connect_back(&body_out, c);
                vec![c]
            }
            StmtKind::For { init, cond, step, body } => {
                let mut frontier = preds;
                if let Some(i) = init {
                    frontier = self.stmt(i, frontier);
                }
                let c = self.node(NodeKind::LoopCond, cond.span, expr_occurrences(cond));
                self.connect(&frontier, c);
                let body_out = self.stmt(body, vec![c]);
                match step {
                    Some(st) => {
                        let n = self.node(NodeKind::Simple, st.span, simple_occurrences(st));
                        self.connect(&body_out, n);
                        self.connect_back(&[n], c);
                    }
                    None => self.connect_back(&body_out, c),
                }
                vec![c]
            }
            StmtKind::Block(b) => self.block(b, preds),
        }
    }

    fn block(&mut self, b: &Block, preds: Vec<usize>) -> Vec<usize> {
        if b.stmts.is_empty() {
            let n = self.node(NodeKind::Empty, b.span, Vec::new());
            self.connect(&preds, n);
            return vec![n];
        }
        let mut frontier = preds;
        for s in &b.stmts {
            frontier = self.stmt(s, frontier);
        }
        frontier
    }
}

fn expr_occurrences(e: &Expr) -> Vec<usize> {
    let mut v = Vec::new();
    visit_vars(e, &mut |_, t| v.push(t));
    v
}

fn simple_occurrences(s: &Stmt) -> Vec<usize> {
    let mut v = Vec::new();
    match &s.kind {
        StmtKind::Decl { token, init, .. } => {
            v.push(*token);
            if let Some(e) = init {
                visit_vars(e, &mut |_, t| v.push(t));
            }
        }
        StmtKind::Assign { target, value, .. } => {
            visit_vars(target, &mut |_, t| v.push(t));
            visit_vars(value, &mut |_, t| v.push(t));
        }
        StmtKind::IncDec { target, .. } => visit_vars(target, &mut |_, t| v.push(t)),
        StmtKind::Expr(e) => visit_vars(e, &mut |_, t| v.push(t)),
        _ => {}
    }
    v
}

/// Builds the intra-procedural CFG of the `function`-th function. Conditions
/// of `if`/`while`/`for` get their own nodes; `&&` and `||` do not branch.
/// Nodes unreachable from the entry are dropped.
pub fn build_cfg(program: &TypedProgram, function: usize) -> Cfg {
    let f = program.ast.functions().nth(function).expect("function index in range");
    let mut b = Builder { nodes: Vec::new(), edges: BTreeSet::new(), back: BTreeSet::new(), exit: 0 };
    let entry = b.node(NodeKind::Entry, Span::new(f.span.lo, f.body.span.lo), f.params.iter().map(|p| p.token).collect());
    b.exit = b.node(NodeKind::Exit, Span::new(f.body.span.hi, f.body.span.hi), Vec::new());
    let out = b.block(&f.body, vec![entry]);
    let exit = b.exit;
    b.connect(&out, exit);

    // prune unreachable nodes and renumber
    let n = b.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for &(x, y) in &b.edges {
        adj[x].push(y);
    }
    let mut reach = vec![false; n];
    let mut stack = vec![entry];
    while let Some(x) = stack.pop() {
        if !std::mem::replace(&mut reach[x], true) {
            stack.extend(adj[x].iter().copied());
        }
    }
    let mut remap = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for (i, node) in b.nodes.into_iter().enumerate() {
        if reach[i] {
            remap[i] = nodes.len();
            nodes.push(node);
        }
    }
    let mut succs = vec![Vec::new(); nodes.len()];
    let mut preds = vec![Vec::new(); nodes.len()];
    for &(x, y) in &b.edges {
        if reach[x] && reach[y] {
            succs[remap[x]].push(remap[y]);
            preds[remap[y]].push(remap[x]);
        }
    }
    let back_edges = b.back.iter().filter(|(x, y)| reach[*x] && reach[*y]).map(|&(x, y)| (remap[x], remap[y])).collect();
    let mut token_node = HashMap::new();
    for (i, node) in nodes.iter().enumerate() {
        for (pos, &t) in node.occurrences.iter().enumerate() {
            token_node.insert(t, (i, pos));
        }
    }
    Cfg { function, nodes, succs, preds, back_edges, entry: remap[entry], exit: remap[exit], token_node }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::fixtures::SUM_POSITIVE;

    fn cfg_of(src: &str) -> (TypedProgram, Cfg) {
        let p = TypedProgram::from_source(src, "t").unwrap();
        let c = build_cfg(&p, 0);
        (p, c)
    }

    fn texts(p: &TypedProgram, n: &CfgNode) -> String {
        p.tokens[n.span.lo..n.span.hi].iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn straight_line_is_a_chain() {
        let (_, c) = cfg_of("void f() { int a = 1; int b = a; a = b; }");
        assert_eq!(c.len(), 5);
        let mut cur = c.entry;
        let mut seen = 0;
        while cur != c.exit {
            assert_eq!(c.succs[cur].len(), 1);
            cur = c.succs[cur][0];
            seen += 1;
        }
        assert_eq!(seen, 4);
        assert!(c.back_edges.is_empty());
    }

    #[test]
    fn sum_positive_shape() {
        let (p, c) = cfg_of(SUM_POSITIVE);
        let find = |s: &str| c.nodes.iter().position(|n| texts(&p, n) == s).unwrap_or_else(|| panic!("{s}"));
        let decl = find("int sum = 0 ;");
        let init = find("int i = 0");
        let cond = find("i < lim");
        let ifc = find("arr [ i ] > 0");
        let then = find("sum += arr [ i ] ;");
        let step = find("i ++");
        let ret = find("return sum ;");
        assert_eq!(c.len(), 9);
        let mut edges: Vec<(usize, usize)> =
            c.succs.iter().enumerate().flat_map(|(x, ys)| ys.iter().map(move |&y| (x, y))).collect();
        edges.sort();
        let mut want = vec![
            (c.entry, decl),
            (decl, init),
            (init, cond),
            (cond, ifc),
            (cond, ret),
            (ifc, then),
            (ifc, step),
            (then, step),
            (step, cond),
            (ret, c.exit),
        ];
        want.sort();
        assert_eq!(edges, want);
        assert_eq!(c.back_edges, BTreeSet::from([(step, cond)]));
    }

    #[test]
    fn empty_while_body_loops_through_empty_node() {
        let (_, c) = cfg_of("void f(bool b) { while (b) {} }");
        let cond = c.nodes.iter().position(|n| n.kind == NodeKind::LoopCond).unwrap();
        let empty = c.nodes.iter().position(|n| n.kind == NodeKind::Empty).unwrap();
        assert!(c.succs[cond].contains(&empty));
        assert_eq!(c.succs[empty], vec![cond]);
        assert!(c.is_back_edge(empty, cond));
    }

    #[test]
    fn code_after_return_is_pruned() {
        let (_, c) = cfg_of("int f(int a) { return a; a = 2; }");
        assert!(c.nodes.iter().all(|n| n.kind != NodeKind::Simple));
        assert!(c.locate(c.nodes[c.entry].occurrences[0]).is_some());
    }
}
