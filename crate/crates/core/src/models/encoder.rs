use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::vocab::{PAD_ROW, PLACEHOLDER_ROW, UNK_TYPE_ROW};
use super::{ContextParams, Model, ModelError, Variant};
use crate::dataflow::{build_cfg, var_flow, Cfg, Direction, UsePoint, UseSet, VarFlow};
use crate::minilang::SymbolId;
use crate::nn::{GruCell, NodeId, Tape};
use crate::taskgen::TaskInstance;

/// Assignment-independent analysis of one instance: its CFG, the
/// non-placeholder occurrences of each symbol, and the placeholder set.
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    pub instance: &'a TaskInstance,
    pub cfg: Cfg,
    static_occ: BTreeMap<SymbolId, Vec<usize>>,
    holes: BTreeSet<usize>,
}

impl<'a> Scene<'a> {
    pub fn new(instance: &'a TaskInstance) -> Self {
        Scene {
            instance,
            cfg: build_cfg(&instance.program, instance.function),
            static_occ: instance.static_occurrences(),
            holes: instance.placeholders.iter().map(|p| p.token).collect(),
        }
    }

    pub fn is_placeholder(&self, t: usize) -> bool {
        self.holes.contains(&t)
    }

    /// Occurrences of `v` when placeholders hold `assignment`, excluding `t`.
    pub fn occurrences(&self, v: SymbolId, assignment: &BTreeMap<usize, SymbolId>, t: usize) -> Vec<usize> {
        let mut occ: Vec<usize> = self.static_occ.get(&v).cloned().unwrap_or_default();
        occ.extend(assignment.iter().filter(|&(&p, &s)| s == v && p != t && self.holes.contains(&p)).map(|(&p, _)| p));
        occ.retain(|&x| x != t);
        occ.sort_unstable();
        occ.dedup();
        occ
    }

    /// The `C` tokens on each side of `t`, as embedding sources.
    pub fn window(&self, t: usize, c: usize) -> Window {
        let toks = &self.instance.program.tokens;
        let slot = |k: Option<usize>| match k.filter(|&k| k < toks.len()) {
            None => WindowSlot::Pad,
            Some(k) if self.is_placeholder(k) => WindowSlot::Placeholder,
            Some(k) => match toks[k].symbol {
                Some(s) => WindowSlot::Var(s),
                None => WindowSlot::Lexeme(toks[k].text.clone()),
            },
        };
        Window {
            prev: (1..=c).rev().map(|d| slot(t.checked_sub(d))).collect(),
            next: (1..=c).map(|d| slot(Some(t + d))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowSlot {
    Pad,
    Placeholder,
    Lexeme(String),
    Var(SymbolId),
}

/// Context window in token order: `prev` ends next to the centre token,
/// `next` starts next to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub prev: Vec<WindowSlot>,
    pub next: Vec<WindowSlot>,
}

/// How type embeddings are formed: the full supertype closure, or a random
/// non-empty subset of it drawn once per symbol.
pub enum TypeMode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

type TreeKey = (usize, Direction, usize, usize);

/// Builds representations for one scene at a time on a shared tape, caching
/// type embeddings, contexts, flows and tree states.
pub struct Encoder<'a> {
    model: &'a Model,
    tape: Tape<'a>,
    types: TypeMode<'a>,
    scene: Option<&'a Scene<'a>>,
    type_cache: HashMap<SymbolId, NodeId>,
    ctx_cache: HashMap<usize, NodeId>,
    flows: Vec<VarFlow>,
    flow_index: HashMap<(SymbolId, Vec<usize>), usize>,
    tree_memo: HashMap<TreeKey, NodeId>,
    eps_memo: HashMap<(SymbolId, Direction), NodeId>,
    usage_memo: HashMap<(usize, SymbolId, Vec<usize>), NodeId>,
    zero: Option<NodeId>,
}

impl<'a> Encoder<'a> {
    pub fn new(model: &'a Model, types: TypeMode<'a>) -> Self {
        Encoder {
            model,
            tape: Tape::new(&model.params),
            types,
            scene: None,
            type_cache: HashMap::new(),
            ctx_cache: HashMap::new(),
            flows: Vec::new(),
            flow_index: HashMap::new(),
            tree_memo: HashMap::new(),
            eps_memo: HashMap::new(),
            usage_memo: HashMap::new(),
            zero: None,
        }
    }

    /// Switches to `scene`, dropping every per-scene cache (nodes already on
    /// the tape stay valid). In training mode, types are re-drawn.
    pub fn set_scene(&mut self, scene: &'a Scene<'a>) {
        self.scene = Some(scene);
        self.type_cache.clear();
        self.ctx_cache.clear();
        self.flows.clear();
        self.flow_index.clear();
        self.tree_memo.clear();
        self.eps_memo.clear();
        self.usage_memo.clear();
    }

    pub fn tape(&mut self) -> &mut Tape<'a> {
        &mut self.tape
    }

    pub fn value(&self, n: NodeId) -> &[f64] {
        self.tape.value(n)
    }

    pub fn model(&self) -> &'a Model {
        self.model
    }

    fn scene(&self) -> &'a Scene<'a> {
        self.scene.expect("encoder used before set_scene")
    }

    fn zero(&mut self) -> NodeId {
        match self.zero {
            Some(z) => z,
            None => {
                let z = self.tape.zeros(self.model.config.hidden);
                self.zero = Some(z);
                z
            }
        }
    }

    /// Type rows of `v`'s supertype closure, ascending and deduplicated.
    pub fn closure_rows(&self, v: SymbolId) -> Vec<usize> {
        if !self.model.config.use_types {
            return vec![UNK_TYPE_ROW];
        }
        let p = &self.scene().instance.program;
        let lat = &p.lattice;
        let rows: BTreeSet<usize> = lat
            .supertype_closure(p.symbol(v).declared_type)
            .into_iter()
            .map(|ty| self.model.vocab.type_row(lat.name(ty)))
            .collect();
        rows.into_iter().collect()
    }

    /// Elementwise maximum of the embeddings of `v`'s closure (or, in
    /// training, of a random non-empty subset of it).
    pub fn type_embed(&mut self, v: SymbolId) -> Result<NodeId, ModelError> {
        if let Some(&n) = self.type_cache.get(&v) {
            return Ok(n);
        }
        let mut rows = self.closure_rows(v);
        if let TypeMode::Train(rng) = &mut self.types {
            if rows.len() > 1 {
                loop {
                    let keep: Vec<usize> = rows.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
                    if !keep.is_empty() {
                        rows = keep;
                        break;
                    }
                }
            }
        }
        let tab = self.model.ids.types;
        let nodes: Vec<NodeId> = rows.iter().map(|&r| self.tape.row(tab, r)).collect();
        let n = if nodes.len() == 1 { nodes[0] } else { self.tape.max(&nodes)? };
        self.type_cache.insert(v, n);
        Ok(n)
    }

    fn slot(&mut self, s: &WindowSlot) -> Result<NodeId, ModelError> {
        let tab = self.model.ids.tokens;
        Ok(match s {
            WindowSlot::Pad => self.tape.row(tab, PAD_ROW),
            WindowSlot::Placeholder => self.tape.row(tab, PLACEHOLDER_ROW),
            WindowSlot::Lexeme(text) => {
                let r = self.model.vocab.lexeme_row(text);
                self.tape.row(tab, r)
            }
            WindowSlot::Var(v) => self.type_embed(*v)?,
        })
    }

    /// `W_C [f^p(prev), f^n(next)]`.
    pub fn context_window(&mut self, w: &Window) -> Result<NodeId, ModelError> {
        let prev = w.prev.iter().map(|s| self.slot(s)).collect::<Result<Vec<_>, _>>()?;
        let next = w.next.iter().map(|s| self.slot(s)).collect::<Result<Vec<_>, _>>()?;
        let (fp, fnx) = match &self.model.ids.context {
            ContextParams::LogBilinear { prev: a, next: b } => {
                let tp: Vec<_> = a.iter().copied().zip(prev.iter().copied()).collect();
                let tn: Vec<_> = b.iter().copied().zip(next.iter().copied()).collect();
                (self.tape.affine(&tp, None)?, self.tape.affine(&tn, None)?)
            }
            ContextParams::Gru { prev: gp, next: gn } => {
                let (gp, gn) = (*gp, *gn);
                let h0 = self.zero();
                let fp = gp.run(&mut self.tape, h0, &prev)?;
                let rev: Vec<NodeId> = next.iter().rev().copied().collect();
                let fnx = gn.run(&mut self.tape, h0, &rev)?;
                (fp, fnx)
            }
        };
        let cat = self.tape.concat(&[fp, fnx]);
        Ok(self.tape.matvec(self.model.ids.w_c, cat)?)
    }

    /// `c(t)` for a token of the current scene.
    pub fn context(&mut self, t: usize) -> Result<NodeId, ModelError> {
        if let Some(&n) = self.ctx_cache.get(&t) {
            return Ok(n);
        }
        let w = self.scene().window(t, self.model.config.window);
        let n = self.context_window(&w)?;
        self.ctx_cache.insert(t, n);
        Ok(n)
    }

    /// `u(t, v)` for the model's variant, given `v`'s occurrences (without `t`).
    pub fn usage(&mut self, t: usize, v: SymbolId, occ: &[usize]) -> Result<NodeId, ModelError> {
        self.usage_as(self.model.config.variant, t, v, occ)
    }

    /// `u(t, v)` with `v`'s occurrences taken from `assignment`.
    pub fn usage_at(&mut self, t: usize, v: SymbolId, assignment: &BTreeMap<usize, SymbolId>) -> Result<NodeId, ModelError> {
        let occ = self.scene().occurrences(v, assignment, t);
        self.usage(t, v, &occ)
    }

    pub fn usage_as(&mut self, variant: Variant, t: usize, v: SymbolId, occ: &[usize]) -> Result<NodeId, ModelError> {
        let key = (t, v, occ.to_vec());
        if let Some(&n) = self.usage_memo.get(&key) {
            return Ok(n);
        }
        let n = match variant {
            Variant::Loc => self.type_embed(v)?,
            Variant::AvgG => self.avg_g(t, v, occ)?,
            Variant::GruG => self.gru_g(t, v, occ)?,
            Variant::GruD => self.gru_d(t, v, occ)?,
            Variant::Hybrid => {
                let a = self.avg_g(t, v, occ)?;
                let d = self.gru_d(t, v, occ)?;
                let cat = self.tape.concat(&[a, d]);
                let w_h = self.model.ids.w_h.ok_or_else(|| ModelError::Config("model has no hybrid parameters".into()))?;
                self.tape.matvec(w_h, cat)?
            }
        };
        self.usage_memo.insert(key, n);
        Ok(n)
    }

    /// Up to `L` occurrences before `t` (oldest first) and after `t`
    /// (nearest first).
    pub fn lexical_chains(&self, t: usize, occ: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let l = self.model.config.lex_len;
        let split = occ.partition_point(|&x| x < t);
        let before = &occ[..split];
        let prev = before[before.len().saturating_sub(l)..].to_vec();
        let next = occ[split..].iter().copied().filter(|&x| x != t).take(l).collect();
        (prev, next)
    }

    fn avg_g(&mut self, t: usize, v: SymbolId, occ: &[usize]) -> Result<NodeId, ModelError> {
        let tau = self.type_embed(v)?;
        let (p, n) = self.lexical_chains(t, occ);
        let ctx = p.iter().chain(&n).map(|&u| self.context(u)).collect::<Result<Vec<_>, _>>()?;
        if ctx.is_empty() {
            return Ok(tau);
        }
        let s = self.tape.sum(&ctx)?;
        let m = self.tape.scale(s, 1.0 / ctx.len() as f64);
        Ok(self.tape.add(tau, m)?)
    }

    fn gru_g(&mut self, t: usize, v: SymbolId, occ: &[usize]) -> Result<NodeId, ModelError> {
        let (gp, gn, w) = self.model.ids.grug.ok_or_else(|| ModelError::Config("model has no GruG parameters".into()))?;
        let tau = self.type_embed(v)?;
        let (p, n) = self.lexical_chains(t, occ);
        let pc = p.iter().map(|&u| self.context(u)).collect::<Result<Vec<_>, _>>()?;
        let nc = n.iter().map(|&u| self.context(u)).collect::<Result<Vec<_>, _>>()?;
        let hp = gp.run(&mut self.tape, tau, &pc)?;
        let hn = gn.run(&mut self.tape, tau, &nc)?;
        let cat = self.tape.concat(&[hp, hn]);
        Ok(self.tape.matvec(w, cat)?)
    }

    fn flow_key(&mut self, v: SymbolId, occ: &[usize]) -> usize {
        let key = (v, occ.to_vec());
        if let Some(&k) = self.flow_index.get(&key) {
            return k;
        }
        let flow = var_flow(&self.scene().cfg, occ);
        self.flows.push(flow);
        let k = self.flows.len() - 1;
        self.flow_index.insert(key, k);
        k
    }

    /// Data-flow neighbours of the position of `t` for `v` with occurrences
    /// `occ` (which must not contain `t`).
    pub fn flow_around(&mut self, t: usize, v: SymbolId, occ: &[usize]) -> (UseSet, UseSet) {
        let k = self.flow_key(v, occ);
        self.flows[k].around(&self.scene().cfg, t).unwrap_or_default()
    }

    fn gru_d(&mut self, t: usize, v: SymbolId, occ: &[usize]) -> Result<NodeId, ModelError> {
        let (gp, gn, w) = self.model.ids.grud.ok_or_else(|| ModelError::Config("model has no GruD parameters".into()))?;
        let k = self.flow_key(v, occ);
        let (before, after) = self.flows[k].around(&self.scene().cfg, t).unwrap_or_default();
        let d = self.model.config.tree_depth;
        let hp = self.tree_set(gp, k, v, Direction::Prev, &before, d)?;
        let hn = self.tree_set(gn, k, v, Direction::Next, &after, d)?;
        let cat = self.tape.concat(&[hp, hn]);
        Ok(self.tape.matvec(w, cat)?)
    }

    /// State of one direction of the data-flow tree whose top level is `set`.
    pub fn tree_state(&mut self, t: usize, v: SymbolId, occ: &[usize], dir: Direction) -> Result<NodeId, ModelError> {
        let (gp, gn, _) = self.model.ids.grud.ok_or_else(|| ModelError::Config("model has no GruD parameters".into()))?;
        let k = self.flow_key(v, occ);
        let (before, after) = self.flows[k].around(&self.scene().cfg, t).unwrap_or_default();
        let d = self.model.config.tree_depth;
        match dir {
            Direction::Prev => self.tree_set(gp, k, v, dir, &before, d),
            Direction::Next => self.tree_set(gn, k, v, dir, &after, d),
        }
    }

    fn tree_set(&mut self, cell: GruCell, k: usize, v: SymbolId, dir: Direction, set: &UseSet, d: usize) -> Result<NodeId, ModelError> {
        if d == 0 || set.is_empty() {
            return self.type_embed(v);
        }
        let mut kids = Vec::with_capacity(set.len());
        for p in set {
            kids.push(match p {
                UsePoint::Eps => self.eps_child(cell, v, dir)?,
                UsePoint::Tok(u) => self.tree_node(cell, k, v, dir, *u, d)?,
            });
        }
        if kids.len() == 1 {
            Ok(kids[0])
        } else {
            Ok(self.tape.max(&kids)?)
        }
    }

    fn eps_child(&mut self, cell: GruCell, v: SymbolId, dir: Direction) -> Result<NodeId, ModelError> {
        if let Some(&n) = self.eps_memo.get(&(v, dir)) {
            return Ok(n);
        }
        let tau = self.type_embed(v)?;
        let z = self.zero();
        let n = cell.step(&mut self.tape, tau, z)?;
        self.eps_memo.insert((v, dir), n);
        Ok(n)
    }

    fn tree_node(&mut self, cell: GruCell, k: usize, v: SymbolId, dir: Direction, u: usize, d: usize) -> Result<NodeId, ModelError> {
        let key = (k, dir, u, d);
        if let Some(&n) = self.tree_memo.get(&key) {
            return Ok(n);
        }
        let flow = &self.flows[k];
        let below = match dir {
            Direction::Prev => flow.prev(u),
            Direction::Next => flow.next(u),
        }
        .cloned()
        .unwrap_or_default();
        let h = self.tree_set(cell, k, v, dir, &below, d - 1)?;
        let x = self.context(u)?;
        let n = cell.step(&mut self.tape, h, x)?;
        self.tree_memo.insert(key, n);
        Ok(n)
    }
}
