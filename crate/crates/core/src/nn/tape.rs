//! Reverse-mode differentiation over vector-valued operations.

use super::tensor::{Grads, ParamId, ParamStore};
use super::{softmax_xent, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    /// Row `r` of a matrix parameter, or the whole of a vector parameter.
    Row(ParamId, usize),
    /// `Σ W_k x_k (+ b)`.
    Affine(Vec<(ParamId, NodeId)>, Option<ParamId>),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Concat(Vec<NodeId>),
    Sum(Vec<NodeId>),
    /// Coordinate-wise maximum; `arg[i]` is the winning input.
    Max(Vec<NodeId>, Vec<u32>),
    Dot(NodeId, NodeId),
    Xent(NodeId, usize, Vec<f64>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    off: usize,
    len: usize,
    needs_grad: bool,
}

/// Records operations in evaluation order; [`Tape::backward`] visits them in
/// reverse, once each.
pub struct Tape<'p> {
    params: &'p ParamStore,
    vals: Vec<f64>,
    nodes: Vec<Node>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape { params, vals: Vec::with_capacity(1 << 14), nodes: Vec::with_capacity(1 << 10) }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, n: NodeId) -> &[f64] {
        let node = &self.nodes[n.0];
        &self.vals[node.off..node.off + node.len]
    }

    pub fn scalar(&self, n: NodeId) -> f64 {
        self.value(n)[0]
    }

    fn dim(&self, n: NodeId) -> usize {
        self.nodes[n.0].len
    }

    fn needs(&self, n: NodeId) -> bool {
        self.nodes[n.0].needs_grad
    }

    fn push(&mut self, op: Op, value: impl IntoIterator<Item = f64>, needs_grad: bool) -> NodeId {
        let off = self.vals.len();
        self.vals.extend(value);
        let len = self.vals.len() - off;
        self.nodes.push(Node { op, off, len, needs_grad });
        NodeId(self.nodes.len() - 1)
    }

    fn push_with<F: FnOnce(&[f64], &mut Vec<f64>)>(&mut self, op: Op, needs_grad: bool, f: F) -> NodeId {
        let off = self.vals.len();
        let mut out = std::mem::take(&mut self.vals);
        let (done, _) = out.split_at(off);
        let mut tail = Vec::new();
        f(done, &mut tail);
        out.extend_from_slice(&tail);
        self.vals = out;
        let len = self.vals.len() - off;
        self.nodes.push(Node { op, off, len, needs_grad });
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, v: &[f64]) -> NodeId {
        self.push(Op::Input, v.iter().copied(), false)
    }

    pub fn zeros(&mut self, n: usize) -> NodeId {
        self.push(Op::Input, std::iter::repeat(0.0).take(n), false)
    }

    /// Row `r` of matrix parameter `p`.
    pub fn row(&mut self, p: ParamId, r: usize) -> NodeId {
        let t = self.params.get(p);
        let v: Vec<f64> = t.row(r).to_vec();
        self.push(Op::Row(p, r), v, true)
    }

    /// The whole of vector parameter `p`.
    pub fn param(&mut self, p: ParamId) -> NodeId {
        let v = self.params.get(p).data.clone();
        self.push(Op::Row(p, 0), v, true)
    }

    pub fn matvec(&mut self, w: ParamId, x: NodeId) -> Result<NodeId, NnError> {
        self.affine(&[(w, x)], None)
    }

    /// `Σ W_k x_k + b`.
    pub fn affine(&mut self, terms: &[(ParamId, NodeId)], bias: Option<ParamId>) -> Result<NodeId, NnError> {
        let params = self.params;
        let rows = match (terms.first(), bias) {
            (Some((w, _)), _) => params.get(*w).rows(),
            (None, Some(b)) => params.get(b).len(),
            (None, None) => return Err(NnError::Shape("empty affine map".into())),
        };
        for &(w, x) in terms {
            let t = params.get(w);
            if t.shape.len() != 2 || t.rows() != rows || t.cols() != self.dim(x) {
                return Err(NnError::Shape(format!(
                    "{} has shape {:?}, applied to a vector of length {} (rows {rows})",
                    params.name(w),
                    t.shape,
                    self.dim(x)
                )));
            }
        }
        if let Some(b) = bias {
            if params.get(b).len() != rows {
                return Err(NnError::Shape(format!("bias {} does not have {rows} entries", params.name(b))));
            }
        }
        let xs: Vec<(usize, usize)> = terms.iter().map(|&(_, x)| (self.nodes[x.0].off, self.nodes[x.0].len)).collect();
        let op = Op::Affine(terms.to_vec(), bias);
        Ok(self.push_with(op, true, |vals, out| {
            out.resize(rows, 0.0);
            if let Some(b) = bias {
                out.copy_from_slice(&params.get(b).data);
            }
            for (&(w, _), &(off, len)) in terms.iter().zip(&xs) {
                let wd = &params.get(w).data;
                let x = &vals[off..off + len];
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &wd[i * len..(i + 1) * len];
                    *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }))
    }

    fn binary(&mut self, a: NodeId, b: NodeId, what: &str) -> Result<(), NnError> {
        if self.dim(a) != self.dim(b) {
            return Err(NnError::Shape(format!("{what}: lengths {} and {}", self.dim(a), self.dim(b))));
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.binary(a, b, "add")?;
        let v: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a, b), v, g))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.binary(a, b, "sub")?;
        let v: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x - y).collect();
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Sub(a, b), v, g))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.binary(a, b, "mul")?;
        let v: Vec<f64> = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Mul(a, b), v, g))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v: Vec<f64> = self.value(a).iter().map(|x| x * s).collect();
        let g = self.needs(a);
        self.push(Op::Scale(a, s), v, g)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let v: Vec<f64> = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        let g = self.needs(a);
        self.push(Op::Sigmoid(a), v, g)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v: Vec<f64> = self.value(a).iter().map(|x| x.tanh()).collect();
        let g = self.needs(a);
        self.push(Op::Tanh(a), v, g)
    }

    pub fn concat(&mut self, xs: &[NodeId]) -> NodeId {
        let v: Vec<f64> = xs.iter().flat_map(|&x| self.value(x).to_vec()).collect();
        let g = xs.iter().any(|&x| self.needs(x));
        self.push(Op::Concat(xs.to_vec()), v, g)
    }

    pub fn sum(&mut self, xs: &[NodeId]) -> Result<NodeId, NnError> {
        let first = *xs.first().ok_or(NnError::EmptyInput)?;
        let n = self.dim(first);
        let mut v = vec![0.0; n];
        for &x in xs {
            if self.dim(x) != n {
                return Err(NnError::Shape(format!("sum: lengths {n} and {}", self.dim(x))));
            }
            for (o, y) in v.iter_mut().zip(self.value(x)) {
                *o += y;
            }
        }
        let g = xs.iter().any(|&x| self.needs(x));
        Ok(self.push(Op::Sum(xs.to_vec()), v, g))
    }

    /// Coordinate-wise maximum; ties go to the earliest input.
    pub fn max(&mut self, xs: &[NodeId]) -> Result<NodeId, NnError> {
        let first = *xs.first().ok_or(NnError::EmptyInput)?;
        let n = self.dim(first);
        let mut v = self.value(first).to_vec();
        let mut arg = vec![0u32; n];
        for (k, &x) in xs.iter().enumerate().skip(1) {
            if self.dim(x) != n {
                return Err(NnError::Shape(format!("max: lengths {n} and {}", self.dim(x))));
            }
            for (i, &y) in self.value(x).iter().enumerate() {
                if y > v[i] {
                    v[i] = y;
                    arg[i] = k as u32;
                }
            }
        }
        let g = xs.iter().any(|&x| self.needs(x));
        Ok(self.push(Op::Max(xs.to_vec(), arg), v, g))
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.binary(a, b, "dot")?;
        let s: f64 = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Dot(a, b), [s], g))
    }

    /// Softmax cross-entropy of the score vector `scores` against `truth`.
    pub fn xent(&mut self, scores: NodeId, truth: usize) -> Result<NodeId, NnError> {
        let (loss, probs) = softmax_xent(self.value(scores), truth)?;
        let g = self.needs(scores);
        Ok(self.push(Op::Xent(scores, truth, probs), [loss], g))
    }

    /// Accumulates d`out`/dθ into `grads`; `out` must be a scalar node.
    pub fn backward(&self, out: NodeId, grads: &mut Grads) {
        assert_eq!(self.dim(out), 1, "backward from a non-scalar node");
        let mut g = vec![0.0; self.vals.len()];
        g[self.nodes[out.0].off] = 1.0;
        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let (lo, hi) = g.split_at_mut(node.off);
            let go = &hi[..node.len];
            if go.iter().all(|&x| x == 0.0) {
                continue;
            }
            let y = &self.vals[node.off..node.off + node.len];
            let span = |n: NodeId| {
                let m = &self.nodes[n.0];
                m.off..m.off + m.len
            };
            match &node.op {
                Op::Input => {}
                Op::Row(p, r) => {
                    let dst = &mut grads.0[p.0][r * node.len..(r + 1) * node.len];
                    for (d, s) in dst.iter_mut().zip(go) {
                        *d += s;
                    }
                }
                Op::Affine(terms, bias) => {
                    if let Some(b) = bias {
                        for (d, s) in grads.0[b.0].iter_mut().zip(go) {
                            *d += s;
                        }
                    }
                    for &(w, x) in terms {
                        let xr = span(x);
                        let cols = xr.len();
                        let wd = &self.params.get(w).data;
                        let gw = &mut grads.0[w.0];
                        let xv = &self.vals[xr.clone()];
                        for (i, &gi) in go.iter().enumerate() {
                            if gi == 0.0 {
                                continue;
                            }
                            for (d, &xj) in gw[i * cols..(i + 1) * cols].iter_mut().zip(xv) {
                                *d += gi * xj;
                            }
                        }
                        if self.nodes[x.0].needs_grad {
                            let gx = &mut lo[xr];
                            for (i, &gi) in go.iter().enumerate() {
                                if gi == 0.0 {
                                    continue;
                                }
                                for (d, &wij) in gx.iter_mut().zip(&wd[i * cols..(i + 1) * cols]) {
                                    *d += gi * wij;
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                    for (d, s) in lo[span(*a)].iter_mut().zip(go) {
                        *d += s;
                    }
                    for (d, s) in lo[span(*b)].iter_mut().zip(go) {
                        *d += sign * s;
                    }
                }
                Op::Mul(a, b) => {
                    let (ra, rb) = (span(*a), span(*b));
                    let av = self.vals[ra.clone()].to_vec();
                    let bv = &self.vals[rb.clone()];
                    for ((d, s), bb) in lo[ra].iter_mut().zip(go).zip(bv) {
                        *d += s * bb;
                    }
                    for ((d, s), aa) in lo[rb].iter_mut().zip(go).zip(&av) {
                        *d += s * aa;
                    }
                }
                Op::Scale(a, f) => {
                    for (d, s) in lo[span(*a)].iter_mut().zip(go) {
                        *d += f * s;
                    }
                }
                Op::Sigmoid(a) => {
                    for ((d, s), yy) in lo[span(*a)].iter_mut().zip(go).zip(y) {
                        *d += s * yy * (1.0 - yy);
                    }
                }
                Op::Tanh(a) => {
                    for ((d, s), yy) in lo[span(*a)].iter_mut().zip(go).zip(y) {
                        *d += s * (1.0 - yy * yy);
                    }
                }
                Op::Concat(xs) => {
                    let mut k = 0;
                    for &x in xs {
                        let r = span(x);
                        let n = r.len();
                        for (d, s) in lo[r].iter_mut().zip(&go[k..k + n]) {
                            *d += s;
                        }
                        k += n;
                    }
                }
                Op::Sum(xs) => {
                    for &x in xs {
                        for (d, s) in lo[span(x)].iter_mut().zip(go) {
                            *d += s;
                        }
                    }
                }
                Op::Max(xs, arg) => {
                    for (i, (&k, s)) in arg.iter().zip(go).enumerate() {
                        let r = span(xs[k as usize]);
                        lo[r.start + i] += s;
                    }
                }
                Op::Dot(a, b) => {
                    let s = go[0];
                    let (ra, rb) = (span(*a), span(*b));
                    let av = self.vals[ra.clone()].to_vec();
                    let bv = &self.vals[rb.clone()];
                    for (d, bb) in lo[ra].iter_mut().zip(bv) {
                        *d += s * bb;
                    }
                    for (d, aa) in lo[rb].iter_mut().zip(&av) {
                        *d += s * aa;
                    }
                }
                Op::Xent(scores, truth, probs) => {
                    let s = go[0];
                    let r = span(*scores);
                    for (i, (d, p)) in lo[r].iter_mut().zip(probs).enumerate() {
                        *d += s * (p - if i == *truth { 1.0 } else { 0.0 });
                    }
                }
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
