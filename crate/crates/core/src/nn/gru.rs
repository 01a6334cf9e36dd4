use rand::Rng;

use super::tape::{NodeId, Tape};
use super::tensor::{Init, ParamId, ParamStore};
use super::NnError;

/// Gated recurrent unit parameters, registered under a common name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GruCell {
    pub input: usize,
    pub hidden: usize,
    wz: ParamId,
    uz: ParamId,
    bz: ParamId,
    wr: ParamId,
    ur: ParamId,
    br: ParamId,
    w: ParamId,
    u: ParamId,
    b: ParamId,
}

impl GruCell {
    pub fn new<R: Rng>(ps: &mut ParamStore, prefix: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let wi = Init::Glorot { fan_in: input, fan_out: hidden };
        let wh = Init::Glorot { fan_in: hidden, fan_out: hidden };
        let mut m = |n: &str, shape: &[usize], init| ps.add(&format!("{prefix}.{n}"), shape, init, rng);
        GruCell {
            input,
            hidden,
            wz: m("Wz", &[hidden, input], wi),
            uz: m("Uz", &[hidden, hidden], wh),
            bz: m("bz", &[hidden], Init::Zero),
            wr: m("Wr", &[hidden, input], wi),
            ur: m("Ur", &[hidden, hidden], wh),
            br: m("br", &[hidden], Init::Zero),
            w: m("W", &[hidden, input], wi),
            u: m("U", &[hidden, hidden], wh),
            b: m("b", &[hidden], Init::Zero),
        }
    }

    /// `h' = (1 - z) * h + z * tanh(W x + U (r * h) + b)`.
    pub fn step(&self, t: &mut Tape, h: NodeId, x: NodeId) -> Result<NodeId, NnError> {
        let z = t.affine(&[(self.wz, x), (self.uz, h)], Some(self.bz))?;
        let z = t.sigmoid(z);
        let r = t.affine(&[(self.wr, x), (self.ur, h)], Some(self.br))?;
        let r = t.sigmoid(r);
        let rh = t.mul(r, h)?;
        let c = t.affine(&[(self.w, x), (self.u, rh)], Some(self.b))?;
        let c = t.tanh(c);
        let d = t.sub(c, h)?;
        let zd = t.mul(z, d)?;
        t.add(h, zd)
    }

    /// Folds `xs` in order starting from `h0`.
    pub fn run(&self, t: &mut Tape, h0: NodeId, xs: &[NodeId]) -> Result<NodeId, NnError> {
        xs.iter().try_fold(h0, |h, &x| self.step(t, h, x))
    }
}
