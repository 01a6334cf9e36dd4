//! Dense vectors, reverse-mode differentiation, a GRU cell and Adam.

mod adam;
mod gru;
mod tape;
mod tensor;

use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use gru::GruCell;
pub use tape::{sigmoid, NodeId, Tape};
pub use tensor::{Grads, Init, ParamId, ParamStore, Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input list")]
    EmptyInput,
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },
}

/// Coordinate-wise maximum of equal-length vectors.
pub fn elementwise_max(xs: &[&[f64]]) -> Result<Vec<f64>, NnError> {
    let first = xs.first().ok_or(NnError::EmptyInput)?;
    let mut out = first.to_vec();
    for x in &xs[1..] {
        if x.len() != out.len() {
            return Err(NnError::Shape(format!("max over lengths {} and {}", out.len(), x.len())));
        }
        for (o, &y) in out.iter_mut().zip(x.iter()) {
            if y > *o {
                *o = y;
            }
        }
    }
    Ok(out)
}

/// Numerically stable softmax and the negative log-probability of `truth`.
pub fn softmax_xent(scores: &[f64], truth: usize) -> Result<(f64, Vec<f64>), NnError> {
    if truth >= scores.len() {
        return Err(NnError::Index { index: truth, len: scores.len() });
    }
    let probs = softmax(scores);
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    Ok((lse - scores[truth], probs))
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> Result<f64, NnError> {
    if a.len() != b.len() {
        return Err(NnError::Shape(format!("dot of lengths {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_diff_grad;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn max_examples() {
        assert_eq!(elementwise_max(&[&[1.0, -2.0], &[0.0, 3.0]]).unwrap(), vec![1.0, 3.0]);
        assert_eq!(elementwise_max(&[&[4.0, 5.0]]).unwrap(), vec![4.0, 5.0]);
        assert_eq!(elementwise_max(&[]), Err(NnError::EmptyInput));
    }

    #[test]
    fn softmax_examples() {
        let (l, p) = softmax_xent(&[0.5; 4], 2).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
        assert_eq!(softmax_xent(&[7.0], 0).unwrap().0, 0.0);
        let (l, p) = softmax_xent(&[2.0, 0.0], 0).unwrap();
        assert!((p[0] - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!((p[0] - 0.8808).abs() < 1e-4 && (l - 0.1269).abs() < 1e-4);
        assert!(matches!(softmax_xent(&[1.0], 1), Err(NnError::Index { .. })));
    }

    proptest! {
        #[test]
        fn softmax_normalized_and_shift_invariant(s in prop::collection::vec(-50.0f64..50.0, 1..12), c in -100.0f64..100.0) {
            let p = softmax(&s);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    #[test]
    fn max_gradient_routes_to_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamStore::new();
        let w = ps.add("w", &[5, 5], Init::Glorot { fan_in: 5, fan_out: 5 }, &mut rng);
        let xs: Vec<Vec<f64>> = (0..3).map(|k| (0..5).map(|i| ((k * 5 + i) as f64 * 0.37).sin()).collect()).collect();
        let flat: Vec<f64> = xs.concat();
        let mut t = Tape::new(&ps);
        let ins: Vec<NodeId> = flat.chunks(5).map(|c| t.input(c)).collect();
        let ys: Vec<NodeId> = ins.iter().map(|&x| t.matvec(w, x).unwrap()).collect();
        let m = t.max(&ys).unwrap();
        let ones = t.input(&[1.0; 5]);
        let s = t.dot(m, ones).unwrap();
        let mut g = Grads::zeros(&ps);
        t.backward(s, &mut g);
        let wv = ps.get(w).data.clone();
        let fd = finite_diff_grad(
            |wd: &[f64]| {
                let mut p2 = ps.clone();
                p2.get_mut(w).data.copy_from_slice(wd);
                let mut t = Tape::new(&p2);
                let ins: Vec<NodeId> = flat.chunks(5).map(|c| t.input(c)).collect();
                let ys: Vec<NodeId> = ins.iter().map(|&x| t.matvec(w, x).unwrap()).collect();
                let m = t.max(&ys).unwrap();
                let ones = t.input(&[1.0; 5]);
                let s = t.dot(m, ones).unwrap();
                t.scalar(s)
            },
            &wv,
            1e-5,
        );
        assert!(rel_err(g.get(w), &fd) < 1e-6, "{:?} vs {:?}", g.get(w), fd);
    }

    #[test]
    fn tape_ops_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ps = ParamStore::new();
        let a = ps.add("a", &[4, 3], Init::Glorot { fan_in: 3, fan_out: 4 }, &mut rng);
        let b = ps.add("b", &[4, 4], Init::Glorot { fan_in: 4, fan_out: 4 }, &mut rng);
        let e = ps.add("e", &[2, 3], Init::Glorot { fan_in: 3, fan_out: 2 }, &mut rng);
        let bias = ps.add("bias", &[4], Init::Glorot { fan_in: 1, fan_out: 4 }, &mut rng);
        let build = |ps: &ParamStore| {
            let mut t = Tape::new(ps);
            let x0 = t.row(e, 0);
            let x1 = t.row(e, 1);
            let y = t.affine(&[(a, x0)], Some(bias)).unwrap();
            let y2 = t.affine(&[(a, x1)], None).unwrap();
            let s = t.sigmoid(y);
            let h = t.tanh(y2);
            let m = t.mul(s, h).unwrap();
            let d = t.sub(m, y2).unwrap();
            let q = t.matvec(b, d).unwrap();
            let q = t.scale(q, 0.7);
            let sum = t.sum(&[q, s, h]).unwrap();
            let c = t.concat(&[sum, y]);
            let half = t.concat(&[y2, q]);
            let sc = t.dot(c, half).unwrap();
            let sc2 = t.dot(sum, s).unwrap();
            let scores = t.concat(&[sc, sc2]);
            let l = t.xent(scores, 1).unwrap();
            let mut g = Grads::zeros(ps);
            t.backward(l, &mut g);
            (t.scalar(l), g)
        };
        let (_, g) = build(&ps);
        for id in ps.ids() {
            let x = ps.get(id).data.clone();
            let fd = finite_diff_grad(
                |v: &[f64]| {
                    let mut p2 = ps.clone();
                    p2.get_mut(id).data.copy_from_slice(v);
                    build(&p2).0
                },
                &x,
                1e-5,
            );
            assert!(rel_err(g.get(id), &fd) < 1e-6, "{}: {:?} vs {:?}", ps.name(id), g.get(id), fd);
        }
    }
}
