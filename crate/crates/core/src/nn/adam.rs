use serde::{Deserialize, Serialize};

use super::tensor::{Grads, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adaptive-moment optimizer state with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let z = Grads::zeros(params).0;
        Adam { config, step: 0, m: z.clone(), v: z }
    }

    pub fn update(&mut self, params: &mut ParamStore, grads: &Grads) {
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (i, id) in params.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let g = &grads.0[i];
            if g.iter().all(|&x| x == 0.0) && self.m[i].iter().all(|&x| x == 0.0) {
                continue;
            }
            let data = &mut params.get_mut(id).data;
            for j in 0..data.len() {
                self.m[i][j] = beta1 * self.m[i][j] + (1.0 - beta1) * g[j];
                self.v[i][j] = beta2 * self.v[i][j] + (1.0 - beta2) * g[j] * g[j];
                let mh = self.m[i][j] / c1;
                let vh = self.v[i][j] / c2;
                data[j] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Init, Tensor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn store(vals: &[f64]) -> ParamStore {
        let mut ps = ParamStore::new();
        ps.push("w", Tensor::from_vec(&[vals.len()], vals.to_vec()).unwrap());
        ps
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut ps = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        ps.add("a", &[3, 2], Init::Glorot { fan_in: 2, fan_out: 3 }, &mut rng);
        let before = ps.clone();
        let mut opt = Adam::new(&ps, AdamConfig::default());
        let g = Grads::zeros(&ps);
        opt.update(&mut ps, &g);
        assert_eq!(ps, before);
    }

    #[test]
    fn first_step_is_bounded_by_lr() {
        let mut ps = store(&[0.0, 1.0, -2.0, 5.0]);
        let before = ps.get(crate::nn::ParamId(0)).data.clone();
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        let mut opt = Adam::new(&ps, cfg);
        opt.update(&mut ps, &Grads(vec![vec![1e-3, -40.0, 7.0, 1e6]]));
        for (a, b) in ps.get(crate::nn::ParamId(0)).data.iter().zip(&before) {
            assert!((a - b).abs() <= cfg.lr * (1.0 + 1e-6));
            assert!((a - b).abs() > 0.9 * cfg.lr);
        }
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut ps = store(&[0.0]);
        let mut opt = Adam::new(&ps, AdamConfig { lr: 0.1, ..Default::default() });
        for _ in 0..500 {
            let w = ps.get(crate::nn::ParamId(0)).data[0];
            opt.update(&mut ps, &Grads(vec![vec![2.0 * (w - 3.0)]]));
        }
        let w = ps.get(crate::nn::ParamId(0)).data[0];
        assert!((w - 3.0).abs() < 1e-3, "w = {w}");
    }
}
