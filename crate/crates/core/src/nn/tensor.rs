use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(NnError::Shape(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Row length of a matrix, or the length of a vector.
    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            self.data.len()
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy)]
pub enum Init {
    Zero,
    /// Uniform in `[-a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
}

/// Named learnable tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: BTreeMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add<R: Rng>(&mut self, name: &str, shape: &[usize], init: Init, rng: &mut R) -> ParamId {
        assert!(!self.index.contains_key(name), "parameter {name} registered twice");
        let mut t = Tensor::zeros(shape);
        if let Init::Glorot { fan_in, fan_out } = init {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for x in &mut t.data {
                *x = rng.gen_range(-a..=a);
            }
        }
        self.push(name, t)
    }

    pub fn push(&mut self, name: &str, t: Tensor) -> ParamId {
        let id = ParamId(self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(t);
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Name-keyed snapshot for serialization.
    pub fn to_map(&self) -> BTreeMap<String, Tensor> {
        self.names.iter().cloned().zip(self.tensors.iter().cloned()).collect()
    }

    /// Overwrites every registered tensor from `map`; names and shapes must
    /// match exactly.
    pub fn load_map(&mut self, map: &BTreeMap<String, Tensor>) -> Result<(), NnError> {
        if map.len() != self.tensors.len() {
            return Err(NnError::Shape(format!("checkpoint has {} tensors, model has {}", map.len(), self.tensors.len())));
        }
        for (i, name) in self.names.iter().enumerate() {
            let t = map.get(name).ok_or_else(|| NnError::Shape(format!("checkpoint lacks tensor {name}")))?;
            if t.shape != self.tensors[i].shape || t.data.len() != self.tensors[i].data.len() {
                return Err(NnError::Shape(format!(
                    "tensor {name}: checkpoint shape {:?}, model shape {:?}",
                    t.shape, self.tensors[i].shape
                )));
            }
            self.tensors[i] = t.clone();
        }
        Ok(())
    }
}

/// Gradient buffers shaped like a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn zeros(params: &ParamStore) -> Self {
        Grads(params.tensors.iter().map(|t| vec![0.0; t.len()]).collect())
    }

    pub fn get(&self, id: ParamId) -> &[f64] {
        &self.0[id.0]
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.0 {
            for x in g {
                *x *= s;
            }
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}
