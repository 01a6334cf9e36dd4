//! Single-usage maximum-likelihood training with in-minibatch
//! normalization, early stopping on validation accuracy, and checkpoints.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::per_placeholder_accuracy;
use crate::models::{Encoder, Model, ModelConfig, ModelError, Scene, TypeMode, Vocab};
use crate::nn::{Adam, AdamConfig, Grads, NnError, NodeId, Tensor};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite loss {loss} in epoch {epoch}, batch {batch} (instances: {})", instances.join(", "))]
    NonFiniteLoss { loss: f64, epoch: usize, batch: usize, instances: Vec<String> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: malformed checkpoint: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

impl From<NnError> for TrainError {
    fn from(e: NnError) -> Self {
        TrainError::Model(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Further epochs allowed without a validation improvement.
    pub patience: usize,
    /// Where the best-validation checkpoint is written, if anywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            batch_size: 32,
            epochs: 20,
            lr: AdamConfig::default().lr,
            seed: 1,
            patience: 3,
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.model.validate()?;
        if self.batch_size == 0 || self.epochs == 0 || !(self.lr > 0.0) {
            return Err(ModelError::Config("batch_size, epochs and lr must be positive".into()).into());
        }
        Ok(())
    }
}

/// One placeholder of one instance; the others stay at ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub instance: usize,
    pub placeholder: usize,
}

/// Every placeholder of every instance, shuffled by `rng`, in batches of
/// `batch_size` (the last may be shorter).
pub fn make_batches<R: rand::Rng>(
    instances: &[crate::taskgen::TaskInstance],
    batch_size: usize,
    rng: &mut R,
) -> Vec<Vec<Item>> {
    let mut items: Vec<Item> = instances
        .iter()
        .enumerate()
        .flat_map(|(i, inst)| (0..inst.placeholders.len()).map(move |k| Item { instance: i, placeholder: k }))
        .collect();
    items.shuffle(rng);
    items.chunks(batch_size.max(1)).map(<[Item]>::to_vec).collect()
}

/// Size of each item's softmax: its own candidates plus the truth of every
/// other item in the batch.
pub fn pooled_sizes(scenes: &[Scene], batch: &[Item]) -> Vec<usize> {
    batch.iter().map(|it| scenes[it.instance].instance.placeholders[it.placeholder].candidates.len() + batch.len() - 1).collect()
}

/// Mean pooled cross-entropy of `batch` and its gradient. Type subsets are
/// drawn from `rng`.
pub fn batch_loss(model: &Model, scenes: &[Scene], batch: &[Item], rng: &mut ChaCha8Rng) -> Result<(f64, Grads), TrainError> {
    let mut enc = Encoder::new(model, TypeMode::Train(rng));
    let mut contexts = Vec::with_capacity(batch.len());
    let mut own: Vec<Vec<NodeId>> = Vec::with_capacity(batch.len());
    let mut truths = Vec::with_capacity(batch.len());
    let mut truth_index = Vec::with_capacity(batch.len());
    for it in batch {
        let scene = &scenes[it.instance];
        let inst = scene.instance;
        let ph = &inst.placeholders[it.placeholder];
        let assignment = inst.truth();
        enc.set_scene(scene);
        contexts.push(enc.context(ph.token)?);
        let us = ph.candidates.iter().map(|&v| enc.usage_at(ph.token, v, &assignment)).collect::<Result<Vec<_>, _>>()?;
        let k = ph.candidates.iter().position(|&v| v == ph.truth).expect("truth is a candidate");
        truths.push(us[k]);
        truth_index.push(k);
        own.push(us);
    }
    let tape = enc.tape();
    let mut losses = Vec::with_capacity(batch.len());
    for i in 0..batch.len() {
        let pooled = own[i].iter().copied().chain((0..batch.len()).filter(|&j| j != i).map(|j| truths[j]));
        let scores = pooled.map(|u| tape.dot(contexts[i], u)).collect::<Result<Vec<_>, _>>()?;
        let scores = tape.concat(&scores);
        losses.push(tape.xent(scores, truth_index[i])?);
    }
    let total = tape.sum(&losses)?;
    let mean = tape.scale(total, 1.0 / batch.len() as f64);
    let loss = tape.scalar(mean);
    let mut grads = Grads::zeros(&model.params);
    tape.backward(mean, &mut grads);
    Ok((loss, grads))
}

/// One optimizer step on `batch`; returns the loss before the step.
pub fn train_step(
    model: &mut Model,
    adam: &mut Adam,
    scenes: &[Scene],
    batch: &[Item],
    rng: &mut ChaCha8Rng,
) -> Result<f64, TrainError> {
    let (loss, grads) = batch_loss(model, scenes, batch, rng)?;
    if !loss.is_finite() || !grads.is_finite() {
        return Err(TrainError::NonFiniteLoss {
            loss,
            epoch: 0,
            batch: 0,
            instances: batch.iter().map(|it| scenes[it.instance].instance.id.clone()).collect(),
        });
    }
    adam.update(&mut model.params, &grads);
    Ok(loss)
}

/// Per-epoch training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub valid_accuracy: f64,
    pub seconds: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{:.6}\t{:.4}\t{:.2}", self.epoch, self.loss, self.valid_accuracy, self.seconds)
    }
}

/// Parameters, vocabulary, configuration and optimizer state of a model,
/// as of the best validation epoch so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    /// Training settings; the output path is not recorded.
    pub config: TrainConfig,
    pub vocab: Vocab,
    pub params: BTreeMap<String, Tensor>,
    pub epoch: usize,
    pub best_valid_accuracy: f64,
    pub adam: Adam,
}

impl Checkpoint {
    pub fn model(&self) -> Result<Model, TrainError> {
        let mut m = Model::new(self.config.model, self.vocab.clone(), self.config.seed)?;
        m.params.load_map(&self.params)?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        let io = |source| TrainError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let json = serde_json::to_string(self).expect("checkpoints serialize");
        std::fs::write(path, json).map_err(|source| TrainError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrainError::Io { path: path.to_path_buf(), source })?;
        let bad = |message: String| TrainError::Checkpoint { path: path.to_path_buf(), message };
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if ck.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(bad(format!("format version {} (expected {CHECKPOINT_FORMAT_VERSION})", ck.format_version)));
        }
        Ok(ck)
    }
}

/// Result of [`fit`]: the best-validation checkpoint and the epochs run in
/// this call.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub checkpoint: Checkpoint,
    pub epochs: Vec<EpochLog>,
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Trains from scratch, or from `resume`, until `config.epochs` epochs
/// (counted from 1 across resumptions) are done or validation accuracy has
/// not improved for `config.patience` epochs. Writes one log line per epoch.
pub fn fit(
    config: &TrainConfig,
    train: &[crate::taskgen::TaskInstance],
    valid: &[crate::taskgen::TaskInstance],
    resume: Option<Checkpoint>,
    log: &mut dyn Write,
) -> Result<FitOutcome, TrainError> {
    config.validate()?;
    if train.iter().all(|i| i.placeholders.is_empty()) {
        return Err(TrainError::InsufficientData("no training placeholders".into()));
    }
    if valid.is_empty() {
        return Err(TrainError::InsufficientData("empty validation set".into()));
    }
    let (mut model, mut adam, start, mut best) = match resume {
        Some(ck) => {
            let model = ck.model()?;
            let start = ck.epoch + 1;
            (model, ck.adam.clone(), start, Some(ck))
        }
        None => {
            let vocab = Vocab::build(train.iter().map(|i| &i.program), config.model.min_lexeme_count);
            let model = Model::new(config.model, vocab, config.seed)?;
            let adam = Adam::new(&model.params, AdamConfig { lr: config.lr, ..AdamConfig::default() });
            (model, adam, 1, None)
        }
    };
    let scenes: Vec<Scene> = train.iter().map(Scene::new).collect();
    let mut stale = 0;
    let mut epochs = Vec::new();
    for epoch in start..=config.epochs {
        let started = Instant::now();
        let mut rng = epoch_rng(config.seed, epoch);
        let batches = make_batches(train, config.batch_size, &mut rng);
        let mut total = 0.0;
        for (b, batch) in batches.iter().enumerate() {
            total += train_step(&mut model, &mut adam, &scenes, batch, &mut rng).map_err(|e| match e {
                TrainError::NonFiniteLoss { loss, instances, .. } => TrainError::NonFiniteLoss { loss, epoch, batch: b, instances },
                e => e,
            })?;
        }
        let valid_accuracy = per_placeholder_accuracy(&model, valid)?;
        let entry =
            EpochLog { epoch, loss: total / batches.len() as f64, valid_accuracy, seconds: started.elapsed().as_secs_f64() };
        writeln!(log, "{entry}").map_err(|source| TrainError::Io { path: "<log>".into(), source })?;
        epochs.push(entry);
        if best.as_ref().map_or(true, |b| valid_accuracy > b.best_valid_accuracy) {
            stale = 0;
            let ck = Checkpoint {
                format_version: CHECKPOINT_FORMAT_VERSION,
                config: TrainConfig { checkpoint: None, ..config.clone() },
                vocab: model.vocab.clone(),
                params: model.params.to_map(),
                epoch,
                best_valid_accuracy: valid_accuracy,
                adam: adam.clone(),
            };
            if let Some(path) = &config.checkpoint {
                ck.save(path)?;
            }
            best = Some(ck);
        } else {
            stale += 1;
            if stale >= config.patience.max(1) {
                break;
            }
        }
    }
    let checkpoint = best.ok_or_else(|| TrainError::InsufficientData(format!("no epochs to run after epoch {}", start - 1)))?;
    Ok(FitOutcome { checkpoint, epochs })
}
