//! Type embeddings, context representations, the five usage
//! representations and the inner-product scorer.
//!
//! Everything is expressed on a [`Tape`], so the same code serves training
//! (with gradients) and inference (values only).

mod encoder;
mod vocab;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{SymbolId, TypedProgram};
use crate::nn::{GruCell, Init, NnError, ParamId, ParamStore};

pub use encoder::{Encoder, Scene, TypeMode, Window, WindowSlot};
pub use vocab::{Vocab, PAD_ROW, PLACEHOLDER_ROW, UNK_ROW, UNK_TYPE_ROW};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("unknown variant {0:?} (expected loc, avgg, grug, grud or hybrid)")]
    Variant(String),
    #[error("unknown context encoder {0:?} (expected logbilinear or gru)")]
    ContextEncoder(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Loc,
    AvgG,
    GruG,
    GruD,
    Hybrid,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Loc, Variant::AvgG, Variant::GruG, Variant::GruD, Variant::Hybrid];
}

impl FromStr for Variant {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "loc" => Ok(Variant::Loc),
            "avgg" => Ok(Variant::AvgG),
            "grug" => Ok(Variant::GruG),
            "grud" => Ok(Variant::GruD),
            "hybrid" => Ok(Variant::Hybrid),
            _ => Err(ModelError::Variant(s.to_string())),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Loc => "loc",
            Variant::AvgG => "avgg",
            Variant::GruG => "grug",
            Variant::GruD => "grud",
            Variant::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextEncoder {
    LogBilinear,
    Gru,
}

impl FromStr for ContextEncoder {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "logbilinear" => Ok(ContextEncoder::LogBilinear),
            "gru" => Ok(ContextEncoder::Gru),
            _ => Err(ModelError::ContextEncoder(s.to_string())),
        }
    }
}

impl fmt::Display for ContextEncoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextEncoder::LogBilinear => "logbilinear",
            ContextEncoder::Gru => "gru",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    pub context_encoder: ContextEncoder,
    /// Token and type embedding size E.
    pub embed: usize,
    /// Context and usage vector size H.
    pub hidden: usize,
    /// Tokens on each side of a context window, C.
    pub window: usize,
    /// Lexical usages kept on each side, L.
    pub lex_len: usize,
    /// Data-flow tree depth, D.
    pub tree_depth: usize,
    /// When false every variable's type is UnkType.
    pub use_types: bool,
    /// Lexemes seen fewer times than this map to UNK.
    pub min_lexeme_count: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Hybrid,
            context_encoder: ContextEncoder::LogBilinear,
            embed: 64,
            hidden: 64,
            window: 3,
            lex_len: 14,
            tree_depth: 15,
            use_types: true,
            min_lexeme_count: 2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 || self.embed == 0 || self.window == 0 {
            return Err(ModelError::Config("hidden, embed and window must be positive".into()));
        }
        if self.embed != self.hidden {
            return Err(ModelError::Config(format!(
                "embed ({}) must equal hidden ({}): type embeddings seed usage states",
                self.embed, self.hidden
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ContextParams {
    LogBilinear { prev: Vec<ParamId>, next: Vec<ParamId> },
    Gru { prev: GruCell, next: GruCell },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Ids {
    pub tokens: ParamId,
    pub types: ParamId,
    pub context: ContextParams,
    pub w_c: ParamId,
    pub grug: Option<(GruCell, GruCell, ParamId)>,
    pub grud: Option<(GruCell, GruCell, ParamId)>,
    pub w_h: Option<ParamId>,
}

/// Learned parameters plus the configuration and vocabulary they belong to.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamStore,
    pub(crate) ids: Ids,
}

impl Model {
    pub fn new(config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamStore::new();
        let (e, h) = (config.embed, config.hidden);
        let glorot = |i, o| Init::Glorot { fan_in: i, fan_out: o };
        let tokens = ps.add("embed.tokens", &[vocab.lexeme_rows(), e], glorot(1, e), &mut rng);
        let types = ps.add("embed.types", &[vocab.type_rows(), e], glorot(1, e), &mut rng);
        let context = match config.context_encoder {
            ContextEncoder::LogBilinear => ContextParams::LogBilinear {
                prev: (0..config.window)
                    .map(|i| ps.add(&format!("context.prev.{i}"), &[h, e], glorot(e, h), &mut rng))
                    .collect(),
                next: (0..config.window)
                    .map(|i| ps.add(&format!("context.next.{i}"), &[h, e], glorot(e, h), &mut rng))
                    .collect(),
            },
            ContextEncoder::Gru => ContextParams::Gru {
                prev: GruCell::new(&mut ps, "context.prev", e, h, &mut rng),
                next: GruCell::new(&mut ps, "context.next", e, h, &mut rng),
            },
        };
        let w_c = ps.add("context.W_C", &[h, 2 * h], glorot(2 * h, h), &mut rng);
        let v = config.variant;
        let grug = (v == Variant::GruG).then(|| {
            (
                GruCell::new(&mut ps, "grug.prev", h, h, &mut rng),
                GruCell::new(&mut ps, "grug.next", h, h, &mut rng),
                ps.add("grug.W_gru", &[h, 2 * h], glorot(2 * h, h), &mut rng),
            )
        });
        let grud = matches!(v, Variant::GruD | Variant::Hybrid).then(|| {
            (
                GruCell::new(&mut ps, "grud.prev", h, h, &mut rng),
                GruCell::new(&mut ps, "grud.next", h, h, &mut rng),
                ps.add("grud.W_D", &[h, 2 * h], glorot(2 * h, h), &mut rng),
            )
        });
        let w_h = (v == Variant::Hybrid).then(|| ps.add("hybrid.W_h", &[h, 2 * h], glorot(2 * h, h), &mut rng));
        let ids = Ids { tokens, types, context, w_c, grug, grud, w_h };
        Ok(Model { config, vocab, params: ps, ids })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }
}

/// A usage representation `u(t, v)` with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageVector {
    pub token: usize,
    pub symbol: SymbolId,
    pub variant: Variant,
    pub value: Vec<f64>,
}

/// `cᵀu`.
pub fn score(c: &[f64], u: &UsageVector) -> Result<f64, ModelError> {
    Ok(crate::nn::dot(c, &u.value)?)
}

/// Non-variable token texts of a program, for vocabulary building.
pub fn lexemes(program: &TypedProgram) -> impl Iterator<Item = &str> {
    program.tokens.iter().filter(|t| t.symbol.is_none()).map(|t| t.text.as_str())
}
