//! Learning to fill in the variables of pasted code.
//!
//! A snippet pasted into an existing MiniLang program has its variable uses
//! replaced by placeholders; the models in this crate score each in-scope
//! variable for each placeholder from its lexical and data-flow usage
//! contexts, and [`infer::icm`] picks a joint assignment.

pub mod minilang;
pub mod models;
pub mod nn;
pub mod dataflow;
pub mod infer;
pub mod oracle;
pub mod taskgen;
pub mod train;
pub mod eval;
