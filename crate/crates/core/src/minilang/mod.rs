//! MiniLang: a small statically typed language with nominal types, arrays,
//! extern functions and C-style statements.
//!
//! The front end runs in three stages: [`tokenize`], [`parse`] and [`check`].
//! A checked [`TypedProgram`] binds every variable occurrence to a [`Symbol`],
//! records each symbol's scope as a token interval and carries the file's
//! [`TypeLattice`].

pub mod ast;
mod check;
pub mod fixtures;
mod lattice;
mod lexer;
mod parser;
mod pretty;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{check, check_with_holes, FunctionInfo, Symbol, TypedProgram};
pub use lattice::{TypeInfo, TypeLattice, UNK_TYPE_NAME};
pub use lexer::{reconstruct, tokenize, Token, TokenKind, KEYWORDS};
pub use parser::{parse, parse_statements};
pub use pretty::pretty_print;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at {line}:{col}: {message}")]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at token {index}: expected one of {expected:?}, found {found:?}")]
pub struct ParseError {
    pub index: usize,
    pub expected: Vec<String>,
    pub found: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("type error at token {token}: {message}")]
    Type { token: usize, message: String },
    #[error("undeclared name `{name}` at token {token}")]
    Name { token: usize, name: String },
    #[error("`{name}` redeclared at token {token}")]
    Redecl { token: usize, name: String },
    #[error("invalid type lattice: {0}")]
    Lattice(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MiniLangError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckError),
}
