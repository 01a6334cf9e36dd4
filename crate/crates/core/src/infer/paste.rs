use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{icm, IcmConfig, Ranker};
use crate::minilang::ast::Span;
use crate::minilang::{check_with_holes, parse, parse_statements, tokenize, SymbolId};
use crate::models::{Model, ModelError, Scene};
use crate::taskgen::{Placeholder, TaskInstance};

#[derive(Debug, Error)]
pub enum PasteError {
    #[error("cannot splice snippet: {0}")]
    Splice(String),
    #[error("no variable in scope for `{name}` at {line}:{col}")]
    NoCandidates { name: String, line: u32, col: u32 },
    #[error("snippet has no variable uses to fill")]
    NoPlaceholders,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceholderReport {
    pub token: usize,
    pub line: u32,
    pub col: u32,
    /// Identifier written in the snippet.
    pub original: String,
    pub chosen: String,
    /// Candidates with probabilities under the final assignment, best first.
    pub ranking: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PasteReport {
    pub placeholders: Vec<PlaceholderReport>,
    pub log_prob: f64,
}

impl fmt::Display for PasteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.placeholders.iter().enumerate() {
            write!(f, "?{k} {}:{} ({})", p.line, p.col, p.original)?;
            for (name, prob) in &p.ranking {
                write!(f, "  {name}: {:.0}%", prob * 100.0)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PasteResult {
    pub source: String,
    pub report: PasteReport,
}

/// Byte offset of 1-based `line`:`col` in `source`.
fn offset_of(source: &str, line: u32, col: u32) -> Option<usize> {
    if line == 0 || col == 0 {
        return None;
    }
    let mut start = 0;
    for _ in 1..line {
        start += source[start..].find('\n')? + 1;
    }
    let text = source[start..].split('\n').next().unwrap_or("");
    let byte = text.char_indices().map(|(i, _)| i).chain([text.len()]).nth(col as usize - 1)?;
    Some(start + byte)
}

/// Inserts `snippet` at `line`:`col` of `target`, replaces every variable
/// use in it by a placeholder, fills the placeholders by ICM and returns the
/// rewritten program with a per-placeholder report.
pub fn paste<R: Rng>(
    model: &Model,
    target: &str,
    snippet: &str,
    line: u32,
    col: u32,
    config: &IcmConfig,
    rng: &mut R,
) -> Result<PasteResult, PasteError> {
    let snippet_tokens = tokenize(snippet).map_err(|e| PasteError::Splice(e.to_string()))?;
    parse_statements(&snippet_tokens).map_err(|e| PasteError::Splice(format!("snippet: {e}")))?;
    let off = offset_of(target, line, col).ok_or_else(|| PasteError::Splice(format!("no position {line}:{col} in target")))?;
    let body = snippet.trim_end();
    let source = format!("{}{body}\n{}{}", &target[..off], " ".repeat(col as usize - 1), &target[off..]);
    let tokens = tokenize(&source).map_err(|e| PasteError::Splice(e.to_string()))?;
    let lo = tokens.partition_point(|t| t.offset < off);
    let hi = tokens.partition_point(|t| t.offset < off + body.len());
    let ast = parse(&tokens).map_err(|e| PasteError::Splice(e.to_string()))?;
    let program = check_with_holes(ast, tokens, &source, "paste", Some(Span::new(lo, hi)))
        .map_err(|e| PasteError::Splice(e.to_string()))?;
    let function = program.function_at(lo).ok_or_else(|| PasteError::Splice("insertion point is not inside a function".into()))?;
    let mut placeholders = Vec::new();
    for &t in &program.holes {
        let tok = &program.tokens[t];
        let candidates = program.vars_in_scope(t);
        let Some(&first) = candidates.first() else {
            return Err(PasteError::NoCandidates { name: tok.text.clone(), line: tok.line, col: tok.col });
        };
        placeholders.push(Placeholder { token: t, truth: tok.symbol.unwrap_or(first), candidates, same_type_candidates: Vec::new() });
    }
    if placeholders.is_empty() {
        return Err(PasteError::NoPlaceholders);
    }
    let instance = TaskInstance { id: "paste".into(), program, snippet_span: Span::new(lo, hi), function, placeholders };
    let scene = Scene::new(&instance);
    let mut ranker = Ranker::new(model, &scene);
    let outcome = icm(&mut ranker, config, rng)?;
    let chosen: &BTreeMap<usize, SymbolId> = &outcome.assignment.values;
    let p = &instance.program;
    let mut reports = Vec::new();
    for (k, ph) in instance.placeholders.iter().enumerate() {
        let r = ranker.rank(k, chosen)?;
        let tok = &p.tokens[ph.token];
        reports.push(PlaceholderReport {
            token: ph.token,
            line: tok.line,
            col: tok.col,
            original: tok.text.clone(),
            chosen: p.symbol(chosen[&ph.token]).name.clone(),
            ranking: r.entries.iter().map(|e| (p.symbol(e.0).name.clone(), e.1)).collect(),
        });
    }
    let source = instance.substitute(chosen);
    Ok(PasteResult { source, report: PasteReport { placeholders: reports, log_prob: outcome.assignment.log_prob } })
}
