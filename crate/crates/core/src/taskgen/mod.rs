//! Task instances: snippet selection, placeholder substitution, candidate
//! sets, the line-delimited JSON instance format, the synthetic corpus
//! generator and file-level splits.

mod generate;
pub mod random;
mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{corpus_stats, generate_corpus, write_corpus, CorpusFile, CorpusStats, Profile};
pub use split::{split_corpus, CorpusSplit};

use crate::minilang::ast::{Block, Span, Stmt, StmtKind};
use crate::minilang::{MiniLangError, SymbolId, TypeLattice, TypedProgram};

pub const DEFAULT_MAX_TOKENS: usize = 80;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("snippet {lo}..{hi} has no variable use to fill in")]
    NoPlaceholders { lo: usize, hi: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed instance record: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Program { path: String, source: MiniLangError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TaskError + '_ {
    move |source| TaskError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placeholder {
    pub token: usize,
    pub truth: SymbolId,
    /// Every variable in scope at `token`, ascending by id.
    pub candidates: Vec<SymbolId>,
    /// Candidates whose declared type equals the truth's.
    pub same_type_candidates: Vec<SymbolId>,
}

/// A program whose snippet has its variable uses replaced by placeholders.
/// The program keeps the ground-truth bindings; models must only read them
/// through [`TaskInstance::static_occurrences`] and the truth of the item
/// being trained on.
#[derive(Debug, Clone)]
pub struct TaskInstance {
    pub id: String,
    pub program: TypedProgram,
    pub snippet_span: Span,
    /// Index of the function containing the snippet.
    pub function: usize,
    pub placeholders: Vec<Placeholder>,
}

impl TaskInstance {
    pub fn truth(&self) -> BTreeMap<usize, SymbolId> {
        self.placeholders.iter().map(|p| (p.token, p.truth)).collect()
    }

    pub fn placeholder_index(&self, t: usize) -> Option<usize> {
        self.placeholders.iter().position(|p| p.token == t)
    }

    pub fn is_placeholder(&self, t: usize) -> bool {
        self.placeholder_index(t).is_some()
    }

    /// Occurrences of each symbol of the snippet's function that are not
    /// placeholders.
    pub fn static_occurrences(&self) -> BTreeMap<SymbolId, Vec<usize>> {
        let holes: BTreeSet<usize> = self.placeholders.iter().map(|p| p.token).collect();
        let mut map = crate::dataflow::occurrences_by_symbol(&self.program, self.function);
        for occ in map.values_mut() {
            occ.retain(|t| !holes.contains(t));
        }
        map
    }

    /// Source text with every placeholder filled from `assignment`.
    pub fn substitute(&self, assignment: &BTreeMap<usize, SymbolId>) -> String {
        let rep = assignment.iter().map(|(&t, &v)| (t, self.program.symbol(v).name.clone())).collect();
        self.program.rewrite(&rep)
    }

    /// Token texts with placeholders shown as `<?k>`, for reports.
    pub fn masked_snippet(&self) -> String {
        (self.snippet_span.lo..self.snippet_span.hi)
            .map(|t| match self.placeholder_index(t) {
                Some(k) => format!("<?{k}>"),
                None => self.program.tokens[t].text.clone(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn sibling_runs(stmts: &[Stmt], out: &mut Vec<Span>) {
    for i in 0..stmts.len() {
        for j in i..stmts.len() {
            out.push(Span::new(stmts[i].span.lo, stmts[j].span.hi));
        }
    }
    for s in stmts {
        nested_runs(s, out);
    }
}

fn nested_runs(s: &Stmt, out: &mut Vec<Span>) {
    let body = |b: &Stmt, out: &mut Vec<Span>| match &b.kind {
        StmtKind::Block(blk) => block_runs(blk, out),
        _ => sibling_runs(std::slice::from_ref(b), out),
    };
    match &s.kind {
        StmtKind::If { then_branch, else_branch, .. } => {
            body(then_branch, out);
            if let Some(e) = else_branch {
                body(e, out);
            }
        }
        StmtKind::While { body: b, .. } | StmtKind::For { body: b, .. } => body(b, out),
        StmtKind::Block(blk) => block_runs(blk, out),
        _ => {}
    }
}

fn block_runs(b: &Block, out: &mut Vec<Span>) {
    sibling_runs(&b.stmts, out);
}

/// Every run of one or more consecutive sibling statements (including the
/// single statement under an unbraced `if`/`while`/`for`) that fits in
/// `max_tokens` tokens and contains at least one non-defining variable
/// occurrence. Sorted and deduplicated.
pub fn select_snippets(program: &TypedProgram, max_tokens: usize) -> Vec<Span> {
    let mut runs = Vec::new();
    for f in program.ast.functions() {
        block_runs(&f.body, &mut runs);
    }
    let set: BTreeSet<Span> = runs
        .into_iter()
        .filter(|s| s.len() <= max_tokens)
        .filter(|s| program.tokens[s.lo..s.hi].iter().any(|t| t.symbol.is_some() && !t.is_def))
        .collect();
    set.into_iter().collect()
}

/// Replaces every non-defining variable occurrence inside `span` with a
/// placeholder.
pub fn make_instance(program: &TypedProgram, span: Span) -> Result<TaskInstance, TaskError> {
    let function = program
        .function_at(span.lo)
        .ok_or(TaskError::NoPlaceholders { lo: span.lo, hi: span.hi })?;
    let placeholders: Vec<Placeholder> = program.tokens[span.lo..span.hi]
        .iter()
        .filter(|t| !t.is_def)
        .filter_map(|t| t.symbol.map(|v| (t.index, v)))
        .map(|(token, truth)| {
            let candidates = program.vars_in_scope(token);
            let ty = program.symbol(truth).declared_type;
            let same_type_candidates =
                candidates.iter().copied().filter(|c| program.symbol(*c).declared_type == ty).collect();
            Placeholder { token, truth, candidates, same_type_candidates }
        })
        .collect();
    if placeholders.is_empty() {
        return Err(TaskError::NoPlaceholders { lo: span.lo, hi: span.hi });
    }
    Ok(TaskInstance {
        id: format!("{}#{}-{}", program.file_id, span.lo, span.hi),
        program: program.clone(),
        snippet_span: span,
        function,
        placeholders,
    })
}

/// All instances of one program.
pub fn instances_of(program: &TypedProgram, max_tokens: usize) -> Vec<TaskInstance> {
    select_snippets(program, max_tokens).into_iter().filter_map(|s| make_instance(program, s).ok()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub text: String,
    pub kind: crate::minilang::TokenKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_id: Option<usize>,
    pub is_def: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRecord {
    pub name: String,
    pub supers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolRecord {
    pub id: usize,
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderRecord {
    pub token_index: usize,
    pub truth: usize,
    pub candidates: Vec<usize>,
    pub same_type_candidates: Vec<usize>,
}

/// One line of an instance file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub program_id: String,
    pub tokens: Vec<TokenRecord>,
    pub types: Vec<TypeRecord>,
    pub symbols: Vec<SymbolRecord>,
    pub snippet_span: [usize; 2],
    pub placeholders: Vec<PlaceholderRecord>,
}

fn ids(v: &[SymbolId]) -> Vec<usize> {
    v.iter().map(|s| s.0).collect()
}

impl InstanceRecord {
    pub fn from_instance(inst: &TaskInstance) -> Self {
        let p = &inst.program;
        let lat = &p.lattice;
        InstanceRecord {
            program_id: p.file_id.clone(),
            tokens: p
                .tokens
                .iter()
                .map(|t| TokenRecord { text: t.text.clone(), kind: t.kind, symbol_id: t.symbol.map(|s| s.0), is_def: t.is_def })
                .collect(),
            types: lat
                .infos()
                .iter()
                .map(|i| TypeRecord { name: i.name.clone(), supers: i.supers.iter().map(|s| lat.name(*s).to_string()).collect() })
                .collect(),
            symbols: p
                .symbols
                .iter()
                .map(|s| SymbolRecord { id: s.id.0, name: s.name.clone(), ty: lat.name(s.declared_type).to_string() })
                .collect(),
            snippet_span: [inst.snippet_span.lo, inst.snippet_span.hi],
            placeholders: inst
                .placeholders
                .iter()
                .map(|ph| PlaceholderRecord {
                    token_index: ph.token,
                    truth: ph.truth.0,
                    candidates: ids(&ph.candidates),
                    same_type_candidates: ids(&ph.same_type_candidates),
                })
                .collect(),
        }
    }

    /// Rebuilds the instance by re-checking the token text and verifying the
    /// recorded bindings, types and candidate sets against the result.
    pub fn to_instance(&self) -> Result<TaskInstance, TaskError> {
        let bad = |m: String| TaskError::Format(format!("{}: {m}", self.program_id));
        let source = self.tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        let program = TypedProgram::from_source(&source, &self.program_id)
            .map_err(|e| TaskError::Program { path: self.program_id.clone(), source: e })?;
        if program.tokens.len() != self.tokens.len() {
            return Err(bad("token count differs after re-tokenizing".into()));
        }
        for (t, r) in program.tokens.iter().zip(&self.tokens) {
            if t.text != r.text || t.kind != r.kind || t.symbol.map(|s| s.0) != r.symbol_id || t.is_def != r.is_def {
                return Err(bad(format!("token {} does not match", t.index)));
            }
        }
        let types: Vec<(String, Vec<String>)> = self.types.iter().map(|t| (t.name.clone(), t.supers.clone())).collect();
        let lattice = TypeLattice::from_infos(&types).map_err(|e| bad(e.to_string()))?;
        if lattice != program.lattice {
            return Err(bad("type lattice differs".into()));
        }
        for s in &self.symbols {
            let sym = program.symbols.get(s.id).ok_or_else(|| bad(format!("unknown symbol {}", s.id)))?;
            if sym.name != s.name || program.lattice.name(sym.declared_type) != s.ty {
                return Err(bad(format!("symbol {} does not match", s.id)));
            }
        }
        let span = Span::new(self.snippet_span[0], self.snippet_span[1]);
        let inst = make_instance(&program, span)?;
        let rebuilt = InstanceRecord::from_instance(&inst);
        if rebuilt.placeholders != self.placeholders {
            return Err(bad("placeholders do not match the program".into()));
        }
        Ok(inst)
    }
}

pub fn write_jsonl(path: &Path, instances: &[TaskInstance]) -> Result<(), TaskError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    for inst in instances {
        let line = serde_json::to_string(&InstanceRecord::from_instance(inst)).expect("records serialize");
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    f.flush().map_err(io_err(path))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TaskInstance>, TaskError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord =
            serde_json::from_str(&line).map_err(|e| TaskError::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(rec.to_instance()?);
    }
    Ok(out)
}

/// `.ml0` files under `dir`, as paths relative to it, sorted.
pub fn list_sources(dir: &Path) -> Result<Vec<String>, TaskError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<(), TaskError> {
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path.extension().is_some_and(|e| e == "ml0") {
                let rel = path.strip_prefix(root).expect("under root");
                out.push(rel.to_string_lossy().replace('\\', "/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

/// Checks every source file under `dir` (or only `files`, relative paths)
/// and extracts all instances.
pub fn extract_corpus(dir: &Path, files: Option<&[String]>, max_tokens: usize) -> Result<Vec<TaskInstance>, TaskError> {
    let all;
    let files = match files {
        Some(f) => f,
        None => {
            all = list_sources(dir)?;
            &all
        }
    };
    let mut out = Vec::new();
    for rel in files {
        let path = dir.join(rel);
        let src = fs::read_to_string(&path).map_err(io_err(&path))?;
        let program =
            TypedProgram::from_source(&src, rel).map_err(|e| TaskError::Program { path: rel.clone(), source: e })?;
        out.extend(instances_of(&program, max_tokens));
    }
    Ok(out)
}
