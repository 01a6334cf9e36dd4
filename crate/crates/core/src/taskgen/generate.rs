//! Synthetic MiniLang corpus: one directory per project, each project with
//! its own nominal type lattice.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{io_err, TaskError, TaskInstance};

/// Program families the generator can draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Array loops, accumulators, string and path handling through externs,
    /// flag checks and nominal types, with same-type distractors.
    Mixed,
    /// Every variable of a function has a distinct type and every use sits
    /// in a type-revealing position.
    TypeSeparable,
    /// Array loops whose int variables play the roles counter, accumulator,
    /// bound and threshold, declared in random order.
    LoopRoles,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mixed" => Ok(Profile::Mixed),
            "typesep" | "type-separable" => Ok(Profile::TypeSeparable),
            "loops" | "loop-roles" => Ok(Profile::LoopRoles),
            _ => Err(format!("unknown profile {s:?} (expected mixed, typesep or loops)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub project: String,
    pub name: String,
    pub source: String,
}

impl CorpusFile {
    pub fn path(&self) -> String {
        format!("{}/{}", self.project, self.name)
    }
}

const PRELUDE: &str = "\
extern fn len(int[]) -> int;
extern fn count(string[]) -> int;
extern fn strlen(string) -> int;
extern fn concat(string, string) -> string;
extern fn itoa(int) -> string;
extern fn print(string) -> void;
extern fn isEmpty(string) -> bool;
extern fn joinPath(string, string) -> string;
extern fn baseName(string) -> string;
extern fn contains(string, string) -> bool;
";

const TYPE_STEMS: [&str; 10] = ["Node", "Path", "Buffer", "Token", "Record", "Widget", "Message", "Account", "Frame", "Entry"];
const IFACE_STEMS: [&str; 3] = ["Named", "Sized", "Valid"];

const NAMES: [&str; 40] = [
    "i", "j", "k", "n", "m", "idx", "pos", "total", "sum", "acc", "count", "limit", "lim", "bound", "size", "len0",
    "th", "cutoff", "min0", "max0", "res", "val", "cur", "prev", "next0", "tmp", "x", "y", "z", "w", "a0", "b0",
    "first", "last", "step", "num", "hits", "score", "best", "low",
];
const STR_NAMES: [&str; 12] = ["s", "name", "label", "dir", "file", "path", "out", "sep", "prefix", "text", "base", "msg"];
const BOOL_NAMES: [&str; 8] = ["flag", "found", "done", "ok", "valid", "absolute", "dirty", "seen"];
const ARR_NAMES: [&str; 8] = ["arr", "xs", "values", "data", "items", "nums", "buf", "parts"];

/// A project's nominal types and their externs.
struct ProjectTypes {
    decls: String,
    /// (type name, stem)
    concrete: Vec<(String, &'static str)>,
}

fn project_types(rng: &mut ChaCha8Rng, p: usize) -> ProjectTypes {
    let ifaces: Vec<String> = IFACE_STEMS.iter().map(|s| format!("{s}{p}")).collect();
    let mut stems = TYPE_STEMS.to_vec();
    stems.shuffle(rng);
    let n = rng.gen_range(3..=4);
    let mut decls = String::new();
    for i in &ifaces {
        decls.push_str(&format!("type {i};\n"));
    }
    let mut concrete = Vec::new();
    for stem in stems.into_iter().take(n) {
        let name = format!("{stem}{p}");
        // always Named so nameOf applies; other interfaces at random
        let mut sup = vec![ifaces[0].clone()];
        for i in &ifaces[1..] {
            if rng.gen_bool(0.5) {
                sup.push(i.clone());
            }
        }
        decls.push_str(&format!("type {name} implements {};\n", sup.join(", ")));
        concrete.push((name, stem));
    }
    decls.push_str(&format!("extern fn nameOf({}) -> string;\n", ifaces[0]));
    decls.push_str(&format!("extern fn sizeOf({}) -> int;\n", ifaces[1]));
    decls.push_str(&format!("extern fn isValid({}) -> bool;\n", ifaces[0]));
    for (name, stem) in &concrete {
        decls.push_str(&format!("extern fn make{stem}(int) -> {name};\n"));
        decls.push_str(&format!("extern fn label{stem}({name}) -> string;\n"));
        decls.push_str(&format!("extern fn weight{stem}({name}) -> int;\n"));
    }
    ProjectTypes { decls, concrete }
}

/// Emits one function; hands out fresh, non-shadowing names.
struct Func {
    used: BTreeSet<String>,
    lines: Vec<String>,
    indent: usize,
}

impl Func {
    fn new() -> Self {
        Func { used: BTreeSet::new(), lines: Vec::new(), indent: 1 }
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng, pool: &[&str]) -> String {
        let mut opts: Vec<&str> = pool.iter().copied().filter(|n| !self.used.contains(*n)).collect();
        opts.sort_unstable();
        let name = match opts.choose(rng) {
            Some(n) => n.to_string(),
            None => {
                let mut k = self.used.len();
                while self.used.contains(&format!("v{k}")) {
                    k += 1;
                }
                format!("v{k}")
            }
        };
        self.used.insert(name.clone());
        name
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.lines.push(format!("{}{}", "    ".repeat(self.indent), s.as_ref()));
    }

    fn open(&mut self, s: impl AsRef<str>) {
        self.line(format!("{} {{", s.as_ref()));
        self.indent += 1;
    }

    fn close(&mut self) {
        self.indent -= 1;
        self.line("}");
    }

    fn finish(self, header: String) -> String {
        let mut out = format!("{header} {{\n");
        for l in self.lines {
            out.push_str(&l);
            out.push('\n');
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Counter,
    Acc,
    Bound,
    Thresh,
}

/// Array loop with int variables in the four roles. Declaration order of the
/// int roles is a uniform random permutation so that declaration order says
/// nothing about the role.
fn loop_roles_fn(rng: &mut ChaCha8Rng, fname: &str, extras: bool) -> String {
    let mut f = Func::new();
    let arr = f.fresh(rng, &ARR_NAMES);
    let for_decl = rng.gen_bool(0.2);
    let has_bound = rng.gen_bool(0.8);
    let has_thresh = rng.gen_bool(0.7);
    let mut roles = vec![Role::Acc];
    if !for_decl {
        roles.push(Role::Counter);
    }
    if has_bound {
        roles.push(Role::Bound);
    }
    if has_thresh {
        roles.push(Role::Thresh);
    }
    roles.shuffle(rng);
    let names: Vec<(Role, String)> = roles.iter().map(|&r| (r, f.fresh(rng, &NAMES))).collect();
    let name = |r: Role| names.iter().find(|(x, _)| *x == r).map(|(_, n)| n.clone());
    let counter = name(Role::Counter).unwrap_or_else(|| f.fresh(rng, &NAMES));
    let acc = name(Role::Acc).unwrap();

    let n_params = rng.gen_range(0..=roles.len());
    let mut params: Vec<String> = names[..n_params].iter().map(|(_, n)| format!("int {n}")).collect();
    params.insert(rng.gen_range(0..=params.len()), format!("int[] {arr}"));
    let flag = (extras && rng.gen_bool(0.4)).then(|| f.fresh(rng, &BOOL_NAMES));
    let label = (extras && rng.gen_bool(0.4)).then(|| f.fresh(rng, &STR_NAMES));
    if let Some(l) = &label {
        params.push(format!("string {l}"));
    }

    let thresh_lit = rng.gen_range(0..10).to_string();
    let th = name(Role::Thresh).unwrap_or(thresh_lit);
    let bound_expr = name(Role::Bound).unwrap_or_else(|| format!("len({arr})"));
    let mut pending = Vec::new();
    for (role, n) in &names[n_params..] {
        let init = match role {
            Role::Acc | Role::Counter => "0".to_string(),
            Role::Bound => format!("len({arr})"),
            Role::Thresh => rng.gen_range(0..10).to_string(),
        };
        if rng.gen_bool(0.5) {
            f.line(format!("int {n} = {init};"));
        } else {
            f.line(format!("int {n};"));
            pending.push(format!("{n} = {init};"));
        }
    }
    if let Some(fl) = &flag {
        f.line(format!("bool {fl} = false;"));
    }
    for p in pending {
        f.line(p);
    }

    let body = match rng.gen_range(0..6) {
        0 => format!("{acc} += {arr}[{counter}];"),
        1 => format!("if ({arr}[{counter}] > {th}) {acc} += {arr}[{counter}];"),
        2 => format!("if ({arr}[{counter}] > {th}) {acc}++;"),
        3 => format!("if ({arr}[{counter}] > {acc}) {acc} = {arr}[{counter}];"),
        4 => format!("if ({arr}[{counter}] < {th}) {acc} -= {arr}[{counter}];"),
        _ => format!("{acc} = {acc} + {arr}[{counter}] * {th};"),
    };
    let braces = rng.gen_bool(0.5);
    let cmp = if rng.gen_bool(0.8) { "<" } else { "!=" };
    if !for_decl && rng.gen_bool(0.3) {
        f.line(format!("{counter} = 0;"));
        f.open(format!("while ({counter} {cmp} {bound_expr})"));
        f.line(body);
        f.line(format!("{counter}++;"));
        f.close();
    } else {
        let init = if for_decl { format!("int {counter} = 0") } else { format!("{counter} = 0") };
        let head = format!("for ({init}; {counter} {cmp} {bound_expr}; {counter}++)");
        if braces {
            f.open(head);
            f.line(body);
            f.close();
        } else {
            f.line(head);
            f.indent += 1;
            f.line(body);
            f.indent -= 1;
        }
    }
    if let Some(fl) = &flag {
        f.line(format!("if ({acc} > {th}) {fl} = true;"));
        f.line(format!("if ({fl}) {acc} = 0;"));
    }
    if let Some(l) = &label {
        f.line(format!("print(concat({l}, itoa({acc})));"));
    }
    f.line(format!("return {acc};"));
    f.finish(format!("int {fname}({})", params.join(", ")))
}

fn string_fn(rng: &mut ChaCha8Rng, fname: &str) -> String {
    let mut f = Func::new();
    let parts = f.fresh(rng, &ARR_NAMES);
    let sep = f.fresh(rng, &STR_NAMES);
    let out = f.fresh(rng, &STR_NAMES);
    let k = f.fresh(rng, &NAMES);
    let skipped = f.fresh(rng, &NAMES);
    let mut params = vec![format!("string[] {parts}"), format!("string {sep}")];
    params.shuffle(rng);
    let prefix = rng.gen_bool(0.5).then(|| f.fresh(rng, &STR_NAMES));
    if let Some(p) = &prefix {
        params.push(format!("string {p}"));
    }
    let mut decls = vec![format!("string {out} = \"\";"), format!("int {k} = 0;"), format!("int {skipped} = 0;")];
    decls.shuffle(rng);
    for d in decls {
        f.line(d);
    }
    if let Some(p) = &prefix {
        f.line(format!("{out} = concat({out}, {p});"));
    }
    f.open(format!("while ({k} < count({parts}))"));
    f.open(format!("if (isEmpty({parts}[{k}]))"));
    f.line(format!("{skipped}++;"));
    f.close();
    f.open("else");
    f.line(format!("{out} = concat({out}, {parts}[{k}]);"));
    f.line(format!("{out} = concat({out}, {sep});"));
    f.close();
    f.line(format!("{k}++;"));
    f.close();
    if rng.gen_bool(0.5) {
        f.line(format!("print(concat(itoa({skipped}), {sep}));"));
    }
    f.line(format!("return {out};"));
    f.finish(format!("string {fname}({})", params.join(", ")))
}

fn path_fn(rng: &mut ChaCha8Rng, fname: &str) -> String {
    let mut f = Func::new();
    let dir = f.fresh(rng, &STR_NAMES);
    let file = f.fresh(rng, &STR_NAMES);
    let root = f.fresh(rng, &STR_NAMES);
    let abs = f.fresh(rng, &BOOL_NAMES);
    let full = f.fresh(rng, &STR_NAMES);
    let base = f.fresh(rng, &STR_NAMES);
    let mut params = vec![format!("string {dir}"), format!("string {file}"), format!("bool {abs}"), format!("string {root}")];
    params.shuffle(rng);
    f.line(format!("string {full} = joinPath({dir}, {file});"));
    f.open(format!("if (!{abs})"));
    f.line(format!("{full} = joinPath({root}, {full});"));
    f.close();
    f.line(format!("string {base} = baseName({full});"));
    if rng.gen_bool(0.5) {
        f.open(format!("if (contains({base}, {dir}))"));
        f.line(format!("print({base});"));
        f.close();
    } else {
        f.line(format!("print({base});"));
    }
    f.line(format!("return {full};"));
    f.finish(format!("string {fname}({})", params.join(", ")))
}

fn search_fn(rng: &mut ChaCha8Rng, fname: &str) -> String {
    let mut f = Func::new();
    let xs = f.fresh(rng, &ARR_NAMES);
    let target = f.fresh(rng, &NAMES);
    let found = f.fresh(rng, &BOOL_NAMES);
    let idx = f.fresh(rng, &NAMES);
    let hits = f.fresh(rng, &NAMES);
    let mut params = vec![format!("int[] {xs}"), format!("int {target}")];
    params.shuffle(rng);
    let mut decls = vec![format!("bool {found} = false;"), format!("int {idx};"), format!("int {hits} = 0;")];
    decls.shuffle(rng);
    for d in decls {
        f.line(d);
    }
    f.open(format!("for ({idx} = 0; {idx} < len({xs}); {idx}++)"));
    f.open(format!("if ({xs}[{idx}] == {target})"));
    f.line(format!("{found} = true;"));
    f.line(format!("{hits}++;"));
    f.close();
    f.close();
    if rng.gen_bool(0.5) {
        f.line(format!("if ({hits} > 1) {found} = false;"));
    }
    f.line(format!("return {found};"));
    f.finish(format!("bool {fname}({})", params.join(", ")))
}

fn nominal_fn(rng: &mut ChaCha8Rng, fname: &str, types: &ProjectTypes) -> String {
    let mut f = Func::new();
    let mut picks = types.concrete.clone();
    picks.shuffle(rng);
    let (ta, sa) = picks[0].clone();
    let (tb, sb) = picks[1].clone();
    let a = f.fresh(rng, &["node", "item", "elem", "obj", "src"]);
    let b = f.fresh(rng, &["other", "dst", "peer", "target", "ref0"]);
    let depth = f.fresh(rng, &NAMES);
    let label = f.fresh(rng, &STR_NAMES);
    let w = f.fresh(rng, &NAMES);
    let mut params = vec![format!("{ta} {a}"), format!("int {depth}")];
    params.shuffle(rng);
    f.line(format!("{tb} {b} = make{sb}({depth});"));
    f.line(format!("string {label} = nameOf({a});"));
    f.line(format!("int {w} = weight{sa}({a}) + weight{sb}({b});"));
    f.open(format!("if (isValid({a}) && {w} > {depth})"));
    f.line(format!("{label} = concat({label}, label{sb}({b}));"));
    f.close();
    if rng.gen_bool(0.5) {
        f.line(format!("{label} = concat({label}, itoa({w}));"));
    }
    f.line(format!("print({label});"));
    f.line(format!("return {w};"));
    f.finish(format!("int {fname}({})", params.join(", ")))
}

/// Each variable gets its own type; every use sits next to a token that
/// pins the type down.
fn type_separable_fn(rng: &mut ChaCha8Rng, fname: &str, types: &ProjectTypes) -> String {
    #[derive(Clone, Copy)]
    enum K {
        Int,
        Bool,
        Str,
        Arr,
        Nom(usize),
    }
    let mut kinds = vec![K::Int, K::Bool, K::Str, K::Arr];
    kinds.extend((0..types.concrete.len()).map(K::Nom));
    kinds.shuffle(rng);
    let n = rng.gen_range(3..=kinds.len().min(6));
    kinds.truncate(n);
    let mut f = Func::new();
    let vars: Vec<(K, String)> = kinds
        .iter()
        .map(|&k| {
            let pool: &[&str] = match k {
                K::Int => &NAMES,
                K::Bool => &BOOL_NAMES,
                K::Str => &STR_NAMES,
                K::Arr => &ARR_NAMES,
                K::Nom(_) => &["node", "item", "elem", "obj", "src", "other", "peer"],
            };
            (k, f.fresh(rng, pool))
        })
        .collect();
    let ty = |k: K| match k {
        K::Int => "int".to_string(),
        K::Bool => "bool".to_string(),
        K::Str => "string".to_string(),
        K::Arr => "int[]".to_string(),
        K::Nom(i) => types.concrete[i].0.clone(),
    };
    let n_params = rng.gen_range(1..=vars.len());
    let params: Vec<String> = vars[..n_params].iter().map(|(k, v)| format!("{} {v}", ty(*k))).collect();
    for (k, v) in &vars[n_params..] {
        let init = match k {
            K::Int => "0".to_string(),
            K::Bool => "false".to_string(),
            K::Str => "\"\"".to_string(),
            K::Arr => "new0()".to_string(),
            K::Nom(i) => format!("make{}(1)", types.concrete[*i].1),
        };
        if matches!(k, K::Arr) {
            // no array literals: arrays are always parameters
            continue;
        }
        f.line(format!("{} {v} = {init};", ty(*k)));
    }
    let live: Vec<(K, String)> = vars
        .iter()
        .enumerate()
        .filter(|(i, (k, _))| *i < n_params || !matches!(k, K::Arr))
        .map(|(_, x)| x.clone())
        .collect();
    let n_stmts = rng.gen_range(4..=8);
    for _ in 0..n_stmts {
        let (k, v) = live.choose(rng).unwrap().clone();
        let s = match (k, rng.gen_range(0..3)) {
            (K::Int, 0) => format!("{v}++;"),
            (K::Int, 1) => format!("{v} -= 2;"),
            (K::Int, _) => format!("print(itoa({v}));"),
            (K::Bool, 0) => format!("{v} = !{v};"),
            (K::Bool, 1) => format!("if ({v}) print(\"y\");"),
            (K::Bool, _) => format!("{v} = !{v} && true;"),
            (K::Str, 0) => format!("print({v});"),
            (K::Str, 1) => format!("{v} = concat({v}, \"-\");"),
            (K::Str, _) => format!("{v} = baseName({v});"),
            (K::Arr, 0) => format!("{v}[0] = len({v});"),
            (K::Arr, 1) => format!("print(itoa(len({v})));"),
            (K::Arr, _) => format!("{v}[1] = {v}[0] * 2;"),
            (K::Nom(i), 0) => format!("print(label{}({v}));", types.concrete[i].1),
            (K::Nom(i), 1) => format!("print(itoa(weight{}({v})));", types.concrete[i].1),
            (K::Nom(i), _) => format!("{v} = make{}(weight{}({v}));", types.concrete[i].1, types.concrete[i].1),
        };
        f.line(s);
    }
    f.finish(format!("void {fname}({})", params.join(", ")))
}

fn fn_name(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>, stem: &str) -> String {
    loop {
        let n = format!("{stem}{}", rng.gen_range(0..1000));
        if used.insert(n.clone()) {
            return n;
        }
    }
}

fn file_source(rng: &mut ChaCha8Rng, profile: Profile, types: &ProjectTypes) -> String {
    let mut src = String::from(PRELUDE);
    src.push_str(&types.decls);
    src.push('\n');
    let mut used = BTreeSet::new();
    let n_fns = match profile {
        Profile::LoopRoles => 1,
        _ => rng.gen_range(2..=3),
    };
    for _ in 0..n_fns {
        let (stem, kind) = match profile {
            Profile::LoopRoles => ("Reduce", 0),
            Profile::TypeSeparable => ("Touch", 5),
            Profile::Mixed => [("Reduce", 0), ("Join", 1), ("Resolve", 2), ("Find", 3), ("Describe", 4)][rng.gen_range(0..5)],
        };
        let name = fn_name(rng, &mut used, stem);
        let f = match kind {
            0 => loop_roles_fn(rng, &name, true),
            1 => string_fn(rng, &name),
            2 => path_fn(rng, &name),
            3 => search_fn(rng, &name),
            4 => nominal_fn(rng, &name, types),
            _ => type_separable_fn(rng, &name, types),
        };
        src.push_str(&f);
        src.push('\n');
    }
    src
}

/// Deterministic in `seed`; every file passes the checker.
pub fn generate_corpus(seed: u64, n_projects: usize, files_per_project: usize, profile: Profile) -> Vec<CorpusFile> {
    let mut files = Vec::new();
    for p in 0..n_projects {
        let mut prng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(p as u64));
        let types = project_types(&mut prng, p);
        for i in 0..files_per_project {
            let mut frng = ChaCha8Rng::seed_from_u64(prng.gen::<u64>() ^ i as u64);
            files.push(CorpusFile {
                project: format!("proj{p:02}"),
                name: format!("f{i:03}.ml0"),
                source: file_source(&mut frng, profile, &types),
            });
        }
    }
    files
}

pub fn write_corpus(dir: &Path, files: &[CorpusFile]) -> Result<(), TaskError> {
    for f in files {
        let d = dir.join(&f.project);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
        let path = d.join(&f.name);
        fs::write(&path, &f.source).map_err(io_err(&path))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub instances: usize,
    pub placeholders: usize,
    pub mean_candidates: f64,
    pub mean_same_type: f64,
    pub median_same_type: f64,
}

pub fn corpus_stats(instances: &[TaskInstance]) -> CorpusStats {
    let mut same: Vec<usize> = Vec::new();
    let mut cands = 0usize;
    for inst in instances {
        for ph in &inst.placeholders {
            same.push(ph.same_type_candidates.len());
            cands += ph.candidates.len();
        }
    }
    same.sort_unstable();
    let n = same.len();
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => same[n / 2] as f64,
        _ => (same[n / 2 - 1] + same[n / 2]) as f64 / 2.0,
    };
    CorpusStats {
        instances: instances.len(),
        placeholders: n,
        mean_candidates: if n == 0 { 0.0 } else { cands as f64 / n as f64 },
        mean_same_type: if n == 0 { 0.0 } else { same.iter().sum::<usize>() as f64 / n as f64 },
        median_same_type: median,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::TypedProgram;
    use crate::taskgen::instances_of;

    fn check_all(files: &[CorpusFile]) -> Vec<TaskInstance> {
        let mut out = Vec::new();
        for f in files {
            let p = TypedProgram::from_source(&f.source, &f.path()).unwrap_or_else(|e| panic!("{e}\n{}", f.source));
            out.extend(instances_of(&p, 80));
        }
        out
    }

    #[test]
    fn every_profile_checks() {
        for profile in [Profile::Mixed, Profile::TypeSeparable, Profile::LoopRoles] {
            let files = generate_corpus(11, 3, 15, profile);
            assert!(!check_all(&files).is_empty());
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_corpus(1, 1, 1, Profile::Mixed);
        assert_eq!(a, generate_corpus(1, 1, 1, Profile::Mixed));
        assert_ne!(a, generate_corpus(2, 1, 1, Profile::Mixed));
    }

    #[test]
    fn projects_have_disjoint_lattices() {
        let files = generate_corpus(3, 5, 1, Profile::Mixed);
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for f in &files {
            let p = TypedProgram::from_source(&f.source, "x").unwrap();
            let nominal: BTreeSet<String> = p.lattice.infos()[5..]
                .iter()
                .map(|i| i.name.clone())
                .filter(|n| !n.ends_with("[]"))
                .collect();
            assert!(!nominal.is_empty());
            assert!(seen.is_disjoint(&nominal));
            seen.extend(nominal);
        }
    }

    #[test]
    fn mixed_has_same_type_competition() {
        let stats = corpus_stats(&check_all(&generate_corpus(4, 4, 10, Profile::Mixed)));
        assert!(stats.mean_same_type >= 2.0, "{stats:?}");
    }

    #[test]
    fn type_separable_truth_is_unique_of_its_type() {
        for inst in check_all(&generate_corpus(5, 2, 10, Profile::TypeSeparable)) {
            for ph in &inst.placeholders {
                assert_eq!(ph.same_type_candidates, vec![ph.truth], "{}", inst.id);
            }
        }
    }
}
