//! Name resolution, scope computation and type checking.

use std::collections::{BTreeMap, HashMap};

use super::ast::*;
use super::lattice::TypeLattice;
use super::lexer::{tokenize, Token};
use super::parser::parse;
use super::{CheckError, MiniLangError, SymbolId, TypeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub id: SymbolId,
    pub name: String,
    pub declared_type: TypeId,
    /// Token interval in which the symbol may be referenced.
    pub scope_span: Span,
    pub decl_token: usize,
    /// Index into [`TypedProgram::functions`].
    pub function: usize,
    pub is_param: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionInfo {
    pub name: String,
    pub span: Span,
    pub params: Vec<SymbolId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Signature {
    params: Vec<TypeId>,
    ret: TypeId,
}

/// A checked source file. Immutable once built.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub file_id: String,
    pub source: String,
    pub tokens: Vec<Token>,
    pub ast: Program,
    pub symbols: Vec<Symbol>,
    pub lattice: TypeLattice,
    pub functions: Vec<FunctionInfo>,
    /// Variable-position identifiers inside the hole span (see [`check_with_holes`]).
    pub holes: Vec<usize>,
}

impl TypedProgram {
    /// Tokenize, parse and check a source file.
    pub fn from_source(source: &str, file_id: &str) -> Result<Self, MiniLangError> {
        let tokens = tokenize(source)?;
        let ast = parse(&tokens)?;
        Ok(check(ast, tokens, source, file_id)?)
    }

    pub fn symbol(&self, id: SymbolId) -> &Symbol {
        &self.symbols[id.0]
    }

    pub fn function_at(&self, t: usize) -> Option<usize> {
        self.functions.iter().position(|f| f.span.contains(t))
    }

    /// Symbols visible at token `t`, ordered by id.
    pub fn vars_in_scope(&self, t: usize) -> Vec<SymbolId> {
        self.symbols
            .iter()
            .filter(|s| s.scope_span.contains(t) && s.decl_token < t)
            .map(|s| s.id)
            .collect()
    }

    /// Token indices at which `v` occurs, ascending.
    pub fn occurrences(&self, v: SymbolId) -> Vec<usize> {
        self.tokens.iter().filter(|t| t.symbol == Some(v)).map(|t| t.index).collect()
    }

    pub fn symbol_by_name(&self, function: usize, name: &str) -> Option<SymbolId> {
        self.symbols.iter().find(|s| s.function == function && s.name == name).map(|s| s.id)
    }

    /// Source text with token `t` replaced by `text` for every `(t, text)` pair.
    pub fn rewrite(&self, replacements: &BTreeMap<usize, String>) -> String {
        let mut out = String::with_capacity(self.source.len());
        let mut prev = 0;
        for t in &self.tokens {
            out.push_str(&self.source[prev..t.offset]);
            match replacements.get(&t.index) {
                Some(r) => out.push_str(r),
                None => out.push_str(&t.text),
            }
            prev = t.offset + t.text.len();
        }
        out.push_str(&self.source[prev..]);
        out
    }
}

pub fn check(ast: Program, tokens: Vec<Token>, source: &str, file_id: &str) -> Result<TypedProgram, CheckError> {
    check_with_holes(ast, tokens, source, file_id, None)
}

/// Like [`check`], but variable references inside `holes` are allowed to be
/// unresolved; such references type as UnkType. References that do resolve
/// still record their symbol.
pub fn check_with_holes(
    ast: Program,
    tokens: Vec<Token>,
    source: &str,
    file_id: &str,
    holes: Option<Span>,
) -> Result<TypedProgram, CheckError> {
    let decls: Vec<(String, Vec<String>)> = ast
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Type(t) => Some((t.name.clone(), t.supers.clone())),
            _ => None,
        })
        .collect();
    let lattice = TypeLattice::from_decls(&decls)?;
    let mut cx = Checker {
        tokens,
        lattice,
        symbols: Vec::new(),
        functions: Vec::new(),
        sigs: HashMap::new(),
        scopes: Vec::new(),
        ret: TypeLattice::VOID,
        current_fn: 0,
        holes,
        hole_tokens: Vec::new(),
    };
    for item in &ast.items {
        let (name, params, ret, span) = match item {
            Item::Extern(e) => (&e.name, e.params.clone(), e.ret.clone(), e.span),
            Item::Function(f) => (&f.name, f.params.iter().map(|p| p.ty.clone()).collect(), f.ret.clone(), f.span),
            Item::Type(_) => continue,
        };
        let params = params.iter().map(|p| cx.resolve_type(p, span.lo, false)).collect::<Result<Vec<_>, _>>()?;
        let ret = cx.resolve_type(&ret, span.lo, true)?;
        if cx.sigs.insert(name.clone(), Signature { params, ret }).is_some() {
            return Err(CheckError::Redecl { token: span.lo, name: name.clone() });
        }
    }
    for item in &ast.items {
        if let Item::Function(f) = item {
            cx.function(f)?;
        }
    }
    let mut holes = cx.hole_tokens;
    holes.sort_unstable();
    Ok(TypedProgram {
        file_id: file_id.to_string(),
        source: source.to_string(),
        tokens: cx.tokens,
        ast,
        symbols: cx.symbols,
        lattice: cx.lattice,
        functions: cx.functions,
        holes,
    })
}

struct Checker {
    tokens: Vec<Token>,
    lattice: TypeLattice,
    symbols: Vec<Symbol>,
    functions: Vec<FunctionInfo>,
    sigs: HashMap<String, Signature>,
    /// Innermost scope last; each frame maps names to symbols.
    scopes: Vec<HashMap<String, SymbolId>>,
    ret: TypeId,
    current_fn: usize,
    holes: Option<Span>,
    hole_tokens: Vec<usize>,
}

impl Checker {
    fn resolve_type(&mut self, ty: &TypeExpr, token: usize, allow_void: bool) -> Result<TypeId, CheckError> {
        match self.lattice.resolve(ty) {
            Some(TypeLattice::VOID) if !allow_void => {
                Err(CheckError::Type { token, message: "void is not a value type".into() })
            }
            Some(id) => Ok(id),
            None => Err(CheckError::Name { token, name: ty.to_string() }),
        }
    }

    fn type_name(&self, t: TypeId) -> String {
        self.lattice.name(t).to_string()
    }

    fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn declare(&mut self, name: &str, ty: TypeId, token: usize, scope_end: usize, is_param: bool) -> Result<SymbolId, CheckError> {
        if self.lookup(name).is_some() {
            return Err(CheckError::Redecl { token, name: name.to_string() });
        }
        let id = SymbolId(self.symbols.len());
        self.symbols.push(Symbol {
            id,
            name: name.to_string(),
            declared_type: ty,
            scope_span: Span::new(token, scope_end),
            decl_token: token,
            function: self.current_fn,
            is_param,
        });
        self.scopes.last_mut().expect("scope frame").insert(name.to_string(), id);
        let tok = &mut self.tokens[token];
        tok.symbol = Some(id);
        tok.is_def = true;
        Ok(id)
    }

    fn function(&mut self, f: &Function) -> Result<(), CheckError> {
        self.current_fn = self.functions.len();
        self.functions.push(FunctionInfo { name: f.name.clone(), span: f.span, params: Vec::new() });
        self.ret = self.sigs[&f.name].ret;
        self.scopes.push(HashMap::new());
        let mut params = Vec::new();
        for p in &f.params {
            let ty = self.resolve_type(&p.ty, p.token, false)?;
            params.push(self.declare(&p.name, ty, p.token, f.span.hi, true)?);
        }
        self.functions[self.current_fn].params = params;
        self.block(&f.body)?;
        self.scopes.pop();
        Ok(())
    }

    fn block(&mut self, b: &Block) -> Result<(), CheckError> {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            self.stmt(s, b.span.hi)?;
        }
        self.scopes.pop();
        Ok(())
    }

    /// Checks a statement whose declarations stay visible until `scope_end`.
    fn stmt(&mut self, s: &Stmt, scope_end: usize) -> Result<(), CheckError> {
        match &s.kind {
            StmtKind::Decl { ty, name, token, init } => {
                let t = self.resolve_type(ty, s.span.lo, false)?;
                // The name is bound before its initializer is checked, matching
                // the visibility rule used for candidate sets.
                self.declare(name, t, *token, scope_end, false)?;
                if let Some(e) = init {
                    let et = self.expr(e)?;
                    self.expect_assignable(et, t, e.span.lo)?;
                }
            }
            StmtKind::Assign { target, op, value } => {
                let tt = self.lvalue(target)?;
                let vt = self.expr(value)?;
                match op {
                    AssignOp::Set => self.expect_assignable(vt, tt, value.span.lo)?,
                    AssignOp::Add => {
                        let ok = (self.compat(tt, TypeLattice::INT) && self.compat(vt, TypeLattice::INT))
                            || (self.compat(tt, TypeLattice::STRING) && self.compat(vt, TypeLattice::STRING));
                        if !ok {
                            return Err(self.mismatch(value.span.lo, "+=", tt, vt));
                        }
                    }
                    AssignOp::Sub => {
                        self.expect_assignable(tt, TypeLattice::INT, target.span.lo)?;
                        self.expect_assignable(vt, TypeLattice::INT, value.span.lo)?;
                    }
                }
            }
            StmtKind::IncDec { target, .. } => {
                let tt = self.lvalue(target)?;
                self.expect_assignable(tt, TypeLattice::INT, target.span.lo)?;
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                self.condition(cond)?;
                self.nested(then_branch)?;
                if let Some(e) = else_branch {
                    self.nested(e)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.condition(cond)?;
                self.nested(body)?;
            }
            StmtKind::For { init, cond, step, body } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i, s.span.hi)?;
                }
                self.condition(cond)?;
                if let Some(st) = step {
                    self.stmt(st, s.span.hi)?;
                }
                self.nested(body)?;
                self.scopes.pop();
            }
            StmtKind::Return(value) => match value {
                Some(e) => {
                    let t = self.expr(e)?;
                    if self.ret == TypeLattice::VOID {
                        return Err(CheckError::Type { token: e.span.lo, message: "void function returns a value".into() });
                    }
                    self.expect_assignable(t, self.ret, e.span.lo)?;
                }
                None if self.ret != TypeLattice::VOID => {
                    return Err(CheckError::Type { token: s.span.lo, message: "missing return value".into() })
                }
                None => {}
            },
            StmtKind::Block(b) => self.block(b)?,
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
        }
        Ok(())
    }

    /// A branch or loop body: its own scope ending with the statement.
    fn nested(&mut self, s: &Stmt) -> Result<(), CheckError> {
        self.scopes.push(HashMap::new());
        self.stmt(s, s.span.hi)?;
        self.scopes.pop();
        Ok(())
    }

    fn condition(&mut self, e: &Expr) -> Result<(), CheckError> {
        let t = self.expr(e)?;
        self.expect_assignable(t, TypeLattice::BOOL, e.span.lo)
    }

    fn compat(&self, from: TypeId, to: TypeId) -> bool {
        self.lattice.assignable(from, to)
    }

    fn mismatch(&self, token: usize, what: &str, a: TypeId, b: TypeId) -> CheckError {
        CheckError::Type {
            token,
            message: format!("{what}: incompatible types {} and {}", self.type_name(a), self.type_name(b)),
        }
    }

    fn expect_assignable(&self, from: TypeId, to: TypeId, token: usize) -> Result<(), CheckError> {
        if self.compat(from, to) {
            Ok(())
        } else {
            Err(CheckError::Type {
                token,
                message: format!("expected {}, found {}", self.type_name(to), self.type_name(from)),
            })
        }
    }

    fn lvalue(&mut self, e: &Expr) -> Result<TypeId, CheckError> {
        match &e.kind {
            ExprKind::Var { .. } | ExprKind::Index { .. } => self.expr(e),
            _ => Err(CheckError::Type { token: e.span.lo, message: "not assignable".into() }),
        }
    }

    fn expr(&mut self, e: &Expr) -> Result<TypeId, CheckError> {
        use BinaryOp::*;
        Ok(match &e.kind {
            ExprKind::Var { name, token } => {
                let in_hole = self.holes.is_some_and(|h| h.contains(*token));
                if in_hole {
                    self.hole_tokens.push(*token);
                }
                match self.lookup(name) {
                    Some(id) => {
                        self.tokens[*token].symbol = Some(id);
                        if in_hole {
                            TypeLattice::UNK
                        } else {
                            self.symbols[id.0].declared_type
                        }
                    }
                    None if in_hole => TypeLattice::UNK,
                    None => return Err(CheckError::Name { token: *token, name: name.clone() }),
                }
            }
            ExprKind::Int(_) => TypeLattice::INT,
            ExprKind::Bool(_) => TypeLattice::BOOL,
            ExprKind::Str(_) => TypeLattice::STRING,
            ExprKind::Paren(inner) => self.expr(inner)?,
            ExprKind::Unary { op, operand } => {
                let t = self.expr(operand)?;
                let want = match op {
                    UnaryOp::Not => TypeLattice::BOOL,
                    UnaryOp::Neg => TypeLattice::INT,
                };
                self.expect_assignable(t, want, operand.span.lo)?;
                want
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.expr(lhs)?;
                let b = self.expr(rhs)?;
                let unk = a == TypeLattice::UNK || b == TypeLattice::UNK;
                match op {
                    Add => {
                        if unk {
                            if a == TypeLattice::UNK { b } else { a }
                        } else if a == TypeLattice::INT && b == TypeLattice::INT {
                            TypeLattice::INT
                        } else if a == TypeLattice::STRING && b == TypeLattice::STRING {
                            TypeLattice::STRING
                        } else {
                            return Err(self.mismatch(rhs.span.lo, "+", a, b));
                        }
                    }
                    Sub | Mul | Div | Rem | Lt | Le | Gt | Ge => {
                        self.expect_assignable(a, TypeLattice::INT, lhs.span.lo)?;
                        self.expect_assignable(b, TypeLattice::INT, rhs.span.lo)?;
                        if matches!(op, Sub | Mul | Div | Rem) { TypeLattice::INT } else { TypeLattice::BOOL }
                    }
                    Eq | Ne => {
                        if !(self.compat(a, b) || self.compat(b, a)) {
                            return Err(self.mismatch(rhs.span.lo, op.as_str(), a, b));
                        }
                        TypeLattice::BOOL
                    }
                    And | Or => {
                        self.expect_assignable(a, TypeLattice::BOOL, lhs.span.lo)?;
                        self.expect_assignable(b, TypeLattice::BOOL, rhs.span.lo)?;
                        TypeLattice::BOOL
                    }
                }
            }
            ExprKind::Index { base, index } => {
                let bt = self.expr(base)?;
                let it = self.expr(index)?;
                self.expect_assignable(it, TypeLattice::INT, index.span.lo)?;
                if bt == TypeLattice::UNK {
                    TypeLattice::UNK
                } else {
                    self.lattice.element(bt).ok_or_else(|| CheckError::Type {
                        token: base.span.lo,
                        message: format!("cannot index {}", self.type_name(bt)),
                    })?
                }
            }
            ExprKind::Call { name, name_token, args } => {
                let sig = self
                    .sigs
                    .get(name)
                    .cloned()
                    .ok_or_else(|| CheckError::Name { token: *name_token, name: name.clone() })?;
                if sig.params.len() != args.len() {
                    return Err(CheckError::Type {
                        token: *name_token,
                        message: format!("{name} expects {} arguments, found {}", sig.params.len(), args.len()),
                    });
                }
                for (a, want) in args.iter().zip(&sig.params) {
                    let t = self.expr(a)?;
                    self.expect_assignable(t, *want, a.span.lo)?;
                }
                sig.ret
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::fixtures::SUM_POSITIVE;

    fn checked(src: &str) -> TypedProgram {
        TypedProgram::from_source(src, "t").unwrap()
    }

    fn err(src: &str) -> MiniLangError {
        TypedProgram::from_source(src, "t").unwrap_err()
    }

    #[test]
    fn sum_positive_symbols() {
        let p = checked(SUM_POSITIVE);
        let names: Vec<(&str, &str)> =
            p.symbols.iter().map(|s| (s.name.as_str(), p.lattice.name(s.declared_type))).collect();
        assert_eq!(names, [("arr", "int[]"), ("lim", "int"), ("sum", "int"), ("i", "int")]);
        let i = &p.symbols[3];
        let StmtKind::For { .. } = &p.ast.functions().next().unwrap().body.stmts[1].kind else { panic!() };
        let for_span = p.ast.functions().next().unwrap().body.stmts[1].span;
        assert_eq!(i.scope_span.hi, for_span.hi);
        assert!(for_span.contains(i.decl_token));
    }

    #[test]
    fn bool_initializer_for_int() {
        assert!(matches!(err("void f() { int x = true; }"), MiniLangError::Check(CheckError::Type { .. })));
    }

    #[test]
    fn undeclared_variable() {
        assert!(matches!(err("void f() { y = 1; }"), MiniLangError::Check(CheckError::Name { .. })));
    }

    #[test]
    fn shadowing_rejected_but_siblings_allowed() {
        assert!(matches!(
            err("void f(int x) { if (true) { int x = 1; } }"),
            MiniLangError::Check(CheckError::Redecl { .. })
        ));
        checked("void f() { for (int i = 0; i < 3; i++) {} for (int i = 0; i < 3; i++) {} }");
    }

    #[test]
    fn subtype_assignment_and_calls() {
        let src = "type A; type B implements A; extern fn mk() -> B; extern fn use_a(A) -> bool;
                   void f() { A a = mk(); bool ok = use_a(mk()); }";
        checked(src);
        assert!(matches!(
            err("type A; type B implements A; extern fn mk() -> A; void f() { B b = mk(); }"),
            MiniLangError::Check(CheckError::Type { .. })
        ));
        assert!(matches!(
            err("extern fn g(int) -> int; void f() { int x = g(1, 2); }"),
            MiniLangError::Check(CheckError::Type { .. })
        ));
    }

    #[test]
    fn vars_in_scope_rules() {
        let p = checked(SUM_POSITIVE);
        // `{` of the body: only the parameters precede it.
        let open = p.tokens.iter().position(|t| t.text == "{").unwrap();
        let names = |t: usize| -> Vec<String> { p.vars_in_scope(t).iter().map(|s| p.symbol(*s).name.clone()).collect() };
        assert_eq!(names(open), ["arr", "lim"]);
        let ret = p.tokens.iter().position(|t| t.text == "return").unwrap();
        assert_eq!(names(ret), ["arr", "lim", "sum"]);
        let p2 = checked("void f() { int a = 1; }");
        assert!(p2.vars_in_scope(p2.tokens.iter().position(|t| t.text == "int").unwrap()).is_empty());
    }

    #[test]
    fn holes_allow_unknown_names() {
        let src = "int f(int a) { int s = 0; s = q + a; return s; }";
        let tokens = tokenize(src).unwrap();
        let ast = parse(&tokens).unwrap();
        let hole = Span::new(12, 18);
        let p = check_with_holes(ast, tokens, src, "t", Some(hole)).unwrap();
        let texts: Vec<&str> = p.holes.iter().map(|&t| p.tokens[t].text.as_str()).collect();
        assert_eq!(texts, ["s", "q", "a"]);
        assert_eq!(p.tokens[p.holes[1]].symbol, None);
    }
}
