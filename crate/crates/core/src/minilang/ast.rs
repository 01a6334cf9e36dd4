//! Syntax tree for MiniLang. Every node records the half-open token interval it covers.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    pub fn new(lo: usize, hi: usize) -> Self {
        Span { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }

    pub fn contains(&self, t: usize) -> bool {
        self.lo <= t && t < self.hi
    }

    pub fn encloses(&self, other: &Span) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Int,
    Bool,
    Str,
    Void,
    Named(String),
    Array(Box<TypeExpr>),
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Int => f.write_str("int"),
            TypeExpr::Bool => f.write_str("bool"),
            TypeExpr::Str => f.write_str("string"),
            TypeExpr::Void => f.write_str("void"),
            TypeExpr::Named(n) => f.write_str(n),
            TypeExpr::Array(e) => write!(f, "{e}[]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Type(TypeDecl),
    Extern(ExternFn),
    Function(Function),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub supers: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternFn {
    pub name: String,
    pub params: Vec<TypeExpr>,
    pub ret: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeExpr,
    pub name: String,
    pub token: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub ret: TypeExpr,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
}

impl AssignOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Decl { ty: TypeExpr, name: String, token: usize, init: Option<Expr> },
    Assign { target: Expr, op: AssignOp, value: Expr },
    IncDec { target: Expr, increment: bool },
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    For { init: Option<Box<Stmt>>, cond: Expr, step: Option<Box<Stmt>>, body: Box<Stmt> },
    Return(Option<Expr>),
    Block(Block),
    Expr(Expr),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Rem => "%",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&&",
            Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Or => 1,
            And => 2,
            Eq | Ne => 3,
            Lt | Le | Gt | Ge => 4,
            Add | Sub => 5,
            Mul | Div | Rem => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Var { name: String, token: usize },
    Int(i64),
    Bool(bool),
    Str(String),
    Unary { op: UnaryOp, operand: Box<Expr> },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
    Call { name: String, name_token: usize, args: Vec<Expr> },
    Paren(Box<Expr>),
}

impl Program {
    pub fn functions(&self) -> impl Iterator<Item = &Function> {
        self.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    /// Copy with every span and token index zeroed, for structural comparison.
    pub fn erase_positions(&self) -> Program {
        let mut p = self.clone();
        for item in &mut p.items {
            match item {
                Item::Type(t) => t.span = Span::default(),
                Item::Extern(e) => e.span = Span::default(),
                Item::Function(f) => {
                    f.span = Span::default();
                    for p in &mut f.params {
                        p.token = 0;
                    }
                    erase_block(&mut f.body);
                }
            }
        }
        p
    }
}

fn erase_block(b: &mut Block) {
    b.span = Span::default();
    for s in &mut b.stmts {
        erase_stmt(s);
    }
}

fn erase_stmt(s: &mut Stmt) {
    s.span = Span::default();
    match &mut s.kind {
        StmtKind::Decl { token, init, .. } => {
            *token = 0;
            if let Some(e) = init {
                erase_expr(e);
            }
        }
        StmtKind::Assign { target, value, .. } => {
            erase_expr(target);
            erase_expr(value);
        }
        StmtKind::IncDec { target, .. } => erase_expr(target),
        StmtKind::If { cond, then_branch, else_branch } => {
            erase_expr(cond);
            erase_stmt(then_branch);
            if let Some(e) = else_branch {
                erase_stmt(e);
            }
        }
        StmtKind::While { cond, body } => {
            erase_expr(cond);
            erase_stmt(body);
        }
        StmtKind::For { init, cond, step, body } => {
            if let Some(i) = init {
                erase_stmt(i);
            }
            erase_expr(cond);
            if let Some(s) = step {
                erase_stmt(s);
            }
            erase_stmt(body);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                erase_expr(e);
            }
        }
        StmtKind::Block(b) => erase_block(b),
        StmtKind::Expr(e) => erase_expr(e),
    }
}

fn erase_expr(e: &mut Expr) {
    e.span = Span::default();
    match &mut e.kind {
        ExprKind::Var { token, .. } => *token = 0,
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
        ExprKind::Unary { operand, .. } => erase_expr(operand),
        ExprKind::Binary { lhs, rhs, .. } => {
            erase_expr(lhs);
            erase_expr(rhs);
        }
        ExprKind::Index { base, index } => {
            erase_expr(base);
            erase_expr(index);
        }
        ExprKind::Call { name_token, args, .. } => {
            *name_token = 0;
            for a in args {
                erase_expr(a);
            }
        }
        ExprKind::Paren(inner) => erase_expr(inner),
    }
}

impl Stmt {
    /// Direct child statements, in source order.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                let mut v = vec![then_branch.as_ref()];
                if let Some(e) = else_branch {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } => vec![body.as_ref()],
            StmtKind::For { init, step, body, .. } => {
                let mut v = Vec::new();
                if let Some(i) = init {
                    v.push(i.as_ref());
                }
                if let Some(s) = step {
                    v.push(s.as_ref());
                }
                v.push(body);
                v
            }
            StmtKind::Block(b) => b.stmts.iter().collect(),
            _ => Vec::new(),
        }
    }
}

/// Calls `f` for every variable reference (not declarations) in `e`, in token order.
pub fn visit_vars<'a>(e: &'a Expr, f: &mut impl FnMut(&'a str, usize)) {
    match &e.kind {
        ExprKind::Var { name, token } => f(name, *token),
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
        ExprKind::Unary { operand, .. } => visit_vars(operand, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            visit_vars(lhs, f);
            visit_vars(rhs, f);
        }
        ExprKind::Index { base, index } => {
            visit_vars(base, f);
            visit_vars(index, f);
        }
        ExprKind::Call { args, .. } => {
            for a in args {
                visit_vars(a, f);
            }
        }
        ExprKind::Paren(inner) => visit_vars(inner, f),
    }
}
