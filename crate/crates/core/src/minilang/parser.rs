//! Recursive-descent parser for MiniLang.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::ParseError;

pub struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

pub fn parse(tokens: &[Token]) -> Result<Program, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut items = Vec::new();
    while !p.at_end() {
        items.push(p.item()?);
    }
    Ok(Program { items })
}

/// Parses a bare statement sequence, as pasted snippets are written.
pub fn parse_statements(tokens: &[Token]) -> Result<Vec<Stmt>, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut out = Vec::new();
    while !p.at_end() {
        out.push(p.stmt()?);
    }
    Ok(out)
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.tokens.get(self.pos + k)
    }

    fn check(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != TokenKind::StringLiteral)
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            index: self.pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().map(|t| t.text.clone()),
        }
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.check(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.error(&[text]))
        }
    }

    fn ident(&mut self) -> PResult<(String, usize)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok((t.text.clone(), t.index))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn item(&mut self) -> PResult<Item> {
        let lo = self.pos;
        if self.eat("type") {
            let (name, _) = self.ident()?;
            let mut supers = Vec::new();
            if self.eat("implements") {
                loop {
                    supers.push(self.ident()?.0);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(";")?;
            return Ok(Item::Type(TypeDecl { name, supers, span: Span::new(lo, self.pos) }));
        }
        if self.eat("extern") {
            self.expect("fn")?;
            let (name, _) = self.ident()?;
            self.expect("(")?;
            let mut params = Vec::new();
            if !self.check(")") {
                loop {
                    params.push(self.type_expr()?);
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(")")?;
            self.expect("->")?;
            let ret = self.type_expr()?;
            self.expect(";")?;
            return Ok(Item::Extern(ExternFn { name, params, ret, span: Span::new(lo, self.pos) }));
        }
        let ret = self.type_expr().map_err(|_| self.error(&["type", "extern", "type name"]))?;
        let (name, _) = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.check(")") {
            loop {
                let ty = self.type_expr()?;
                let (pname, token) = self.ident()?;
                params.push(Param { ty, name: pname, token });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = self.block()?;
        Ok(Item::Function(Function { ret, name, params, body, span: Span::new(lo, self.pos) }))
    }

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let base = match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && t.text == "int" => TypeExpr::Int,
            Some(t) if t.kind == TokenKind::Keyword && t.text == "bool" => TypeExpr::Bool,
            Some(t) if t.kind == TokenKind::Keyword && t.text == "string" => TypeExpr::Str,
            Some(t) if t.kind == TokenKind::Keyword && t.text == "void" => TypeExpr::Void,
            Some(t) if t.kind == TokenKind::Identifier => TypeExpr::Named(t.text.clone()),
            _ => return Err(self.error(&["type"])),
        };
        self.pos += 1;
        let mut ty = base;
        while self.check("[") && self.peek_at(1).is_some_and(|t| t.text == "]") {
            self.pos += 2;
            ty = TypeExpr::Array(Box::new(ty));
        }
        Ok(ty)
    }

    fn block(&mut self) -> PResult<Block> {
        let lo = self.pos;
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.check("}") {
            if self.at_end() {
                return Err(self.error(&["}"]));
            }
            stmts.push(self.stmt()?);
        }
        self.expect("}")?;
        Ok(Block { stmts, span: Span::new(lo, self.pos) })
    }

    fn starts_decl(&self) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword => matches!(t.text.as_str(), "int" | "bool" | "string"),
            Some(t) if t.kind == TokenKind::Identifier => match self.peek_at(1) {
                Some(n) if n.kind == TokenKind::Identifier => true,
                Some(n) if n.text == "[" => self.peek_at(2).is_some_and(|m| m.text == "]"),
                _ => false,
            },
            _ => false,
        }
    }

    fn decl(&mut self) -> PResult<Stmt> {
        let lo = self.pos;
        let ty = self.type_expr()?;
        let (name, token) = self.ident()?;
        let init = if self.eat("=") { Some(self.expr()?) } else { None };
        Ok(Stmt { kind: StmtKind::Decl { ty, name, token, init }, span: Span::new(lo, self.pos) })
    }

    /// Assignment, increment/decrement, or bare expression (no trailing `;`).
    fn simple(&mut self) -> PResult<Stmt> {
        let lo = self.pos;
        let target = self.expr()?;
        let op = if self.eat("=") {
            Some(AssignOp::Set)
        } else if self.eat("+=") {
            Some(AssignOp::Add)
        } else if self.eat("-=") {
            Some(AssignOp::Sub)
        } else {
            None
        };
        let kind = if let Some(op) = op {
            let value = self.expr()?;
            StmtKind::Assign { target, op, value }
        } else if self.eat("++") {
            StmtKind::IncDec { target, increment: true }
        } else if self.eat("--") {
            StmtKind::IncDec { target, increment: false }
        } else {
            StmtKind::Expr(target)
        };
        Ok(Stmt { kind, span: Span::new(lo, self.pos) })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let lo = self.pos;
        if self.check("{") {
            let b = self.block()?;
            let span = b.span;
            return Ok(Stmt { kind: StmtKind::Block(b), span });
        }
        if self.eat("if") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then_branch = Box::new(self.stmt()?);
            let else_branch = if self.eat("else") { Some(Box::new(self.stmt()?)) } else { None };
            return Ok(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, span: Span::new(lo, self.pos) });
        }
        if self.eat("while") {
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(Stmt { kind: StmtKind::While { cond, body }, span: Span::new(lo, self.pos) });
        }
        if self.eat("for") {
            self.expect("(")?;
            let init = if self.check(";") {
                None
            } else if self.starts_decl() {
                Some(Box::new(self.decl()?))
            } else {
                Some(Box::new(self.simple()?))
            };
            self.expect(";")?;
            let cond = self.expr()?;
            self.expect(";")?;
            let step = if self.check(")") { None } else { Some(Box::new(self.simple()?)) };
            self.expect(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(Stmt { kind: StmtKind::For { init, cond, step, body }, span: Span::new(lo, self.pos) });
        }
        if self.eat("return") {
            let value = if self.check(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            return Ok(Stmt { kind: StmtKind::Return(value), span: Span::new(lo, self.pos) });
        }
        let mut s = if self.starts_decl() { self.decl()? } else { self.simple()? };
        self.expect(";")?;
        s.span = Span::new(lo, self.pos);
        Ok(s)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        use BinaryOp::*;
        Some(match t.text.as_str() {
            "||" => Or,
            "&&" => And,
            "==" => Eq,
            "!=" => Ne,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "+" => Add,
            "-" => Sub,
            "*" => Mul,
            "/" => Div,
            "%" => Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            let span = Span::new(lhs.span.lo, rhs.span.hi);
            lhs = Expr { kind: ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let lo = self.pos;
        let op = if self.eat("!") {
            Some(UnaryOp::Not)
        } else if self.eat("-") {
            Some(UnaryOp::Neg)
        } else {
            None
        };
        if let Some(op) = op {
            let operand = self.unary()?;
            return Ok(Expr { kind: ExprKind::Unary { op, operand: Box::new(operand) }, span: Span::new(lo, self.pos) });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.check("[") {
            self.pos += 1;
            let index = self.expr()?;
            self.expect("]")?;
            let span = Span::new(e.span.lo, self.pos);
            e = Expr { kind: ExprKind::Index { base: Box::new(e), index: Box::new(index) }, span };
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let lo = self.pos;
        let Some(t) = self.peek() else {
            return Err(self.error(&["expression"]));
        };
        let kind = match t.kind {
            TokenKind::IntLiteral => {
                let v = t.text.parse::<i64>().map_err(|_| self.error(&["integer in range"]))?;
                self.pos += 1;
                ExprKind::Int(v)
            }
            TokenKind::BoolLiteral => {
                self.pos += 1;
                ExprKind::Bool(t.text == "true")
            }
            TokenKind::StringLiteral => {
                self.pos += 1;
                ExprKind::Str(t.text.clone())
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.check(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                    }
                    self.expect(")")?;
                    ExprKind::Call { name: t.text.clone(), name_token: t.index, args }
                } else {
                    ExprKind::Var { name: t.text.clone(), token: t.index }
                }
            }
            TokenKind::Punctuation if t.text == "(" => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(")")?;
                ExprKind::Paren(Box::new(inner))
            }
            _ => return Err(self.error(&["expression"])),
        };
        Ok(Expr { kind, span: Span::new(lo, self.pos) })
    }
}
