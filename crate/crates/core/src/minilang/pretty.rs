//! Canonical printer: one statement per line, tokens separated by single spaces.

use super::ast::*;

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for item in &p.items {
        match item {
            Item::Type(t) => {
                out.push_str("type ");
                out.push_str(&t.name);
                if !t.supers.is_empty() {
                    out.push_str(" implements ");
                    out.push_str(&t.supers.join(" , "));
                }
                out.push_str(" ;\n");
            }
            Item::Extern(e) => {
                let params: Vec<String> = e.params.iter().map(type_str).collect();
                out.push_str(&format!("extern fn {} ( {} ) -> {} ;\n", e.name, params.join(" , "), type_str(&e.ret)));
            }
            Item::Function(f) => {
                let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", type_str(&p.ty), p.name)).collect();
                out.push_str(&format!("{} {} ( {} ) ", type_str(&f.ret), f.name, params.join(" , ")));
                block(&f.body, 0, &mut out);
                out.push('\n');
            }
        }
    }
    out
}

fn type_str(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Array(e) => format!("{} [ ]", type_str(e)),
        other => other.to_string(),
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(b: &Block, level: usize, out: &mut String) {
    out.push_str("{\n");
    for s in &b.stmts {
        indent(level + 1, out);
        stmt(s, level + 1, out);
        out.push('\n');
    }
    indent(level, out);
    out.push('}');
}

/// Statement without its terminating `;` (used inside `for` headers).
fn simple(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Decl { ty, name, init, .. } => match init {
            Some(e) => format!("{} {} = {}", type_str(ty), name, expr(e)),
            None => format!("{} {}", type_str(ty), name),
        },
        StmtKind::Assign { target, op, value } => format!("{} {} {}", expr(target), op.as_str(), expr(value)),
        StmtKind::IncDec { target, increment } => format!("{} {}", expr(target), if *increment { "++" } else { "--" }),
        StmtKind::Expr(e) => expr(e),
        _ => unreachable!("not a simple statement"),
    }
}

fn stmt(s: &Stmt, level: usize, out: &mut String) {
    match &s.kind {
        StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::IncDec { .. } | StmtKind::Expr(_) => {
            out.push_str(&simple(s));
            out.push_str(" ;");
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            out.push_str(&format!("if ( {} ) ", expr(cond)));
            stmt(then_branch, level, out);
            if let Some(e) = else_branch {
                out.push_str(" else ");
                stmt(e, level, out);
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while ( {} ) ", expr(cond)));
            stmt(body, level, out);
        }
        StmtKind::For { init, cond, step, body } => {
            let init = init.as_deref().map(simple).unwrap_or_default();
            let step = step.as_deref().map(simple).unwrap_or_default();
            out.push_str(&format!("for ( {} ; {} ; {} ) ", init, expr(cond), step));
            stmt(body, level, out);
        }
        StmtKind::Return(v) => match v {
            Some(e) => out.push_str(&format!("return {} ;", expr(e))),
            None => out.push_str("return ;"),
        },
        StmtKind::Block(b) => block(b, level, out),
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var { name, .. } => name.clone(),
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Str(s) => s.clone(),
        ExprKind::Paren(inner) => format!("( {} )", expr(inner)),
        ExprKind::Unary { op, operand } => {
            let o = match op {
                UnaryOp::Not => "!",
                UnaryOp::Neg => "-",
            };
            format!("{o} {}", expr(operand))
        }
        ExprKind::Binary { op, lhs, rhs } => format!("{} {} {}", expr(lhs), op.as_str(), expr(rhs)),
        ExprKind::Index { base, index } => format!("{} [ {} ]", expr(base), expr(index)),
        ExprKind::Call { name, args, .. } => {
            let args: Vec<String> = args.iter().map(expr).collect();
            if args.is_empty() {
                format!("{name} ( )")
            } else {
                format!("{name} ( {} )", args.join(" , "))
            }
        }
    }
}
