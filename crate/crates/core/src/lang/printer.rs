//! Canonical source rendering. `parse(pretty_print(p))` reproduces `p`
//! exactly for parsed programs (ids included, since ids follow pre-order).

use super::ast::*;

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(f, &mut out);
    }
    out
}

fn print_function(f: &Function, out: &mut String) {
    out.push_str("func ");
    out.push_str(&f.name);
    out.push('(');
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{}: {}", p.name, p.ty));
    }
    out.push_str(") {\n");
    print_block(&f.body, 1, out);
    out.push_str("}\n");
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_block(block: &Block, depth: usize, out: &mut String) {
    for stmt in &block.stmts {
        print_stmt(stmt, depth, out);
    }
}

fn print_stmt(stmt: &Stmt, depth: usize, out: &mut String) {
    indent(depth, out);
    match &stmt.kind {
        StmtKind::Assign { name, value } => {
            out.push_str(&format!("{name} = {};\n", render_expr(value)));
        }
        StmtKind::Read { name } => {
            out.push_str(&format!("read {name};\n"));
        }
        StmtKind::Print { value } => {
            out.push_str(&format!("print {};\n", render_expr(value)));
        }
        StmtKind::Return { value: None } => out.push_str("return;\n"),
        StmtKind::Return { value: Some(v) } => {
            out.push_str(&format!("return {};\n", render_expr(v)));
        }
        StmtKind::Call { name, args } => {
            let args: Vec<String> = args.iter().map(render_expr).collect();
            out.push_str(&format!("{name}({});\n", args.join(", ")));
        }
        StmtKind::If {
            cond,
            then_block,
            else_block,
        } => {
            out.push_str(&format!("if {} {{\n", render_expr(cond)));
            print_block(then_block, depth + 1, out);
            indent(depth, out);
            match else_block {
                None => out.push_str("}\n"),
                Some(eb) => {
                    out.push_str("} else {\n");
                    print_block(eb, depth + 1, out);
                    indent(depth, out);
                    out.push_str("}\n");
                }
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str(&format!("while {} {{\n", render_expr(cond)));
            print_block(body, depth + 1, out);
            indent(depth, out);
            out.push_str("}\n");
        }
    }
}

pub fn render_expr(e: &Expr) -> String {
    render_prec(e, 0)
}

// Precedence levels: || = 1, && = 2, ! = 3, comparisons = 4, + - = 5,
// * / % = 6, unary minus = 7, atoms = 8.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::IntLit(_) | Expr::FloatLit(_) | Expr::Var(_) | Expr::Call { .. } => 8,
        Expr::Unary {
            op: UnaryOp::Neg, ..
        } => 7,
        Expr::Unary {
            op: UnaryOp::Not, ..
        } => 3,
        Expr::Binary { op, .. } => match op {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        },
    }
}

fn op_text(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Mod => "%",
        BinOp::Eq => "==",
        BinOp::Ne => "!=",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::And => "&&",
        BinOp::Or => "||",
    }
}

fn render_prec(e: &Expr, min_prec: u8) -> String {
    let prec = precedence(e);
    let body = match e {
        Expr::IntLit(v) => v.to_string(),
        Expr::FloatLit(v) => render_float_literal(*v),
        Expr::Var(name) => name.clone(),
        Expr::Call { name, args } => {
            let args: Vec<String> = args.iter().map(render_expr).collect();
            format!("{name}({})", args.join(", "))
        }
        Expr::Unary {
            op: UnaryOp::Neg,
            operand,
        } => format!("-{}", render_prec(operand, 7)),
        Expr::Unary {
            op: UnaryOp::Not,
            operand,
        } => format!("!{}", render_prec(operand, 3)),
        Expr::Binary { op, lhs, rhs } => {
            // All binary operators parse left-associatively; comparisons do
            // not chain, but their operands sit at the additive level anyway.
            format!(
                "{} {} {}",
                render_prec(lhs, prec),
                op_text(*op),
                render_prec(rhs, prec + 1)
            )
        }
    };
    if prec < min_prec {
        format!("({body})")
    } else {
        body
    }
}

/// Shortest representation that still lexes as a float literal. `1.0` prints
/// as `1.0`, not `1`, so the literal keeps its type across a re-parse.
fn render_float_literal(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains('E') {
        s
    } else {
        format!("{s}.0")
    }
}
