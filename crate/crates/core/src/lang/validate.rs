//! Semantic validation and scope analysis.
//!
//! Scoping is textual: a variable comes into scope at the first `read` or
//! assignment naming it (in pre-order source position within its function)
//! and stays in scope until the end of the function. The same walk also
//! determines the variable set sampled at each program point, so "statically
//! in scope" and "present in a trace sample" always agree.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::ast::*;
use super::ParseError;

/// Checks a program against every rule the language imposes statically:
/// exactly one zero-parameter `main`, unique function names and statement
/// ids, known call targets with matching arity, value-returning callees in
/// expression position, variables introduced before use, and boolean
/// expressions confined to condition position.
pub fn validate(program: &Program) -> Result<(), ParseError> {
    let semantic = |msg: String| ParseError::Semantic { msg };

    let mut names = HashSet::new();
    for f in &program.functions {
        if !names.insert(f.name.as_str()) {
            return Err(semantic(format!("duplicate function `{}`", f.name)));
        }
    }
    match program.function("main") {
        None => return Err(semantic("no function named `main`".into())),
        Some(main) if !main.params.is_empty() => {
            return Err(semantic("`main` must take no parameters".into()))
        }
        _ => {}
    }

    let mut seen_ids = HashSet::new();
    for stmt in program.statements() {
        if !seen_ids.insert(stmt.id) {
            return Err(semantic(format!("duplicate statement id {}", stmt.id)));
        }
    }

    let sigs: HashMap<&str, (usize, bool)> = program
        .functions
        .iter()
        .map(|f| (f.name.as_str(), (f.params.len(), f.returns_value())))
        .collect();

    for f in &program.functions {
        let mut param_names = HashSet::new();
        for p in &f.params {
            if !param_names.insert(p.name.as_str()) {
                return Err(semantic(format!(
                    "duplicate parameter `{}` in `{}`",
                    p.name, f.name
                )));
            }
        }
        let intro = intro_positions(f);
        let mut pos = 0usize;
        check_block(&f.body, f, &intro, &sigs, &mut pos).map_err(semantic)?;
    }

    Ok(())
}

/// Pre-order source position of the statement that first introduces each
/// variable of `f`'s body. Parameters are implicitly introduced before
/// position 0.
fn intro_positions(f: &Function) -> HashMap<String, usize> {
    let mut intro = HashMap::new();
    let mut pos = 0usize;
    f.body.for_each_stmt(&mut |s| {
        match &s.kind {
            StmtKind::Assign { name, .. } | StmtKind::Read { name } => {
                intro.entry(name.clone()).or_insert(pos);
            }
            _ => {}
        }
        pos += 1;
    });
    intro
}

fn check_block(
    block: &Block,
    f: &Function,
    intro: &HashMap<String, usize>,
    sigs: &HashMap<&str, (usize, bool)>,
    pos: &mut usize,
) -> Result<(), String> {
    for stmt in &block.stmts {
        let here = *pos;
        *pos += 1;
        let ck_num = |e: &Expr, what: &str| -> Result<(), String> {
            if expr_category(e, f, intro, sigs, here)? == Cat::Bool {
                return Err(format!(
                    "boolean expression used as {what} in `{}` (booleans are only allowed in conditions)",
                    f.name
                ));
            }
            Ok(())
        };
        match &stmt.kind {
            StmtKind::Assign { value, .. } => ck_num(value, "an assignment value")?,
            StmtKind::Print { value } => ck_num(value, "a print value")?,
            StmtKind::Return { value: Some(value) } => ck_num(value, "a return value")?,
            StmtKind::Return { value: None } => {}
            StmtKind::Read { .. } => {}
            StmtKind::Call { name, args } => {
                let (arity, _) = sigs
                    .get(name.as_str())
                    .ok_or_else(|| format!("call to undefined function `{name}`"))?;
                if *arity != args.len() {
                    return Err(format!(
                        "`{name}` takes {arity} argument(s), got {}",
                        args.len()
                    ));
                }
                for a in args {
                    ck_num(a, "a call argument")?;
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                expr_category(cond, f, intro, sigs, here)?;
                check_block(then_block, f, intro, sigs, pos)?;
                if let Some(eb) = else_block {
                    check_block(eb, f, intro, sigs, pos)?;
                }
            }
            StmtKind::While { cond, body } => {
                expr_category(cond, f, intro, sigs, here)?;
                check_block(body, f, intro, sigs, pos)?;
            }
        }
    }
    Ok(())
}

#[derive(PartialEq, Clone, Copy)]
enum Cat {
    Num,
    Bool,
}

fn expr_category(
    e: &Expr,
    f: &Function,
    intro: &HashMap<String, usize>,
    sigs: &HashMap<&str, (usize, bool)>,
    use_pos: usize,
) -> Result<Cat, String> {
    match e {
        Expr::IntLit(_) | Expr::FloatLit(_) => Ok(Cat::Num),
        Expr::Var(name) => {
            let is_param = f.params.iter().any(|p| p.name == *name);
            let introduced_before = intro.get(name).is_some_and(|&p| p < use_pos);
            if is_param || introduced_before {
                Ok(Cat::Num)
            } else {
                Err(format!("undeclared variable `{name}` in `{}`", f.name))
            }
        }
        Expr::Call { name, args } => {
            let (arity, returns) = sigs
                .get(name.as_str())
                .ok_or_else(|| format!("call to undefined function `{name}`"))?;
            if *arity != args.len() {
                return Err(format!(
                    "`{name}` takes {arity} argument(s), got {}",
                    args.len()
                ));
            }
            if !returns {
                return Err(format!(
                    "`{name}` never returns a value and cannot be used in an expression"
                ));
            }
            for a in args {
                if expr_category(a, f, intro, sigs, use_pos)? == Cat::Bool {
                    return Err("boolean expression used as a call argument".into());
                }
            }
            Ok(Cat::Num)
        }
        Expr::Unary {
            op: UnaryOp::Neg,
            operand,
        } => {
            if expr_category(operand, f, intro, sigs, use_pos)? == Cat::Bool {
                return Err("cannot negate a boolean expression".into());
            }
            Ok(Cat::Num)
        }
        // `!` accepts a numeric operand through truthiness, like conditions do.
        Expr::Unary {
            op: UnaryOp::Not,
            operand,
        } => {
            expr_category(operand, f, intro, sigs, use_pos)?;
            Ok(Cat::Bool)
        }
        Expr::Binary { op, lhs, rhs } => {
            let lc = expr_category(lhs, f, intro, sigs, use_pos)?;
            let rc = expr_category(rhs, f, intro, sigs, use_pos)?;
            if op.is_logical() {
                return Ok(Cat::Bool);
            }
            if lc == Cat::Bool || rc == Cat::Bool {
                return Err(format!(
                    "boolean operand of `{op:?}` (comparisons and arithmetic apply to numbers)"
                ));
            }
            if op.is_comparison() {
                Ok(Cat::Bool)
            } else {
                Ok(Cat::Num)
            }
        }
    }
}

/// Per-function variable layout and the variable sets sampled at each
/// program point.
#[derive(Debug, Clone)]
pub struct FunctionScope {
    /// Slot order: parameters first, then body variables by introduction order.
    pub slot_names: Vec<String>,
    pub slot_of: HashMap<String, usize>,
    pub param_count: usize,
    pub returns_value: bool,
    /// Sorted variable names sampled at `entry(f)`: the parameters.
    pub entry_vars: Vec<String>,
    /// Sorted variable names sampled at `exit(f)`: every variable of the
    /// function. The synthetic `return` value is appended by the tracer.
    pub exit_vars: Vec<String>,
    /// Sorted variable names in scope at each `while` statement, i.e.
    /// parameters plus variables introduced textually before it.
    pub loop_head_vars: BTreeMap<StatementId, Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct ScopeInfo {
    pub functions: HashMap<String, FunctionScope>,
}

/// Computes scope layout for a validated program.
pub fn compute_scopes(program: &Program) -> ScopeInfo {
    let mut functions = HashMap::new();
    for f in &program.functions {
        let mut slot_names: Vec<String> = f.params.iter().map(|p| p.name.clone()).collect();
        let mut slot_of: HashMap<String, usize> = slot_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let intro = intro_positions(f);
        // Body variables in introduction order.
        let mut body_vars: Vec<(&String, &usize)> = intro
            .iter()
            .filter(|(name, _)| !slot_of.contains_key(*name))
            .collect();
        body_vars.sort_by_key(|(name, pos)| (**pos, (*name).clone()));
        for (name, _) in body_vars {
            slot_of.insert(name.clone(), slot_names.len());
            slot_names.push(name.clone());
        }

        let mut entry_vars: Vec<String> = f.params.iter().map(|p| p.name.clone()).collect();
        entry_vars.sort();
        let mut exit_vars = slot_names.clone();
        exit_vars.sort();

        let mut loop_head_vars = BTreeMap::new();
        let mut pos = 0usize;
        f.body.for_each_stmt(&mut |s| {
            if matches!(s.kind, StmtKind::While { .. }) {
                let mut vars: Vec<String> = f
                    .params
                    .iter()
                    .map(|p| p.name.clone())
                    .chain(
                        intro
                            .iter()
                            .filter(|(name, &p)| {
                                p < pos && !f.params.iter().any(|q| q.name == **name)
                            })
                            .map(|(name, _)| name.clone()),
                    )
                    .collect();
                vars.sort();
                loop_head_vars.insert(s.id, vars);
            }
            pos += 1;
        });

        functions.insert(
            f.name.clone(),
            FunctionScope {
                param_count: f.params.len(),
                returns_value: f.returns_value(),
                slot_of,
                slot_names,
                entry_vars,
                exit_vars,
                loop_head_vars,
            },
        );
    }
    ScopeInfo { functions }
}
