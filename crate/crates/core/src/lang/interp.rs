//! Deterministic tree-walking interpreter.
//!
//! All mutable state lives in the per-call [`Interp`] context, so concurrent
//! executions of the same `Program` are safe. Every failure mode is folded
//! into the returned [`ExecOutcome`]; `execute` itself never errors.
//!
//! Step accounting: one step when a statement begins executing, plus one step
//! per loop-condition evaluation. Exceeding `fuel` ends the run with
//! `FuelExhausted`.
//!
//! Trace convention: a `loop_head` sample is emitted immediately before each
//! loop-condition evaluation, including the final one that exits the loop,
//! so the sample count equals the number of condition evaluations exactly
//! ("minus zero").

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::validate::{compute_scopes, FunctionScope, ScopeInfo};

/// Default interpreter step budget per test execution. Fuel exhaustion is a
/// test failure, which keeps search total when mutants stop terminating.
pub const DEFAULT_FUEL: u64 = 100_000;

/// Bound on nested calls, so runaway recursion dies as a runtime error
/// instead of exhausting the host stack.
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(v) => v as f64,
            Value::Float(v) => v,
        }
    }

    fn is_zero(self) -> bool {
        match self {
            Value::Int(v) => v == 0,
            Value::Float(v) => v == 0.0,
        }
    }
}

impl std::fmt::Display for Value {
    /// Ints print as decimal; floats print in Rust's shortest round-trip
    /// decimal form.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Float(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecStatus {
    Completed,
    RuntimeError(String),
    FuelExhausted,
}

impl ExecStatus {
    /// Coarse status name; this is the granularity used in behavior
    /// signatures, where the three statuses are distinct but error messages
    /// are not.
    pub fn kind(&self) -> &'static str {
        match self {
            ExecStatus::Completed => "completed",
            ExecStatus::RuntimeError(_) => "runtime_error",
            ExecStatus::FuelExhausted => "fuel_exhausted",
        }
    }
}

/// An observation point: function entry, function exit, or a `while` head.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProgramPoint {
    Entry(String),
    Exit(String),
    LoopHead(StatementId),
}

impl std::fmt::Display for ProgramPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProgramPoint::Entry(name) => write!(f, "entry({name})"),
            ProgramPoint::Exit(name) => write!(f, "exit({name})"),
            ProgramPoint::LoopHead(id) => write!(f, "loop_head({id})"),
        }
    }
}

/// The program points of a program in canonical order: for each function in
/// program order, `entry`, its loop heads in pre-order, then `exit`.
#[derive(Debug, Clone)]
pub struct PointTable {
    pub points: Vec<ProgramPoint>,
    entry_idx: HashMap<String, usize>,
    exit_idx: HashMap<String, usize>,
    loop_idx: HashMap<StatementId, usize>,
}

impl PointTable {
    pub fn new(program: &Program) -> Self {
        let mut points = Vec::new();
        let mut entry_idx = HashMap::new();
        let mut exit_idx = HashMap::new();
        let mut loop_idx = HashMap::new();
        for f in &program.functions {
            entry_idx.insert(f.name.clone(), points.len());
            points.push(ProgramPoint::Entry(f.name.clone()));
            f.body.for_each_stmt(&mut |s| {
                if matches!(s.kind, StmtKind::While { .. }) {
                    loop_idx.insert(s.id, points.len());
                    points.push(ProgramPoint::LoopHead(s.id));
                }
            });
            exit_idx.insert(f.name.clone(), points.len());
            points.push(ProgramPoint::Exit(f.name.clone()));
        }
        Self {
            points,
            entry_idx,
            exit_idx,
            loop_idx,
        }
    }
}

/// Receives one call per dynamic visit of a program point. `values` is the
/// statically in-scope variable set at that point, sorted by name.
pub trait TraceSink {
    fn on_sample(&mut self, point_idx: usize, values: &[(&str, Value)]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub point: ProgramPoint,
    pub values: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub stdout: String,
    pub status: ExecStatus,
    pub steps_used: u64,
    pub trace: Option<Trace>,
    /// Every (branching statement, direction) taken.
    pub coverage: BTreeSet<BranchId>,
    /// Every statement that began executing; used by fault localization.
    pub stmt_coverage: BTreeSet<StatementId>,
}

struct CollectingSink<'a> {
    points: &'a PointTable,
    samples: Vec<TraceSample>,
}

impl TraceSink for CollectingSink<'_> {
    fn on_sample(&mut self, point_idx: usize, values: &[(&str, Value)]) {
        self.samples.push(TraceSample {
            point: self.points.points[point_idx].clone(),
            values: values.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        });
    }
}

/// Runs `program` on `input` with the given step budget. With `trace_points`
/// the outcome carries one sample per dynamic program-point visit.
pub fn execute(program: &Program, input: &str, fuel: u64, trace_points: bool) -> ExecOutcome {
    let scopes = compute_scopes(program);
    let points = PointTable::new(program);
    if trace_points {
        let mut sink = CollectingSink {
            points: &points,
            samples: Vec::new(),
        };
        let mut outcome =
            execute_with_sink(program, &scopes, &points, input, fuel, Some(&mut sink));
        outcome.trace = Some(Trace {
            samples: sink.samples,
        });
        outcome
    } else {
        execute_with_sink(program, &scopes, &points, input, fuel, None)
    }
}

/// Streaming variant: program-point visits are pushed into `sink` instead of
/// being materialized, which keeps profiling of non-terminating mutants
/// cheap. `scopes` and `points` must come from this `program`.
pub fn execute_with_sink<'a>(
    program: &'a Program,
    scopes: &'a ScopeInfo,
    points: &'a PointTable,
    input: &'a str,
    fuel: u64,
    sink: Option<&'a mut (dyn TraceSink + 'a)>,
) -> ExecOutcome {
    let tokens: Vec<&str> = input.split_whitespace().collect();
    let mut interp = Interp {
        program,
        scopes,
        points,
        tokens,
        next_token: 0,
        stdout: String::new(),
        fuel,
        steps: 0,
        coverage: BTreeSet::new(),
        stmt_cov: BTreeSet::new(),
        sink,
        depth: 0,
    };
    let status = interp.run();
    ExecOutcome {
        stdout: interp.stdout,
        status,
        steps_used: interp.steps,
        trace: None,
        coverage: interp.coverage,
        stmt_coverage: interp.stmt_cov,
    }
}

enum Halt {
    Error(String),
    Fuel,
}

enum Flow {
    Normal,
    Returned(Option<Value>),
}

struct Frame<'p> {
    fscope: &'p FunctionScope,
    slots: Vec<Value>,
}

impl Frame<'_> {
    fn get(&self, name: &str) -> Option<Value> {
        self.fscope.slot_of.get(name).map(|&i| self.slots[i])
    }

    fn set(&mut self, name: &str, value: Value) {
        let i = self.fscope.slot_of[name];
        self.slots[i] = value;
    }
}

struct Interp<'a> {
    program: &'a Program,
    scopes: &'a ScopeInfo,
    points: &'a PointTable,
    tokens: Vec<&'a str>,
    next_token: usize,
    stdout: String,
    fuel: u64,
    steps: u64,
    coverage: BTreeSet<BranchId>,
    stmt_cov: BTreeSet<StatementId>,
    sink: Option<&'a mut dyn TraceSink>,
    depth: usize,
}

impl<'a> Interp<'a> {
    fn run(&mut self) -> ExecStatus {
        let main = self
            .program
            .function("main")
            .expect("validated program has a main function");
        match self.call_function(main, Vec::new()) {
            Ok(_) => ExecStatus::Completed,
            Err(Halt::Error(msg)) => ExecStatus::RuntimeError(msg),
            Err(Halt::Fuel) => ExecStatus::FuelExhausted,
        }
    }

    fn charge(&mut self) -> Result<(), Halt> {
        self.steps += 1;
        if self.steps > self.fuel {
            Err(Halt::Fuel)
        } else {
            Ok(())
        }
    }

    fn sample(&mut self, point_idx: usize, frame: &Frame, names: &[String], ret: Option<Value>) {
        if self.sink.is_none() {
            return;
        }
        let mut values: Vec<(&str, Value)> = names
            .iter()
            .map(|n| (n.as_str(), frame.get(n).unwrap_or(Value::Int(0))))
            .collect();
        if let Some(v) = ret {
            values.push(("return", v));
            values.sort_by_key(|(n, _)| *n);
        }
        if let Some(sink) = self.sink.as_deref_mut() {
            sink.on_sample(point_idx, &values);
        }
    }

    fn call_function(
        &mut self,
        func: &'a Function,
        args: Vec<Value>,
    ) -> Result<Option<Value>, Halt> {
        if self.depth >= MAX_CALL_DEPTH {
            return Err(Halt::Error(format!(
                "call depth exceeded {MAX_CALL_DEPTH} in `{}`",
                func.name
            )));
        }
        self.depth += 1;
        let fscope = &self.scopes.functions[&func.name];

        let mut slots = Vec::with_capacity(fscope.slot_names.len());
        for (param, arg) in func.params.iter().zip(args) {
            let bound = match (param.ty, arg) {
                (Type::Int, Value::Int(v)) => Value::Int(v),
                (Type::Int, Value::Float(_)) => {
                    self.depth -= 1;
                    return Err(Halt::Error(format!(
                        "type error: parameter `{}` of `{}` expects int",
                        param.name, func.name
                    )));
                }
                (Type::Float, Value::Int(v)) => Value::Float(v as f64),
                (Type::Float, Value::Float(v)) => Value::Float(v),
            };
            slots.push(bound);
        }
        // Body variables start as int 0, so every statically in-scope
        // variable has a value whenever it is sampled.
        slots.resize(fscope.slot_names.len(), Value::Int(0));
        let mut frame = Frame { fscope, slots };

        if self.sink.is_some() {
            let idx = self.points.entry_idx[&func.name];
            self.sample(idx, &frame, &fscope.entry_vars, None);
        }

        let result = self.exec_block(&func.body, &mut frame);
        self.depth -= 1;
        let flow = result?;

        let ret = match flow {
            Flow::Returned(v) => v,
            Flow::Normal => None,
        };
        // A function that statically returns a value yields 0 on paths that
        // fall off the end or hit a bare `return;`.
        let ret = if fscope.returns_value {
            Some(ret.unwrap_or(Value::Int(0)))
        } else {
            None
        };

        if self.sink.is_some() {
            let idx = self.points.exit_idx[&func.name];
            self.sample(idx, &frame, &fscope.exit_vars, ret);
        }
        Ok(ret)
    }

    fn exec_block(&mut self, block: &'a Block, frame: &mut Frame<'a>) -> Result<Flow, Halt> {
        for stmt in &block.stmts {
            if let Flow::Returned(v) = self.exec_stmt(stmt, frame)? {
                return Ok(Flow::Returned(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn exec_stmt(&mut self, stmt: &'a Stmt, frame: &mut Frame<'a>) -> Result<Flow, Halt> {
        self.charge()?;
        self.stmt_cov.insert(stmt.id);
        match &stmt.kind {
            StmtKind::Assign { name, value } => {
                let v = self.eval(value, frame)?;
                frame.set(name, v);
                Ok(Flow::Normal)
            }
            StmtKind::Read { name } => {
                let v = self.read_value()?;
                frame.set(name, v);
                Ok(Flow::Normal)
            }
            StmtKind::Print { value } => {
                let v = self.eval(value, frame)?;
                self.stdout.push_str(&v.to_string());
                self.stdout.push('\n');
                Ok(Flow::Normal)
            }
            StmtKind::Return { value } => {
                let v = match value {
                    Some(e) => Some(self.eval(e, frame)?),
                    None => None,
                };
                Ok(Flow::Returned(v))
            }
            StmtKind::Call { name, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, frame)?);
                }
                let callee = self
                    .program
                    .function(name)
                    .ok_or_else(|| Halt::Error(format!("undefined function `{name}`")))?;
                self.call_function(callee, vals)?;
                Ok(Flow::Normal)
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                let taken = self.eval_cond(cond, frame)?;
                self.coverage.insert(BranchId {
                    stmt: stmt.id,
                    taken,
                });
                if taken {
                    self.exec_block(then_block, frame)
                } else if let Some(eb) = else_block {
                    self.exec_block(eb, frame)
                } else {
                    Ok(Flow::Normal)
                }
            }
            StmtKind::While { cond, body } => {
                let head_vars = frame.fscope.loop_head_vars.get(&stmt.id);
                let point_idx = self.points.loop_idx.get(&stmt.id).copied();
                loop {
                    self.charge()?;
                    if self.sink.is_some() {
                        if let (Some(vars), Some(idx)) = (head_vars, point_idx) {
                            self.sample(idx, frame, vars, None);
                        }
                    }
                    let taken = self.eval_cond(cond, frame)?;
                    self.coverage.insert(BranchId {
                        stmt: stmt.id,
                        taken,
                    });
                    if !taken {
                        return Ok(Flow::Normal);
                    }
                    if let Flow::Returned(v) = self.exec_block(body, frame)? {
                        return Ok(Flow::Returned(v));
                    }
                }
            }
        }
    }

    fn read_value(&mut self) -> Result<Value, Halt> {
        let tok = self
            .tokens
            .get(self.next_token)
            .ok_or_else(|| Halt::Error("read past end of input".into()))?;
        self.next_token += 1;
        let looks_int = {
            let t = tok.strip_prefix(['+', '-']).unwrap_or(tok);
            !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
        };
        if looks_int {
            return tok
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| Halt::Error(format!("malformed input token `{tok}`")));
        }
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Float(v)),
            _ => Err(Halt::Error(format!("malformed input token `{tok}`"))),
        }
    }

    fn eval(&mut self, e: &'a Expr, frame: &Frame<'a>) -> Result<Value, Halt> {
        match e {
            Expr::IntLit(v) => Ok(Value::Int(*v)),
            Expr::FloatLit(v) => Ok(Value::Float(*v)),
            Expr::Var(name) => frame
                .get(name)
                .ok_or_else(|| Halt::Error(format!("undeclared variable `{name}`"))),
            Expr::Unary {
                op: UnaryOp::Neg,
                operand,
            } => match self.eval(operand, frame)? {
                Value::Int(v) => v
                    .checked_neg()
                    .map(Value::Int)
                    .ok_or_else(|| Halt::Error("integer overflow".into())),
                Value::Float(v) => Ok(Value::Float(-v)),
            },
            Expr::Unary {
                op: UnaryOp::Not, ..
            } => Err(Halt::Error(
                "type error: boolean value in numeric context".into(),
            )),
            Expr::Binary { op, lhs, rhs } if op.is_arithmetic() => {
                let lv = self.eval(lhs, frame)?;
                let rv = self.eval(rhs, frame)?;
                self.arith(*op, lv, rv)
            }
            Expr::Binary { .. } => Err(Halt::Error(
                "type error: boolean value in numeric context".into(),
            )),
            Expr::Call { name, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, frame)?);
                }
                let callee = self
                    .program
                    .function(name)
                    .ok_or_else(|| Halt::Error(format!("undefined function `{name}`")))?;
                match self.call_function(callee, vals)? {
                    Some(v) => Ok(v),
                    None => Err(Halt::Error(format!(
                        "`{name}` returned no value in an expression"
                    ))),
                }
            }
        }
    }

    fn arith(&self, op: BinOp, lv: Value, rv: Value) -> Result<Value, Halt> {
        use Value::*;
        if op == BinOp::Mod {
            return match (lv, rv) {
                (Int(_), Int(0)) => Err(Halt::Error("division by zero".into())),
                (Int(a), Int(b)) => a
                    .checked_rem(b)
                    .map(Int)
                    .ok_or_else(|| Halt::Error("integer overflow".into())),
                _ => Err(Halt::Error(
                    "type error: `%` requires integer operands".into(),
                )),
            };
        }
        match (lv, rv) {
            (Int(a), Int(b)) => {
                let r = match op {
                    BinOp::Add => a.checked_add(b),
                    BinOp::Sub => a.checked_sub(b),
                    BinOp::Mul => a.checked_mul(b),
                    BinOp::Div => {
                        if b == 0 {
                            return Err(Halt::Error("division by zero".into()));
                        }
                        a.checked_div(b)
                    }
                    _ => unreachable!(),
                };
                r.map(Int)
                    .ok_or_else(|| Halt::Error("integer overflow".into()))
            }
            _ => {
                let (a, b) = (lv.as_f64(), rv.as_f64());
                if op == BinOp::Div && b == 0.0 {
                    return Err(Halt::Error("division by zero".into()));
                }
                let r = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    _ => unreachable!(),
                };
                if r.is_finite() {
                    Ok(Float(r))
                } else {
                    Err(Halt::Error("non-finite float result".into()))
                }
            }
        }
    }

    fn eval_cond(&mut self, e: &'a Expr, frame: &mut Frame<'a>) -> Result<bool, Halt> {
        match e {
            Expr::Binary {
                op: BinOp::And,
                lhs,
                rhs,
            } => Ok(self.eval_cond(lhs, frame)? && self.eval_cond(rhs, frame)?),
            Expr::Binary {
                op: BinOp::Or,
                lhs,
                rhs,
            } => Ok(self.eval_cond(lhs, frame)? || self.eval_cond(rhs, frame)?),
            Expr::Unary {
                op: UnaryOp::Not,
                operand,
            } => Ok(!self.eval_cond(operand, frame)?),
            Expr::Binary { op, lhs, rhs } if op.is_comparison() => {
                let lv = self.eval(lhs, frame)?;
                let rv = self.eval(rhs, frame)?;
                let ord = match (lv, rv) {
                    (Value::Int(a), Value::Int(b)) => a.cmp(&b),
                    _ => lv
                        .as_f64()
                        .partial_cmp(&rv.as_f64())
                        .expect("finite floats always compare"),
                };
                Ok(match op {
                    BinOp::Eq => ord.is_eq(),
                    BinOp::Ne => ord.is_ne(),
                    BinOp::Lt => ord.is_lt(),
                    BinOp::Le => ord.is_le(),
                    BinOp::Gt => ord.is_gt(),
                    BinOp::Ge => ord.is_ge(),
                    _ => unreachable!(),
                })
            }
            // Numeric condition: true iff nonzero.
            _ => Ok(!self.eval(e, frame)?.is_zero()),
        }
    }
}
