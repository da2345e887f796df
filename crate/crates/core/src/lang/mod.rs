//! The bundled mini-language: lexer, parser, AST, pretty-printer, and a
//! deterministic tree-walking interpreter with trace instrumentation.
//!
//! The grammar is documented in `docs/language.md`.

pub mod ast;
pub mod interp;
mod lexer;
mod parser;
mod printer;
pub mod validate;

pub use ast::{
    BinOp, Block, BranchId, Expr, Function, Param, Program, StatementId, Stmt, StmtKind, Type,
    UnaryOp,
};
pub use interp::{
    execute, execute_with_sink, ExecOutcome, ExecStatus, PointTable, ProgramPoint, Trace,
    TraceSample, TraceSink, Value, DEFAULT_FUEL, MAX_CALL_DEPTH,
};
pub use parser::parse;
pub use printer::{pretty_print, render_expr};
pub use validate::{compute_scopes, validate, ScopeInfo};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("semantic error: {msg}")]
    Semantic { msg: String },
}
