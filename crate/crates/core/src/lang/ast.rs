//! AST for the mini-language.
//!
//! Statements carry a [`StatementId`] assigned in source (pre-order) order by
//! the parser. Patched programs built by the search keep the original ids on
//! untouched statements and hand out fresh ids above the original range to
//! inserted statements, so an id always names the same source slot.

use serde::{Deserialize, Serialize};

/// Stable identity of a statement. For parsed programs ids are 0..n in
/// pre-order, so pretty-print + re-parse reproduces them exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StatementId(pub u32);

impl std::fmt::Display for StatementId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// One direction of one branching statement (`if` or `while`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchId {
    pub stmt: StatementId,
    pub taken: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Type {
    Int,
    Float,
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Float => write!(f, "float"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub functions: Vec<Function>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: StatementId,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        name: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Read {
        name: String,
    },
    Print {
        value: Expr,
    },
    Return {
        value: Option<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    IntLit(i64),
    FloatLit(f64),
    Var(String),
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn is_arithmetic(self) -> bool {
        !self.is_comparison() && !self.is_logical()
    }
}

impl Block {
    pub fn for_each_stmt<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        for stmt in &self.stmts {
            f(stmt);
            match &stmt.kind {
                StmtKind::If {
                    then_block,
                    else_block,
                    ..
                } => {
                    then_block.for_each_stmt(f);
                    if let Some(eb) = else_block {
                        eb.for_each_stmt(f);
                    }
                }
                StmtKind::While { body, .. } => body.for_each_stmt(f),
                _ => {}
            }
        }
    }
}

impl Function {
    /// A function "returns a value" as a static property: at least one
    /// `return <expr>;` appears anywhere in its body. Such a function yields
    /// its default value 0 when execution falls off the end.
    pub fn returns_value(&self) -> bool {
        let mut found = false;
        self.body.for_each_stmt(&mut |s| {
            if matches!(&s.kind, StmtKind::Return { value: Some(_) }) {
                found = true;
            }
        });
        found
    }
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// All statements in pre-order (function order, then body pre-order).
    pub fn statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        self.for_each_stmt(&mut |s| out.push(s));
        out
    }

    pub fn for_each_stmt<'a>(&'a self, f: &mut impl FnMut(&'a Stmt)) {
        for func in &self.functions {
            func.body.for_each_stmt(f);
        }
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        self.for_each_stmt(&mut |_| n += 1);
        n
    }

    pub fn find_stmt(&self, id: StatementId) -> Option<&Stmt> {
        let mut found = None;
        self.for_each_stmt(&mut |s| {
            if s.id == id {
                found = Some(s);
            }
        });
        found
    }

    pub fn max_statement_id(&self) -> Option<StatementId> {
        let mut max = None;
        self.for_each_stmt(&mut |s| {
            if max.is_none_or(|m| s.id > m) {
                max = Some(s.id);
            }
        });
        max
    }

    /// Number of `read` statements anywhere in the program; this is the
    /// input arity used by the test-input generator.
    pub fn read_count(&self) -> usize {
        let mut n = 0;
        self.for_each_stmt(&mut |s| {
            if matches!(s.kind, StmtKind::Read { .. }) {
                n += 1;
            }
        });
        n
    }
}
