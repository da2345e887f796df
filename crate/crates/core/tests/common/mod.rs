//! Random program generator used as the round-trip oracle. Generates only
//! statically valid programs: variables are introduced before use, booleans
//! stay in condition position, literals are nonnegative (negation is an
//! explicit unary node, as the parser builds it), and call expressions only
//! target value-returning functions.

use divrepair_core::lang::{
    BinOp, Block, Expr, Function, Param, Program, StatementId, Stmt, StmtKind, Type, UnaryOp,
};
use divrepair_core::rng::SplitMix64;

struct FuncSig {
    name: String,
    params: Vec<Param>,
    returns_value: bool,
}

pub struct Generator<'a> {
    rng: &'a mut SplitMix64,
    sigs: Vec<FuncSig>,
}

pub fn random_program(rng: &mut SplitMix64) -> Program {
    let helper_count = rng.next_below(3) as usize;
    let mut sigs = vec![FuncSig {
        name: "main".into(),
        params: Vec::new(),
        returns_value: false,
    }];
    for i in 0..helper_count {
        let param_count = rng.next_below(4) as usize;
        let params = (0..param_count)
            .map(|p| Param {
                name: format!("p{p}"),
                ty: if rng.next_bool() {
                    Type::Int
                } else {
                    Type::Float
                },
            })
            .collect();
        sigs.push(FuncSig {
            name: format!("f{i}"),
            params,
            returns_value: rng.next_bool(),
        });
    }
    let mut generator = Generator { rng, sigs };
    let functions: Vec<Function> = (0..generator.sigs.len())
        .map(|i| generator.function(i))
        .collect();
    let mut program = Program { functions };
    renumber(&mut program);
    program
}

fn renumber(program: &mut Program) {
    let mut next = 0u32;
    fn walk(block: &mut Block, next: &mut u32) {
        for stmt in &mut block.stmts {
            stmt.id = StatementId(*next);
            *next += 1;
            match &mut stmt.kind {
                StmtKind::If {
                    then_block,
                    else_block,
                    ..
                } => {
                    walk(then_block, next);
                    if let Some(eb) = else_block {
                        walk(eb, next);
                    }
                }
                StmtKind::While { body, .. } => walk(body, next),
                _ => {}
            }
        }
    }
    for f in &mut program.functions {
        walk(&mut f.body, &mut next);
    }
}

impl Generator<'_> {
    fn function(&mut self, index: usize) -> Function {
        let name = self.sigs[index].name.clone();
        let params = self.sigs[index].params.clone();
        let returns_value = self.sigs[index].returns_value;
        let mut scope: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
        let len = 1 + self.rng.next_below(6) as usize;
        let mut stmts = self.block(len, 0, &mut scope);
        if returns_value {
            // The static returns-value property must hold; guarantee one.
            let value = self.numeric_expr(&scope, 2);
            stmts.push(self.stmt_of(StmtKind::Return { value: Some(value) }));
        }
        Function {
            name,
            params,
            body: Block { stmts },
        }
    }

    fn stmt_of(&mut self, kind: StmtKind) -> Stmt {
        // Placeholder id; renumber() assigns the real pre-order ids.
        Stmt {
            id: StatementId(u32::MAX),
            kind,
        }
    }

    fn block(&mut self, len: usize, depth: usize, scope: &mut Vec<String>) -> Vec<Stmt> {
        (0..len).map(|_| self.statement(depth, scope)).collect()
    }

    fn fresh_var(&mut self, scope: &[String]) -> String {
        for i in 0.. {
            let name = format!("v{i}");
            if !scope.contains(&name) {
                return name;
            }
        }
        unreachable!()
    }

    fn statement(&mut self, depth: usize, scope: &mut Vec<String>) -> Stmt {
        let max_kind = if depth < 2 { 7 } else { 5 };
        let kind = match self.rng.next_below(max_kind) {
            0 => {
                // The value is generated against the scope before the
                // assignment: a first introduction may not use itself.
                let value = self.numeric_expr(scope, 2);
                let name = if scope.is_empty() || self.rng.next_below(3) == 0 {
                    let name = self.fresh_var(scope);
                    scope.push(name.clone());
                    name
                } else {
                    self.pick(scope).clone()
                };
                StmtKind::Assign { name, value }
            }
            1 => {
                let name = if scope.is_empty() || self.rng.next_bool() {
                    let name = self.fresh_var(scope);
                    scope.push(name.clone());
                    name
                } else {
                    self.pick(scope).clone()
                };
                StmtKind::Read { name }
            }
            2 => StmtKind::Print {
                value: self.numeric_expr(scope, 2),
            },
            3 => {
                let value = if self.rng.next_below(3) == 0 {
                    None
                } else {
                    Some(self.numeric_expr(scope, 1))
                };
                StmtKind::Return { value }
            }
            4 => {
                // Call statement to any function, matching its arity.
                let callee = self.rng.next_below(self.sigs.len() as u64) as usize;
                let args = (0..self.sigs[callee].params.len())
                    .map(|_| self.numeric_expr(scope, 1))
                    .collect();
                StmtKind::Call {
                    name: self.sigs[callee].name.clone(),
                    args,
                }
            }
            5 => {
                let cond = self.cond_expr(scope, 2);
                let then_len = self.rng.next_below(3) as usize + 1;
                let then_block = Block {
                    stmts: self.block(then_len, depth + 1, scope),
                };
                let else_block = if self.rng.next_bool() {
                    let else_len = self.rng.next_below(3) as usize;
                    Some(Block {
                        stmts: self.block(else_len, depth + 1, scope),
                    })
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_block,
                    else_block,
                }
            }
            _ => {
                let cond = self.cond_expr(scope, 2);
                let body_len = self.rng.next_below(3) as usize;
                let body = Block {
                    stmts: self.block(body_len, depth + 1, scope),
                };
                StmtKind::While { cond, body }
            }
        };
        self.stmt_of(kind)
    }

    fn pick<'v>(&mut self, scope: &'v [String]) -> &'v String {
        &scope[self.rng.next_below(scope.len() as u64) as usize]
    }

    fn numeric_expr(&mut self, scope: &[String], depth: usize) -> Expr {
        if depth == 0 {
            return self.numeric_leaf(scope);
        }
        match self.rng.next_below(6) {
            0 | 1 => self.numeric_leaf(scope),
            2 => Expr::Unary {
                op: UnaryOp::Neg,
                operand: Box::new(self.numeric_expr(scope, depth - 1)),
            },
            3 => {
                // Call expression: only value-returning callees qualify.
                let returning: Vec<usize> = (0..self.sigs.len())
                    .filter(|&i| self.sigs[i].returns_value)
                    .collect();
                if returning.is_empty() {
                    return self.numeric_leaf(scope);
                }
                let callee = returning[self.rng.next_below(returning.len() as u64) as usize];
                let args = (0..self.sigs[callee].params.len())
                    .map(|_| self.numeric_expr(scope, depth - 1))
                    .collect();
                Expr::Call {
                    name: self.sigs[callee].name.clone(),
                    args,
                }
            }
            _ => {
                let op = match self.rng.next_below(5) {
                    0 => BinOp::Add,
                    1 => BinOp::Sub,
                    2 => BinOp::Mul,
                    3 => BinOp::Div,
                    _ => BinOp::Mod,
                };
                Expr::Binary {
                    op,
                    lhs: Box::new(self.numeric_expr(scope, depth - 1)),
                    rhs: Box::new(self.numeric_expr(scope, depth - 1)),
                }
            }
        }
    }

    fn numeric_leaf(&mut self, scope: &[String]) -> Expr {
        if !scope.is_empty() && self.rng.next_bool() {
            return Expr::Var(self.pick(scope).clone());
        }
        if self.rng.next_bool() {
            Expr::IntLit(self.rng.next_below(100) as i64)
        } else {
            // Quarters are exactly representable and render with a dot.
            Expr::FloatLit(self.rng.next_below(400) as f64 / 4.0)
        }
    }

    fn cond_expr(&mut self, scope: &[String], depth: usize) -> Expr {
        if depth == 0 {
            return self.comparison(scope);
        }
        match self.rng.next_below(6) {
            0 => Expr::Unary {
                op: UnaryOp::Not,
                operand: Box::new(self.cond_expr(scope, depth - 1)),
            },
            1 => Expr::Binary {
                op: BinOp::And,
                lhs: Box::new(self.cond_expr(scope, depth - 1)),
                rhs: Box::new(self.cond_expr(scope, depth - 1)),
            },
            2 => Expr::Binary {
                op: BinOp::Or,
                lhs: Box::new(self.cond_expr(scope, depth - 1)),
                rhs: Box::new(self.cond_expr(scope, depth - 1)),
            },
            // Numeric truthiness is legal in condition position.
            3 => self.numeric_expr(scope, 1),
            _ => self.comparison(scope),
        }
    }

    fn comparison(&mut self, scope: &[String]) -> Expr {
        let op = match self.rng.next_below(6) {
            0 => BinOp::Eq,
            1 => BinOp::Ne,
            2 => BinOp::Lt,
            3 => BinOp::Le,
            4 => BinOp::Gt,
            _ => BinOp::Ge,
        };
        Expr::Binary {
            op,
            lhs: Box::new(self.numeric_expr(scope, 1)),
            rhs: Box::new(self.numeric_expr(scope, 1)),
        }
    }
}
