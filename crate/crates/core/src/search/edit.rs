//! Statement-level edits and their application.
//!
//! Edits always target the original program's id space. `apply_edits` folds
//! an edit list over a working copy: an edit whose target has disappeared,
//! or whose result would not validate, is skipped, so every edit list maps
//! to a well-formed program. Inserted statements receive fresh ids above the
//! original range and are therefore never edit targets themselves; `replace`
//! keeps the target id on the replacement, so the slot stays addressable.

use serde::{Deserialize, Serialize};

use crate::lang::ast::*;
use crate::lang::validate::validate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Append,
    Replace,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub target: StatementId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub donor: Option<StatementId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "generation")]
pub enum PatchOrigin {
    /// Found among the initial single-mutation candidates; reported but
    /// excluded from analysis.
    Init,
    /// Born in generation `k` (1-based) of the search loop.
    Generation(u32),
}

/// An ordered edit list plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub edits: Vec<Edit>,
    pub origin: PatchOrigin,
    pub seed: u64,
}

impl Patch {
    pub fn empty(origin: PatchOrigin, seed: u64) -> Self {
        Self {
            edits: Vec::new(),
            origin,
            seed,
        }
    }
}

/// Applies `edits` in order to a copy of `original`. Inapplicable or
/// invalidating edits are skipped; the result always validates.
pub fn apply_edits(original: &Program, edits: &[Edit]) -> Program {
    let mut work = original.clone();
    let mut next_id = original.max_statement_id().map_or(0, |m| m.0 + 1);
    for edit in edits {
        let mut trial_next = next_id;
        if let Some(candidate) = apply_one(&work, original, edit, &mut trial_next) {
            if validate(&candidate).is_ok() {
                work = candidate;
                next_id = trial_next;
            }
        }
    }
    work
}

fn apply_one(
    work: &Program,
    original: &Program,
    edit: &Edit,
    next_id: &mut u32,
) -> Option<Program> {
    let mut candidate = work.clone();
    let applied = match edit.kind {
        EditKind::Delete => edit_block_of(&mut candidate, edit.target, |block, i| {
            block.stmts.remove(i);
        }),
        EditKind::Append => {
            let donor = original.find_stmt(edit.donor?)?;
            let cloned = clone_with_fresh_ids(donor, next_id);
            edit_block_of(&mut candidate, edit.target, move |block, i| {
                block.stmts.insert(i + 1, cloned);
            })
        }
        EditKind::Replace => {
            let donor = original.find_stmt(edit.donor?)?;
            let mut cloned = clone_with_fresh_ids(donor, next_id);
            cloned.id = edit.target;
            edit_block_of(&mut candidate, edit.target, move |block, i| {
                block.stmts[i] = cloned;
            })
        }
    };
    applied.then_some(candidate)
}

/// Finds the block holding `target` and runs `f` on (block, index).
/// Returns false when the target does not exist in the program.
fn edit_block_of<F>(program: &mut Program, target: StatementId, f: F) -> bool
where
    F: FnOnce(&mut Block, usize),
{
    let mut f = Some(f);
    for func in &mut program.functions {
        if edit_in_block(&mut func.body, target, &mut f) {
            return true;
        }
    }
    false
}

fn edit_in_block<F>(block: &mut Block, target: StatementId, f: &mut Option<F>) -> bool
where
    F: FnOnce(&mut Block, usize),
{
    if let Some(i) = block.stmts.iter().position(|s| s.id == target) {
        (f.take().expect("editor used once"))(block, i);
        return true;
    }
    for stmt in &mut block.stmts {
        match &mut stmt.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                if edit_in_block(then_block, target, f) {
                    return true;
                }
                if let Some(eb) = else_block {
                    if edit_in_block(eb, target, f) {
                        return true;
                    }
                }
            }
            StmtKind::While { body, .. } => {
                if edit_in_block(body, target, f) {
                    return true;
                }
            }
            _ => {}
        }
    }
    false
}

fn clone_with_fresh_ids(stmt: &Stmt, next_id: &mut u32) -> Stmt {
    let mut cloned = stmt.clone();
    renumber(&mut cloned, next_id);
    cloned
}

fn renumber(stmt: &mut Stmt, next_id: &mut u32) {
    stmt.id = StatementId(*next_id);
    *next_id += 1;
    match &mut stmt.kind {
        StmtKind::If {
            then_block,
            else_block,
            ..
        } => {
            for s in &mut then_block.stmts {
                renumber(s, next_id);
            }
            if let Some(eb) = else_block {
                for s in &mut eb.stmts {
                    renumber(s, next_id);
                }
            }
        }
        StmtKind::While { body, .. } => {
            for s in &mut body.stmts {
                renumber(s, next_id);
            }
        }
        _ => {}
    }
}
