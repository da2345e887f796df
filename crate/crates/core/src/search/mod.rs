//! Genetic-programming repair: statement-level edits, weighted fault
//! localization, mutation/crossover/selection operators, and the
//! generational search loop for both techniques.

pub mod edit;
mod engine;
mod localize;
mod operators;

pub use edit::{apply_edits, Edit, EditKind, Patch, PatchOrigin};
pub use engine::{
    enumerate_single_edit_fixes, repair, CandidateRecord, GenerationRecord, PatchRecord,
    RepairParams, RunRecord, SearchConfig, Technique,
};
pub use localize::{localize, WEIGHT_BOTH, WEIGHT_NEGATIVE_ONLY};
pub use operators::{
    crossover, mutate, score, select, EvaluatedCandidate, SelectionContext, MUTATION_RETRIES,
};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error(transparent)]
    Harness(#[from] crate::harness::HarnessError),
    #[error("no localizable fault: no statement is executed by a failing test")]
    NoLocalizableFault,
    #[error(transparent)]
    Invariants(#[from] crate::invariants::InvariantError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}
