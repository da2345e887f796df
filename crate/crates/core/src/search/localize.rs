//! GenProg-style weighted fault localization from statement coverage.

use std::collections::{BTreeMap, BTreeSet};

use crate::harness::TestCase;
use crate::lang::{execute, Program, StatementId};

use super::SearchError;

/// Weight of a statement executed only by failing tests.
pub const WEIGHT_NEGATIVE_ONLY: f64 = 1.0;
/// Weight of a statement executed by both failing and passing tests.
pub const WEIGHT_BOTH: f64 = 0.1;

/// Weights every statement of the original program: 1.0 when executed by at
/// least one negative test and no positive test, 0.1 when executed by both,
/// 0.0 otherwise.
pub fn localize(
    original: &Program,
    positives: &[&TestCase],
    negatives: &[&TestCase],
    fuel: u64,
) -> Result<BTreeMap<StatementId, f64>, SearchError> {
    let covered = |tests: &[&TestCase]| -> BTreeSet<StatementId> {
        let mut cov = BTreeSet::new();
        for t in tests {
            cov.extend(execute(original, &t.input, fuel, false).stmt_coverage);
        }
        cov
    };
    let neg_cov = covered(negatives);
    let pos_cov = covered(positives);

    let mut weights = BTreeMap::new();
    for stmt in original.statements() {
        let w = match (neg_cov.contains(&stmt.id), pos_cov.contains(&stmt.id)) {
            (true, false) => WEIGHT_NEGATIVE_ONLY,
            (true, true) => WEIGHT_BOTH,
            (false, _) => 0.0,
        };
        weights.insert(stmt.id, w);
    }
    if weights.values().all(|w| *w == 0.0) {
        return Err(SearchError::NoLocalizableFault);
    }
    Ok(weights)
}
