//! Test-case model, suite execution, and the weighted-sum fitness function.
//!
//! A test passes iff execution completes and stdout equals the expected
//! output exactly; mismatches, runtime errors, and fuel exhaustion all count
//! as failures. Positive/negative roles are derived by running the original
//! program, never stored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{execute, ExecStatus, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestOrigin {
    Whitebox,
    Blackbox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub id: String,
    pub input: String,
    pub expected_output: String,
    pub origin: TestOrigin,
}

/// Weights of the fitness sum. Fault-demonstrating (negative) tests are
/// weighted heavily by default, per the usual GenProg convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    pub w_pos: f64,
    pub w_neg: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        Self {
            w_pos: 1.0,
            w_neg: 10.0,
        }
    }
}

impl FitnessWeights {
    pub fn validate(&self) -> Result<(), String> {
        if self.w_pos < 0.0 || self.w_neg < 0.0 {
            return Err("fitness weights must be nonnegative".into());
        }
        if self.w_pos + self.w_neg <= 0.0 {
            return Err("at least one fitness weight must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HarnessError {
    /// The original program passes every test, so the suite does not
    /// demonstrate a bug.
    #[error("no failing tests: the original program passes the whole suite")]
    NoFailingTests,
}

/// Runs one test. Passing means completed with exactly the expected stdout.
pub fn run_test(program: &Program, test: &TestCase, fuel: u64) -> bool {
    let outcome = execute(program, &test.input, fuel, false);
    outcome.status == ExecStatus::Completed && outcome.stdout == test.expected_output
}

/// Partitions `suite` into (positives, negatives) by running the original
/// program: negatives are the tests it fails.
pub fn classify_tests<'a>(
    original: &Program,
    suite: &'a [TestCase],
    fuel: u64,
) -> Result<(Vec<&'a TestCase>, Vec<&'a TestCase>), HarnessError> {
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for test in suite {
        if run_test(original, test, fuel) {
            positives.push(test);
        } else {
            negatives.push(test);
        }
    }
    if negatives.is_empty() {
        return Err(HarnessError::NoFailingTests);
    }
    Ok((positives, negatives))
}

/// Number of positives and negatives a candidate passes.
pub fn passed_counts(
    candidate: &Program,
    positives: &[&TestCase],
    negatives: &[&TestCase],
    fuel: u64,
) -> (usize, usize) {
    let pass = |tests: &[&TestCase]| {
        tests
            .iter()
            .filter(|t| run_test(candidate, t, fuel))
            .count()
    };
    (pass(positives), pass(negatives))
}

/// The weighted sum itself, exposed separately so the arithmetic can be
/// checked without executing programs.
pub fn weighted_fitness(passed_pos: usize, passed_neg: usize, w: FitnessWeights) -> f64 {
    w.w_pos * passed_pos as f64 + w.w_neg * passed_neg as f64
}

/// Fitness of a candidate: `w_pos * (positives passed) + w_neg * (negatives
/// passed)`. The maximum is `w_pos * |positives| + w_neg * |negatives|`.
pub fn fitness(
    candidate: &Program,
    positives: &[&TestCase],
    negatives: &[&TestCase],
    w: FitnessWeights,
    fuel: u64,
) -> f64 {
    let (pp, pn) = passed_counts(candidate, positives, negatives, fuel);
    weighted_fitness(pp, pn, w)
}

pub fn max_fitness(positives: usize, negatives: usize, w: FitnessWeights) -> f64 {
    w.w_pos * positives as f64 + w.w_neg * negatives as f64
}
