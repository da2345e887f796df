//! Coverage-guided random test-input generation and the merged-suite
//! semantic distance.
//!
//! Input model: one whitespace-separated numeric token per `read` statement
//! of the program. Each token is drawn independently: one draw picks int or
//! float (50/50), one draw picks an integer uniform in [-100, 100] or a
//! float uniform in [-100, 100] with two decimal places. Candidate inputs
//! that add branch coverage are retained; the very first candidate is always
//! retained so the suite is never empty (a program with no reads and no
//! branches yields exactly `[""]`).

use std::collections::BTreeSet;

use crate::lang::{execute, BranchId, Program};
use crate::rng::{derive_seed, hash_str, SplitMix64};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedSuite {
    pub inputs: Vec<String>,
    /// Branch coverage the retained inputs achieved on their source program.
    pub covered: BTreeSet<BranchId>,
}

/// Output signature of one execution: coarse status plus exact stdout.
/// Distinct statuses (completed / runtime_error / fuel_exhausted) are
/// distinct behaviors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorSignature {
    pub status: &'static str,
    pub stdout: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorReport {
    pub entries: Vec<BehaviorSignature>,
}

/// One input text with `arity` tokens. Draw order per token: kind, then value.
fn generate_input(rng: &mut SplitMix64, arity: usize) -> String {
    let mut tokens = Vec::with_capacity(arity);
    for _ in 0..arity {
        if rng.next_below(2) == 0 {
            let v = rng.next_below(201) as i64 - 100;
            tokens.push(v.to_string());
        } else {
            let v = (rng.next_below(20001) as i64 - 10000) as f64 / 100.0;
            tokens.push(format!("{v:.2}"));
        }
    }
    tokens.join(" ")
}

/// Draws `budget` candidate inputs for `program`, retaining those that
/// increase branch coverage (plus the first candidate as a seed input).
/// Deterministic for a given rng state.
pub fn generate_suite(
    program: &Program,
    budget: usize,
    rng: &mut SplitMix64,
    fuel: u64,
) -> GeneratedSuite {
    let arity = program.read_count();
    let mut suite = GeneratedSuite {
        inputs: Vec::new(),
        covered: BTreeSet::new(),
    };
    for _ in 0..budget {
        let input = generate_input(rng, arity);
        if suite.inputs.contains(&input) {
            continue;
        }
        let outcome = execute(program, &input, fuel, false);
        let adds_coverage = outcome.coverage.iter().any(|b| !suite.covered.contains(b));
        if suite.inputs.is_empty() || adds_coverage {
            suite.covered.extend(outcome.coverage);
            suite.inputs.push(input);
        }
    }
    suite
}

/// Union of the two suites by exact input text: `tp`'s inputs first, then
/// `tq`'s unseen inputs, in order.
pub fn merge_suites(tp: &GeneratedSuite, tq: &GeneratedSuite) -> Vec<String> {
    let mut merged = tp.inputs.clone();
    for input in &tq.inputs {
        if !merged.contains(input) {
            merged.push(input.clone());
        }
    }
    merged
}

/// Runs `program` on every input of the merged suite and records signatures.
pub fn behavior_report(program: &Program, merged: &[String], fuel: u64) -> BehaviorReport {
    let entries = merged
        .iter()
        .map(|input| {
            let outcome = execute(program, input, fuel, false);
            BehaviorSignature {
                status: outcome.status.kind(),
                stdout: outcome.stdout,
            }
        })
        .collect();
    BehaviorReport { entries }
}

/// Semantic distance in [0, 1]: generates a suite for each program from the
/// same derived seed, merges them, and counts differing signatures over the
/// merged length. Identical programs get identical suites and distance 0.
pub fn testgen_distance(
    p: &Program,
    q: &Program,
    budget: usize,
    rng: &mut SplitMix64,
    fuel: u64,
) -> f64 {
    let (merged, rp, rq) = testgen_reports(p, q, budget, rng, fuel);
    distance_from_reports(&rp, &rq, merged.len())
}

/// Same as [`testgen_distance`] but also exposes the merged suite and both
/// reports, so distances can be serialized and replayed.
pub fn testgen_reports(
    p: &Program,
    q: &Program,
    budget: usize,
    rng: &mut SplitMix64,
    fuel: u64,
) -> (Vec<String>, BehaviorReport, BehaviorReport) {
    let seed = rng.next_u64();
    let tp = generate_suite(p, budget, &mut SplitMix64::new(seed), fuel);
    let tq = generate_suite(q, budget, &mut SplitMix64::new(seed), fuel);
    let merged = merge_suites(&tp, &tq);
    let rp = behavior_report(p, &merged, fuel);
    let rq = behavior_report(q, &merged, fuel);
    (merged, rp, rq)
}

pub fn distance_from_reports(rp: &BehaviorReport, rq: &BehaviorReport, merged_len: usize) -> f64 {
    assert_eq!(rp.entries.len(), merged_len);
    assert_eq!(rq.entries.len(), merged_len);
    if merged_len == 0 {
        return 0.0;
    }
    let differing = rp
        .entries
        .iter()
        .zip(&rq.entries)
        .filter(|(a, b)| a != b)
        .count();
    differing as f64 / merged_len as f64
}

/// Derives the per-pair seed from the master seed, the bug id, and the two
/// patch labels, symmetrically, so diversity tables do not depend on
/// evaluation order.
pub fn pair_seed(master: u64, bug_id: &str, label_a: &str, label_b: &str) -> u64 {
    let (lo, hi) = {
        let (a, b) = (hash_str(label_a), hash_str(label_b));
        (a.min(b), a.max(b))
    };
    derive_seed(master, &[hash_str(bug_id), lo, hi])
}

/// Everything one pairwise computation produced; handed to the
/// `distance_matrix_detailed` callback so merged suites can be serialized
/// for replay.
#[derive(Debug, Clone)]
pub struct PairComputation {
    pub seed: u64,
    pub merged: Vec<String>,
    pub report_a: BehaviorReport,
    pub report_b: BehaviorReport,
    pub distance: f64,
}

/// Symmetric matrix of pairwise distances over labeled patches, each pair
/// computed once from its derived seed.
pub fn distance_matrix(
    patches: &[(String, Program)],
    budget: usize,
    master: u64,
    bug_id: &str,
    fuel: u64,
) -> Vec<Vec<f64>> {
    distance_matrix_detailed(patches, budget, master, bug_id, fuel, |_, _, _| {})
}

/// [`distance_matrix`] with a per-pair callback `(i, j, computation)`,
/// invoked once per unordered pair with i < j.
pub fn distance_matrix_detailed(
    patches: &[(String, Program)],
    budget: usize,
    master: u64,
    bug_id: &str,
    fuel: u64,
    mut on_pair: impl FnMut(usize, usize, &PairComputation),
) -> Vec<Vec<f64>> {
    let n = patches.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let seed = pair_seed(master, bug_id, &patches[i].0, &patches[j].0);
            let mut rng = SplitMix64::new(seed);
            let (merged, report_a, report_b) =
                testgen_reports(&patches[i].1, &patches[j].1, budget, &mut rng, fuel);
            let distance = distance_from_reports(&report_a, &report_b, merged.len());
            on_pair(
                i,
                j,
                &PairComputation {
                    seed,
                    merged,
                    report_a,
                    report_b,
                    distance,
                },
            );
            matrix[i][j] = distance;
            matrix[j][i] = distance;
        }
    }
    matrix
}

/// Diversity of one patch: the sum of its distances to every other patch.
pub fn testgen_diversity(
    member: usize,
    patches: &[(String, Program)],
    budget: usize,
    master: u64,
    bug_id: &str,
    fuel: u64,
) -> f64 {
    let matrix = distance_matrix(patches, budget, master, bug_id, fuel);
    matrix[member].iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use crate::lang::DEFAULT_FUEL;

    #[test]
    fn straight_line_program_yields_single_empty_input() {
        let p = parse("func main() { print 1; }").unwrap();
        let suite = generate_suite(&p, 50, &mut SplitMix64::new(0), 1000);
        assert_eq!(suite.inputs, vec![String::new()]);
        assert!(suite.covered.is_empty());
    }

    #[test]
    fn generator_covers_both_branch_directions() {
        let p = parse("func main() { read x; if x > 0 { print 1; } else { print 0; } }").unwrap();
        let suite = generate_suite(&p, 200, &mut SplitMix64::new(1), 1000);
        assert_eq!(suite.covered.len(), 2, "inputs: {:?}", suite.inputs);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let p = parse("func main() { read x; read y; if x < y { print x; } }").unwrap();
        let a = generate_suite(&p, 200, &mut SplitMix64::new(7), 1000);
        let b = generate_suite(&p, 200, &mut SplitMix64::new(7), 1000);
        assert_eq!(a, b);
    }

    #[test]
    fn archive_retains_only_coverage_increasers_after_the_seed_input() {
        let p = parse("func main() { read x; if x > 0 { print 1; } else { print 0; } }").unwrap();
        let suite = generate_suite(&p, 200, &mut SplitMix64::new(3), 1000);
        // Seed input plus at most one per remaining uncovered direction.
        assert!(suite.inputs.len() <= 3, "{:?}", suite.inputs);
        // Replaying retained inputs in order must strictly grow coverage
        // after the first.
        let mut covered: BTreeSet<BranchId> = BTreeSet::new();
        for (idx, input) in suite.inputs.iter().enumerate() {
            let out = execute(&p, input, 1000, false);
            if idx > 0 {
                assert!(out.coverage.iter().any(|b| !covered.contains(b)));
            }
            covered.extend(out.coverage);
        }
        assert_eq!(covered, suite.covered);
    }

    #[test]
    fn merge_is_an_ordered_union() {
        let mk = |inputs: &[&str]| GeneratedSuite {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            covered: BTreeSet::new(),
        };
        assert_eq!(
            merge_suites(&mk(&["a", "b"]), &mk(&["b", "c"])),
            vec!["a", "b", "c"]
        );
        let s = mk(&["x", "y"]);
        assert_eq!(merge_suites(&s, &s), vec!["x", "y"]);
        assert_eq!(merge_suites(&mk(&[""]), &mk(&[""])), vec![""]);
    }

    #[test]
    fn distance_of_a_program_to_itself_is_zero() {
        let p = parse("func main() { read x; if x > 0 { print x; } else { print -x; } }").unwrap();
        let d = testgen_distance(&p, &p, 200, &mut SplitMix64::new(11), DEFAULT_FUEL);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn always_different_outputs_give_distance_one() {
        let p = parse("func main() { read x; print 1; }").unwrap();
        let q = parse("func main() { read x; print 2; }").unwrap();
        let d = testgen_distance(&p, &q, 100, &mut SplitMix64::new(5), 1000);
        assert_eq!(d, 1.0);
    }

    #[test]
    fn distance_is_within_unit_interval_and_symmetric_under_shared_seed() {
        let p = parse("func main() { read x; if x > 0 { print 1; } else { print 0; } }").unwrap();
        let q = parse("func main() { read x; if x > 50 { print 1; } else { print 0; } }").unwrap();
        let d_pq = testgen_distance(&p, &q, 200, &mut SplitMix64::new(9), 1000);
        let d_qp = testgen_distance(&q, &p, 200, &mut SplitMix64::new(9), 1000);
        assert!((0.0..=1.0).contains(&d_pq));
        // Suites are seed-identical per side, and signature inequality is
        // symmetric, but suite roles swap; equal merged sets give equality.
        assert!((d_pq - d_qp).abs() < 1e-12);
        assert!(d_pq > 0.0);
    }

    #[test]
    fn crash_statuses_are_distinct_behaviors() {
        let ok = parse("func main() { read x; print x; }").unwrap();
        let crash = parse("func main() { read x; print x / 0; }").unwrap();
        let d = testgen_distance(&ok, &crash, 50, &mut SplitMix64::new(2), 1000);
        assert_eq!(d, 1.0);
    }

    #[test]
    fn pair_seed_is_symmetric_in_labels() {
        assert_eq!(
            pair_seed(4, "bug", "p0", "p1"),
            pair_seed(4, "bug", "p1", "p0")
        );
        assert_ne!(
            pair_seed(4, "bug", "p0", "p1"),
            pair_seed(4, "bug", "p0", "p2")
        );
        assert_ne!(
            pair_seed(4, "bug-a", "p0", "p1"),
            pair_seed(4, "bug-b", "p0", "p1")
        );
    }

    #[test]
    fn diversity_zero_for_identical_patch_sets() {
        let src = "func main() { read x; if x > 0 { print 1; } else { print 0; } }";
        let patches: Vec<(String, Program)> = (0..3)
            .map(|i| (format!("p{i}"), parse(src).unwrap()))
            .collect();
        for i in 0..3 {
            assert_eq!(testgen_diversity(i, &patches, 100, 0, "bug", 1000), 0.0);
        }
    }

    #[test]
    fn diversity_sums_match_a_brute_force_double_loop() {
        let patches: Vec<(String, Program)> = vec![
            (
                "p0".into(),
                parse("func main() { read x; print x; }").unwrap(),
            ),
            (
                "p1".into(),
                parse("func main() { read x; print x + 1; }").unwrap(),
            ),
            (
                "p2".into(),
                parse("func main() { read x; print x; }").unwrap(),
            ),
        ];
        let master = 42;
        let matrix = distance_matrix(&patches, 60, master, "bug-x", 1000);
        for i in 0..patches.len() {
            // Brute force: recompute each pairwise distance independently.
            let mut expected = 0.0;
            for j in 0..patches.len() {
                if i == j {
                    continue;
                }
                let seed = pair_seed(master, "bug-x", &patches[i].0, &patches[j].0);
                let mut rng = SplitMix64::new(seed);
                expected += testgen_distance(&patches[i].1, &patches[j].1, 60, &mut rng, 1000);
            }
            let got = testgen_diversity(i, &patches, 60, master, "bug-x", 1000);
            assert_eq!(got, expected);
            assert_eq!(got, matrix[i].iter().sum::<f64>());
        }
    }
}
