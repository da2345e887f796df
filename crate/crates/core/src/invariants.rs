//! Likely-invariant inference from traces of the original program, candidate
//! profiling, and the invariant-based semantic distance and diversity.
//!
//! Inference instantiates a closed grammar of seven templates at each
//! program point and keeps every instantiation that held on all samples of
//! its point, provided the point collected at least `min_support` samples.
//! No implication pruning is done; `x == 3` and `x >= 3` coexist.
//!
//! A profile is one character per (invariant, suite class) pair, positive
//! class first: `U` if the invariant's point was never reached in that
//! class, `S` if reached and never violated, `V` if violated at least once.
//! A sample that reaches the point but no longer carries an operand variable
//! counts as a violation.

use std::collections::HashMap;

use thiserror::Error;

use crate::harness::TestCase;
use crate::lang::{
    compute_scopes, execute_with_sink, PointTable, Program, ProgramPoint, TraceSink, Value,
};

#[derive(Debug, Clone, PartialEq)]
pub enum InvariantKind {
    /// `v == c`: the variable was the same value in every sample.
    EqConst { var: String, value: f64 },
    /// `v >= c` with `c` the minimum observed value.
    GeConst { var: String, min: f64 },
    /// `v <= c` with `c` the maximum observed value.
    LeConst { var: String, max: f64 },
    /// `v != 0` in every sample.
    NeZero { var: String },
    /// `v1 == v2` in every sample (unordered; operands in name order).
    VarEq { left: String, right: String },
    /// `v1 < v2` in every sample (ordered).
    VarLt { left: String, right: String },
    /// `v1 <= v2` in every sample (ordered).
    VarLe { left: String, right: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub point: ProgramPoint,
    pub kind: InvariantKind,
}

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let body = match &self.kind {
            InvariantKind::EqConst { var, value } => format!("{var} == {value}"),
            InvariantKind::GeConst { var, min } => format!("{var} >= {min}"),
            InvariantKind::LeConst { var, max } => format!("{var} <= {max}"),
            InvariantKind::NeZero { var } => format!("{var} != 0"),
            InvariantKind::VarEq { left, right } => format!("{left} == {right}"),
            InvariantKind::VarLt { left, right } => format!("{left} < {right}"),
            InvariantKind::VarLe { left, right } => format!("{left} <= {right}"),
        };
        write!(f, "{}: {}", self.point, body)
    }
}

impl Invariant {
    /// Evaluates the invariant on one sample (sorted by variable name).
    /// `None` means an operand variable is absent from the sample.
    pub fn holds_on<S: AsRef<str>>(&self, values: &[(S, Value)]) -> Option<bool> {
        let get = |name: &str| -> Option<f64> {
            values
                .binary_search_by(|(n, _)| n.as_ref().cmp(name))
                .ok()
                .map(|i| values[i].1.as_f64())
        };
        match &self.kind {
            InvariantKind::EqConst { var, value } => Some(get(var)? == *value),
            InvariantKind::GeConst { var, min } => Some(get(var)? >= *min),
            InvariantKind::LeConst { var, max } => Some(get(var)? <= *max),
            InvariantKind::NeZero { var } => Some(get(var)? != 0.0),
            InvariantKind::VarEq { left, right } => Some(get(left)? == get(right)?),
            InvariantKind::VarLt { left, right } => Some(get(left)? < get(right)?),
            InvariantKind::VarLe { left, right } => Some(get(left)? <= get(right)?),
        }
    }
}

/// Fixed-length reachability/violation string over `{U, S, V}`; one
/// character per (invariant, suite class), positive class first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InvariantProfile {
    pub chars: String,
}

impl std::fmt::Display for InvariantProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.chars)
    }
}

impl InvariantProfile {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InvariantError {
    #[error("profile length mismatch: {a} vs {b} (profiles of different bugs?)")]
    LengthMismatch { a: usize, b: usize },
    #[error("no test execution reached any program point")]
    EmptyTraces,
}

// Streaming per-point statistics; O(vars^2) state instead of stored traces.
struct PointStats {
    count: usize,
    vars: Vec<String>,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    firsts: Vec<f64>,
    all_equal: Vec<bool>,
    nonzero: Vec<bool>,
    pair_eq: Vec<bool>, // i * n + j, i < j used
    pair_lt: Vec<bool>, // ordered i != j
    pair_le: Vec<bool>,
}

impl PointStats {
    fn new(vars: Vec<String>) -> Self {
        let n = vars.len();
        Self {
            count: 0,
            vars,
            mins: vec![f64::INFINITY; n],
            maxs: vec![f64::NEG_INFINITY; n],
            firsts: vec![0.0; n],
            all_equal: vec![true; n],
            nonzero: vec![true; n],
            pair_eq: vec![true; n * n],
            pair_lt: vec![true; n * n],
            pair_le: vec![true; n * n],
        }
    }

    fn update(&mut self, values: &[(&str, Value)]) {
        debug_assert_eq!(values.len(), self.vars.len());
        let n = self.vars.len();
        let vals: Vec<f64> = values.iter().map(|(_, v)| v.as_f64()).collect();
        if self.count == 0 {
            self.firsts.copy_from_slice(&vals);
        }
        self.count += 1;
        for (i, &v) in vals.iter().enumerate() {
            self.mins[i] = self.mins[i].min(v);
            self.maxs[i] = self.maxs[i].max(v);
            if v != self.firsts[i] {
                self.all_equal[i] = false;
            }
            if v == 0.0 {
                self.nonzero[i] = false;
            }
        }
        // Values are always finite, so >= is the exact negation of <.
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let k = i * n + j;
                if vals[i] != vals[j] {
                    self.pair_eq[k] = false;
                }
                if vals[i] >= vals[j] {
                    self.pair_lt[k] = false;
                }
                if vals[i] > vals[j] {
                    self.pair_le[k] = false;
                }
            }
        }
    }
}

struct InferenceSink {
    stats: Vec<Option<PointStats>>,
}

impl TraceSink for InferenceSink {
    fn on_sample(&mut self, point_idx: usize, values: &[(&str, Value)]) {
        let slot = &mut self.stats[point_idx];
        if slot.is_none() {
            *slot = Some(PointStats::new(
                values.iter().map(|(n, _)| n.to_string()).collect(),
            ));
        }
        slot.as_mut().unwrap().update(values);
    }
}

/// Infers every invariant that held on all samples of its point, over the
/// whole inference suite (positives and negatives together), in canonical
/// order: program-point order, then template order, then operand order.
pub fn infer_invariants(
    original: &Program,
    suite: &[TestCase],
    min_support: usize,
    fuel: u64,
) -> Result<Vec<Invariant>, InvariantError> {
    let scopes = compute_scopes(original);
    let points = PointTable::new(original);
    let mut sink = InferenceSink {
        stats: (0..points.points.len()).map(|_| None).collect(),
    };
    for test in suite {
        execute_with_sink(
            original,
            &scopes,
            &points,
            &test.input,
            fuel,
            Some(&mut sink),
        );
    }

    if sink.stats.iter().all(|s| s.is_none()) {
        return Err(InvariantError::EmptyTraces);
    }

    let mut invariants = Vec::new();
    for (idx, point) in points.points.iter().enumerate() {
        let Some(stats) = &sink.stats[idx] else {
            continue;
        };
        if stats.count < min_support {
            continue;
        }
        let n = stats.vars.len();
        let var = |i: usize| stats.vars[i].clone();
        let mut push = |kind: InvariantKind| {
            invariants.push(Invariant {
                point: point.clone(),
                kind,
            });
        };
        for i in 0..n {
            if stats.all_equal[i] {
                push(InvariantKind::EqConst {
                    var: var(i),
                    value: stats.firsts[i],
                });
            }
        }
        for i in 0..n {
            push(InvariantKind::GeConst {
                var: var(i),
                min: stats.mins[i],
            });
        }
        for i in 0..n {
            push(InvariantKind::LeConst {
                var: var(i),
                max: stats.maxs[i],
            });
        }
        for i in 0..n {
            if stats.nonzero[i] {
                push(InvariantKind::NeZero { var: var(i) });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if stats.pair_eq[i * n + j] {
                    push(InvariantKind::VarEq {
                        left: var(i),
                        right: var(j),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && stats.pair_lt[i * n + j] {
                    push(InvariantKind::VarLt {
                        left: var(i),
                        right: var(j),
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && stats.pair_le[i * n + j] {
                    push(InvariantKind::VarLe {
                        left: var(i),
                        right: var(j),
                    });
                }
            }
        }
    }
    Ok(invariants)
}

struct ProfileSink<'a> {
    invariants: &'a [Invariant],
    by_point: &'a [Vec<usize>],
    reached: Vec<bool>,
    violated: Vec<bool>,
}

impl TraceSink for ProfileSink<'_> {
    fn on_sample(&mut self, point_idx: usize, values: &[(&str, Value)]) {
        for &i in &self.by_point[point_idx] {
            self.reached[i] = true;
            if self.violated[i] {
                continue;
            }
            if self.invariants[i].holds_on(values) != Some(true) {
                self.violated[i] = true;
            }
        }
    }
}

/// Profiles a candidate against the invariant set of its bug: runs it on all
/// positives, then all negatives, with tracing, and aggregates per-class
/// reach/violate flags into the canonical `{U,S,V}` string.
pub fn profile(
    candidate: &Program,
    invariants: &[Invariant],
    positives: &[&TestCase],
    negatives: &[&TestCase],
    fuel: u64,
) -> InvariantProfile {
    let scopes = compute_scopes(candidate);
    let points = PointTable::new(candidate);
    let mut by_point: Vec<Vec<usize>> = vec![Vec::new(); points.points.len()];
    let point_index: HashMap<&ProgramPoint, usize> = points
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (p, i))
        .collect();
    for (i, inv) in invariants.iter().enumerate() {
        if let Some(&idx) = point_index.get(&inv.point) {
            by_point[idx].push(i);
        }
    }

    let run_class = |tests: &[&TestCase]| -> (Vec<bool>, Vec<bool>) {
        let mut sink = ProfileSink {
            invariants,
            by_point: &by_point,
            reached: vec![false; invariants.len()],
            violated: vec![false; invariants.len()],
        };
        for test in tests {
            execute_with_sink(
                candidate,
                &scopes,
                &points,
                &test.input,
                fuel,
                Some(&mut sink),
            );
        }
        (sink.reached, sink.violated)
    };

    let (reached_pos, violated_pos) = run_class(positives);
    let (reached_neg, violated_neg) = run_class(negatives);

    let mut chars = String::with_capacity(invariants.len() * 2);
    for i in 0..invariants.len() {
        for (reached, violated) in [(&reached_pos, &violated_pos), (&reached_neg, &violated_neg)] {
            chars.push(if !reached[i] {
                'U'
            } else if violated[i] {
                'V'
            } else {
                'S'
            });
        }
    }
    InvariantProfile { chars }
}

/// Hamming distance between two equal-length profiles.
pub fn invariant_distance(
    a: &InvariantProfile,
    b: &InvariantProfile,
) -> Result<usize, InvariantError> {
    if a.len() != b.len() {
        return Err(InvariantError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    Ok(a.chars
        .bytes()
        .zip(b.chars.bytes())
        .filter(|(x, y)| x != y)
        .count())
}

/// Semantic diversity of `member` within `population`: the sum of its
/// distances to every other member. The member's own entry contributes 0,
/// so the sum may safely run over the whole population.
pub fn invariant_diversity(
    member: &InvariantProfile,
    population: &[InvariantProfile],
) -> Result<u64, InvariantError> {
    let mut total = 0u64;
    for other in population {
        total += invariant_distance(member, other)? as u64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TestOrigin;
    use crate::lang::parse;
    use crate::rng::SplitMix64;

    fn test(input: &str, expected: &str) -> TestCase {
        TestCase {
            id: format!("t-{input}"),
            input: input.into(),
            expected_output: expected.into(),
            origin: TestOrigin::Whitebox,
        }
    }

    fn profile_str(s: &str) -> InvariantProfile {
        InvariantProfile { chars: s.into() }
    }

    #[test]
    fn empty_suite_yields_empty_traces_error() {
        let p = parse("func main() { print 1; }").unwrap();
        assert_eq!(
            infer_invariants(&p, &[], 1, 1000),
            Err(InvariantError::EmptyTraces)
        );
    }

    #[test]
    fn constant_template_with_full_support() {
        // entry(f) sees x == 3 in three samples.
        let src = "func main() { f(3); f(3); f(3); }\nfunc f(x: int) { print x; }";
        let p = parse(src).unwrap();
        let invs = infer_invariants(&p, &[test("", "3\n3\n3\n")], 3, 1000).unwrap();
        let rendered: Vec<String> = invs.iter().map(|i| i.to_string()).collect();
        assert!(
            rendered.contains(&"entry(f): x == 3".to_string()),
            "{rendered:?}"
        );
        assert!(rendered.contains(&"entry(f): x >= 3".to_string()));
        assert!(rendered.contains(&"entry(f): x <= 3".to_string()));
        assert!(rendered.contains(&"entry(f): x != 0".to_string()));
    }

    #[test]
    fn bounds_come_from_min_and_max() {
        let src = "func main() { f(1); f(5); f(1); }\nfunc f(x: int) { print x; }";
        let p = parse(src).unwrap();
        let invs = infer_invariants(&p, &[test("", "1\n5\n1\n")], 3, 1000).unwrap();
        let rendered: Vec<String> = invs.iter().map(|i| i.to_string()).collect();
        assert!(rendered.contains(&"entry(f): x >= 1".to_string()));
        assert!(rendered.contains(&"entry(f): x <= 5".to_string()));
        assert!(!rendered.iter().any(|r| r.starts_with("entry(f): x == ")));
    }

    #[test]
    fn support_threshold_suppresses_sparse_points() {
        let src = "func main() { f(2); f(2); }\nfunc f(x: int) { print x; }";
        let p = parse(src).unwrap();
        let invs = infer_invariants(&p, &[test("", "2\n2\n")], 3, 1000).unwrap();
        assert!(!invs
            .iter()
            .any(|i| i.point == ProgramPoint::Entry("f".into())));
        // main's entry/exit are sampled once per run: also below support.
        assert!(invs.is_empty());
    }

    #[test]
    fn inference_is_deterministic_and_canonically_ordered() {
        let src = "func main() { read n; i = 0; while i < n { i = i + 1; } print i; }";
        let p = parse(src).unwrap();
        let suite = vec![test("2", "2\n"), test("3", "3\n"), test("4", "4\n")];
        let a = infer_invariants(&p, &suite, 3, 1000).unwrap();
        let b = infer_invariants(&p, &suite, 3, 1000).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn original_profile_never_violates_on_inference_inputs() {
        let src = "func main() { read n; i = 0; while i < n { i = i + 1; } print i; }";
        let p = parse(src).unwrap();
        let suite = vec![test("2", "2\n"), test("3", "3\n"), test("4", "99\n")];
        let invs = infer_invariants(&p, &suite, 3, 1000).unwrap();
        let (pos, neg): (Vec<&TestCase>, Vec<&TestCase>) =
            (vec![&suite[0], &suite[1]], vec![&suite[2]]);
        let prof = profile(&p, &invs, &pos, &neg, 1000);
        assert_eq!(prof.len(), invs.len() * 2);
        assert!(!prof.chars.contains('V'), "profile {prof} has violations");
    }

    #[test]
    fn deleting_the_only_loop_marks_loop_invariants_unreached() {
        let with_loop =
            parse("func main() { read n; i = 0; while i < n { i = i + 1; } print i; }").unwrap();
        let suite = vec![test("2", "2\n"), test("3", "3\n"), test("4", "4\n")];
        let invs = infer_invariants(&with_loop, &suite, 3, 1000).unwrap();
        let loop_positions: Vec<usize> = invs
            .iter()
            .enumerate()
            .filter(|(_, inv)| matches!(inv.point, ProgramPoint::LoopHead(_)))
            .map(|(i, _)| i)
            .collect();
        assert!(!loop_positions.is_empty());

        // Same statement ids, loop removed (ids 2..4 gone).
        let no_loop = parse("func main() { read n; i = 0; print i; }").unwrap();
        let all: Vec<&TestCase> = suite.iter().collect();
        let prof = profile(&no_loop, &invs, &all, &all, 1000);
        let bytes = prof.chars.as_bytes();
        for i in loop_positions {
            assert_eq!(bytes[2 * i] as char, 'U');
            assert_eq!(bytes[2 * i + 1] as char, 'U');
        }
    }

    #[test]
    fn violating_mutant_flips_positions_to_v() {
        let original = parse("func main() { read n; x = 3; print x + n; }").unwrap();
        let suite = vec![test("1", "4\n"), test("2", "5\n"), test("3", "6\n")];
        let invs = infer_invariants(&original, &suite, 3, 1000).unwrap();
        let target: Vec<usize> = invs
            .iter()
            .enumerate()
            .filter(|(_, inv)| inv.to_string() == "exit(main): x == 3")
            .map(|(i, _)| i)
            .collect();
        assert_eq!(target.len(), 1);

        let mutant = parse("func main() { read n; x = 99; print x + n; }").unwrap();
        let all: Vec<&TestCase> = suite.iter().collect();
        let prof = profile(&mutant, &invs, &all, &all, 1000);
        let bytes = prof.chars.as_bytes();
        assert_eq!(bytes[2 * target[0]] as char, 'V');
        assert_eq!(bytes[2 * target[0] + 1] as char, 'V');
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            invariant_distance(&profile_str("SSU"), &profile_str("SSU")),
            Ok(0)
        );
        assert_eq!(
            invariant_distance(&profile_str("SVU"), &profile_str("SSV")),
            Ok(2)
        );
        assert!(matches!(
            invariant_distance(&profile_str("SS"), &profile_str("SSS")),
            Err(InvariantError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn distance_matches_positional_loop_oracle() {
        let mut rng = SplitMix64::new(99);
        let alphabet = ['U', 'S', 'V'];
        for _ in 0..200 {
            let len = rng.next_below(12) as usize;
            let mk = |rng: &mut SplitMix64| -> InvariantProfile {
                let chars: String = (0..len)
                    .map(|_| alphabet[rng.next_below(3) as usize])
                    .collect();
                InvariantProfile { chars }
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let mut expected = 0;
            for i in 0..len {
                if a.chars.as_bytes()[i] != b.chars.as_bytes()[i] {
                    expected += 1;
                }
            }
            assert_eq!(invariant_distance(&a, &b).unwrap(), expected);
        }
    }

    #[test]
    fn identical_population_has_zero_diversity() {
        let pop = vec![
            profile_str("SSVU"),
            profile_str("SSVU"),
            profile_str("SSVU"),
        ];
        for member in &pop {
            assert_eq!(invariant_diversity(member, &pop), Ok(0));
        }
    }

    #[test]
    fn diversity_is_the_sum_of_pairwise_distances() {
        let a = profile_str("SSSS");
        let b = profile_str("SSVV");
        let c = profile_str("VVVV");
        let pop = vec![a.clone(), b.clone(), c.clone()];
        let d = |x: &InvariantProfile, y: &InvariantProfile| invariant_distance(x, y).unwrap();
        assert_eq!(
            invariant_diversity(&a, &pop).unwrap() as usize,
            d(&a, &b) + d(&a, &c)
        );
        assert_eq!(
            invariant_diversity(&b, &pop).unwrap() as usize,
            d(&b, &a) + d(&b, &c)
        );
        assert_eq!(
            invariant_diversity(&c, &pop).unwrap() as usize,
            d(&c, &a) + d(&c, &b)
        );
    }
}
