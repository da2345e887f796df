//! Mutation, one-point crossover, and tournament selection.
//!
//! PRNG draw order is part of each operator's contract:
//! - `mutate`, per attempt: target (one f64 against the cumulative weight
//!   mass), operator (one bounded draw: 0 append, 1 replace, 2 delete),
//!   donor (one bounded draw, append/replace only).
//! - `crossover`: cut point in `a`, then cut point in `b`.
//! - `select`: k contestant draws in order; a tie between the incumbent and
//!   the current contestant costs one extra coin draw.

use std::collections::BTreeMap;

use crate::invariants::InvariantProfile;
use crate::lang::{Program, StatementId};
use crate::rng::SplitMix64;

use super::edit::{apply_edits, Edit, EditKind, Patch};

/// Attempts before mutate gives up and returns the patch unchanged.
pub const MUTATION_RETRIES: usize = 24;

/// Appends one freshly sampled edit to `patch`. Targets are drawn from the
/// positively weighted statements still present in the patched program;
/// donors come uniformly from the original program's statements. Candidate
/// edits that do not change the program (out-of-scope donor, no-op) are
/// resampled up to [`MUTATION_RETRIES`] times, then the patch is returned
/// unchanged. The input patch is never modified.
pub fn mutate(
    patch: &Patch,
    original: &Program,
    weights: &BTreeMap<StatementId, f64>,
    rng: &mut SplitMix64,
) -> Patch {
    let base = apply_edits(original, &patch.edits);
    let targets: Vec<(StatementId, f64)> = weights
        .iter()
        .filter(|(id, w)| **w > 0.0 && base.find_stmt(**id).is_some())
        .map(|(id, w)| (*id, *w))
        .collect();
    if targets.is_empty() {
        return patch.clone();
    }
    let donors: Vec<StatementId> = original.statements().iter().map(|s| s.id).collect();
    let total: f64 = targets.iter().map(|(_, w)| w).sum();

    for _ in 0..MUTATION_RETRIES {
        let mut u = rng.next_f64() * total;
        let mut target = targets[targets.len() - 1].0;
        for (id, w) in &targets {
            if u < *w {
                target = *id;
                break;
            }
            u -= w;
        }
        let kind = match rng.next_below(3) {
            0 => EditKind::Append,
            1 => EditKind::Replace,
            _ => EditKind::Delete,
        };
        let donor = if kind == EditKind::Delete {
            None
        } else {
            Some(donors[rng.next_below(donors.len() as u64) as usize])
        };
        let mut edits = patch.edits.clone();
        edits.push(Edit {
            kind,
            target,
            donor,
        });
        if apply_edits(original, &edits) != base {
            return Patch {
                edits,
                origin: patch.origin,
                seed: patch.seed,
            };
        }
    }
    patch.clone()
}

/// One-point crossover: children are `a[..ca] + b[cb..]` and
/// `b[..cb] + a[ca..]`. Origins and seeds are inherited from `a` and `b`
/// respectively; the breeder re-tags children with their birth generation.
pub fn crossover(a: &Patch, b: &Patch, rng: &mut SplitMix64) -> (Patch, Patch) {
    let ca = rng.next_below(a.edits.len() as u64 + 1) as usize;
    let cb = rng.next_below(b.edits.len() as u64 + 1) as usize;
    let child1: Vec<Edit> = a.edits[..ca]
        .iter()
        .chain(&b.edits[cb..])
        .copied()
        .collect();
    let child2: Vec<Edit> = b.edits[..cb]
        .iter()
        .chain(&a.edits[ca..])
        .copied()
        .collect();
    (
        Patch {
            edits: child1,
            origin: a.origin,
            seed: a.seed,
        },
        Patch {
            edits: child2,
            origin: b.origin,
            seed: b.seed,
        },
    )
}

/// A candidate with its per-generation evaluation attached.
#[derive(Debug, Clone)]
pub struct EvaluatedCandidate {
    pub patch: Patch,
    pub fitness: f64,
    pub passed_pos: usize,
    pub passed_neg: usize,
    pub passes_all: bool,
    pub diversity: u64,
    pub profile: InvariantProfile,
}

/// Normalization constants for the combined selection score.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext {
    /// Diversity weight λ; 0 recovers pure fitness selection.
    pub lambda: f64,
    pub max_fitness: f64,
    /// `2 * |invariants| * (pop_size - 1)`.
    pub max_diversity: f64,
}

pub fn score(candidate: &EvaluatedCandidate, ctx: &SelectionContext) -> f64 {
    let fit = if ctx.max_fitness > 0.0 {
        candidate.fitness / ctx.max_fitness
    } else {
        0.0
    };
    let div = if ctx.max_diversity > 0.0 {
        candidate.diversity as f64 / ctx.max_diversity
    } else {
        0.0
    };
    (1.0 - ctx.lambda) * fit + ctx.lambda * div
}

/// Tournament selection over `k` uniform contestant draws; returns the
/// winner's index. Score ties between the incumbent and a contestant are
/// broken by a seeded coin.
pub fn select(
    population: &[EvaluatedCandidate],
    tournament_k: usize,
    ctx: &SelectionContext,
    rng: &mut SplitMix64,
) -> usize {
    let n = population.len() as u64;
    let mut best = rng.next_below(n) as usize;
    let mut best_score = score(&population[best], ctx);
    for _ in 1..tournament_k {
        let challenger = rng.next_below(n) as usize;
        let challenger_score = score(&population[challenger], ctx);
        if challenger_score > best_score || (challenger_score == best_score && rng.next_bool()) {
            best = challenger;
            best_score = challenger_score;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, pretty_print};
    use crate::search::edit::PatchOrigin;

    fn uniform_weights(p: &Program) -> BTreeMap<StatementId, f64> {
        p.statements().iter().map(|s| (s.id, 1.0)).collect()
    }

    fn candidate(fitness: f64, diversity: u64) -> EvaluatedCandidate {
        EvaluatedCandidate {
            patch: Patch::empty(PatchOrigin::Init, 0),
            fitness,
            passed_pos: 0,
            passed_neg: 0,
            passes_all: false,
            diversity,
            profile: InvariantProfile {
                chars: String::new(),
            },
        }
    }

    #[test]
    fn delete_on_single_statement_body_yields_noop_program() {
        let original = parse("func main() { print 1; }").unwrap();
        let weights = uniform_weights(&original);
        // Find a seed whose first attempt draws delete.
        for seed in 0..64 {
            let mut rng = SplitMix64::new(seed);
            let patch = mutate(
                &Patch::empty(PatchOrigin::Init, seed),
                &original,
                &weights,
                &mut rng,
            );
            if patch.edits.first().map(|e| e.kind) == Some(EditKind::Delete) {
                let program = apply_edits(&original, &patch.edits);
                assert_eq!(program.statement_count(), 0);
                let out = crate::lang::execute(&program, "", 100, false);
                assert_eq!(out.stdout, "");
                return;
            }
        }
        panic!("no seed in 0..64 produced a delete");
    }

    #[test]
    fn append_grows_statement_count_by_donor_size() {
        let original = parse("func main() { read n; print n; print 0; }").unwrap();
        let weights = uniform_weights(&original);
        for seed in 0..64 {
            let mut rng = SplitMix64::new(seed);
            let patch = mutate(
                &Patch::empty(PatchOrigin::Init, seed),
                &original,
                &weights,
                &mut rng,
            );
            if patch.edits.first().map(|e| e.kind) == Some(EditKind::Append) {
                let program = apply_edits(&original, &patch.edits);
                assert_eq!(program.statement_count(), original.statement_count() + 1);
                return;
            }
        }
        panic!("no seed in 0..64 produced an append");
    }

    #[test]
    fn mutate_is_deterministic_and_nondestructive() {
        let original = parse("func main() { read n; print n + 1; print 0; }").unwrap();
        let copy = original.clone();
        let weights = uniform_weights(&original);
        let base = Patch::empty(PatchOrigin::Init, 3);
        let a = mutate(&base, &original, &weights, &mut SplitMix64::new(3));
        let b = mutate(&base, &original, &weights, &mut SplitMix64::new(3));
        assert_eq!(a, b);
        assert_eq!(a.edits.len(), 1);
        assert!(base.edits.is_empty(), "input patch must not change");
        assert_eq!(original, copy, "original program must not change");
    }

    #[test]
    fn mutated_candidates_always_validate() {
        let original =
            parse("func main() { read n; s = 0; while n > 0 { s = s + n; n = n - 1; } print s; }")
                .unwrap();
        let weights = uniform_weights(&original);
        let mut rng = SplitMix64::new(17);
        let mut patch = Patch::empty(PatchOrigin::Init, 17);
        for _ in 0..40 {
            patch = mutate(&patch, &original, &weights, &mut rng);
            let program = apply_edits(&original, &patch.edits);
            let printed = pretty_print(&program);
            assert!(
                crate::lang::parse(&printed).is_ok(),
                "mutant must stay well-formed:\n{printed}"
            );
        }
    }

    #[test]
    fn crossover_splices_at_cut_points() {
        let e = |t: u32| Edit {
            kind: EditKind::Delete,
            target: StatementId(t),
            donor: None,
        };
        let a = Patch {
            edits: vec![e(1), e(2)],
            origin: PatchOrigin::Init,
            seed: 0,
        };
        let b = Patch {
            edits: vec![e(3)],
            origin: PatchOrigin::Init,
            seed: 0,
        };
        // Search for a seed giving cuts (1, 0): child1 = [e1, e3], child2 = [e2].
        for seed in 0..256 {
            let mut probe = SplitMix64::new(seed);
            let (ca, cb) = (probe.next_below(3), probe.next_below(2));
            if (ca, cb) == (1, 0) {
                let mut rng = SplitMix64::new(seed);
                let (c1, c2) = crossover(&a, &b, &mut rng);
                assert_eq!(c1.edits, vec![e(1), e(3)]);
                assert_eq!(c2.edits, vec![e(2)]);
                return;
            }
        }
        panic!("no seed produced cuts (1, 0)");
    }

    #[test]
    fn crossover_of_empty_patches_is_empty() {
        let a = Patch::empty(PatchOrigin::Init, 0);
        let b = Patch::empty(PatchOrigin::Init, 0);
        let (c1, c2) = crossover(&a, &b, &mut SplitMix64::new(9));
        assert!(c1.edits.is_empty());
        assert!(c2.edits.is_empty());
    }

    #[test]
    fn crossover_conserves_the_edit_multiset() {
        let e = |t: u32| Edit {
            kind: EditKind::Delete,
            target: StatementId(t),
            donor: None,
        };
        let mut rng = SplitMix64::new(5);
        for round in 0..100u32 {
            let a = Patch {
                edits: (0..(round % 5)).map(e).collect(),
                origin: PatchOrigin::Init,
                seed: 0,
            };
            let b = Patch {
                edits: (10..(10 + round % 4)).map(e).collect(),
                origin: PatchOrigin::Init,
                seed: 0,
            };
            let (c1, c2) = crossover(&a, &b, &mut rng);
            let mut parents: Vec<Edit> = a.edits.iter().chain(&b.edits).copied().collect();
            let mut children: Vec<Edit> = c1.edits.iter().chain(&c2.edits).copied().collect();
            parents.sort_by_key(|e| e.target);
            children.sort_by_key(|e| e.target);
            assert_eq!(parents, children);
        }
    }

    #[test]
    fn higher_fitness_wins_when_lambda_is_zero() {
        let population = vec![candidate(15.0, 0), candidate(5.0, 100)];
        let ctx = SelectionContext {
            lambda: 0.0,
            max_fitness: 15.0,
            max_diversity: 100.0,
        };
        for seed in 0..100 {
            // Replay the documented draw order to know the contestants.
            let mut probe = SplitMix64::new(seed);
            let drawn = [probe.next_below(2) as usize, probe.next_below(2) as usize];
            let winner = select(&population, 2, &ctx, &mut SplitMix64::new(seed));
            if drawn.contains(&0) {
                assert_eq!(winner, 0, "fitness 15 must beat 5 (seed {seed})");
            } else {
                assert_eq!(winner, 1);
            }
        }
    }

    #[test]
    fn higher_diversity_wins_on_equal_fitness_when_lambda_positive() {
        let population = vec![candidate(10.0, 4), candidate(10.0, 0)];
        let ctx = SelectionContext {
            lambda: 0.5,
            max_fitness: 10.0,
            max_diversity: 4.0,
        };
        for seed in 0..100 {
            let mut probe = SplitMix64::new(seed);
            let drawn = [probe.next_below(2) as usize, probe.next_below(2) as usize];
            let winner = select(&population, 2, &ctx, &mut SplitMix64::new(seed));
            if drawn.contains(&0) {
                assert_eq!(winner, 0, "diversity 4 must beat 0 (seed {seed})");
            } else {
                assert_eq!(winner, 1);
            }
        }
    }

    #[test]
    fn ties_replay_deterministically() {
        let population = vec![candidate(10.0, 0), candidate(10.0, 0)];
        let ctx = SelectionContext {
            lambda: 0.0,
            max_fitness: 10.0,
            max_diversity: 0.0,
        };
        for seed in 0..50 {
            let a = select(&population, 2, &ctx, &mut SplitMix64::new(seed));
            let b = select(&population, 2, &ctx, &mut SplitMix64::new(seed));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lambda_zero_ignores_diversity_perturbations() {
        let base = vec![candidate(15.0, 0), candidate(5.0, 0)];
        let perturbed = vec![candidate(15.0, 3), candidate(5.0, 97)];
        let ctx = SelectionContext {
            lambda: 0.0,
            max_fitness: 15.0,
            max_diversity: 100.0,
        };
        for seed in 0..100 {
            let a = select(&base, 2, &ctx, &mut SplitMix64::new(seed));
            let b = select(&perturbed, 2, &ctx, &mut SplitMix64::new(seed));
            assert_eq!(a, b, "diversity must not affect selection at lambda 0");
        }
    }
}
