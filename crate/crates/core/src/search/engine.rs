//! The generational repair loop and its serialized run record.
//!
//! Both techniques share everything up to selection scoring: `genprog` runs
//! with λ = 0 (pure test fitness), `divgp` with the configured diversity
//! weight. Initialization, mutation, crossover, and all PRNG draws are
//! identical for equal (bug, config, seed), so generation 0 is byte-identical
//! across techniques.
//!
//! Per-generation PRNG draw order: `pop_size` initial mutations; then per
//! generation, repeated (select parent 1, select parent 2, crossover cuts,
//! child-1 mutation gate + mutation, child-2 mutation gate + mutation) until
//! the next population is full. A dropped odd-tail second child consumes no
//! draws. Candidate evaluation draws nothing, so `--jobs` parallelism cannot
//! perturb the stream.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::harness::{
    classify_tests, max_fitness, passed_counts, weighted_fitness, FitnessWeights, TestCase,
};
use crate::invariants::{infer_invariants, invariant_diversity, profile, Invariant};
use crate::lang::{pretty_print, Program};
use crate::rng::SplitMix64;

use super::edit::{apply_edits, Edit, Patch, PatchOrigin};
use super::localize::localize;
use super::operators::{crossover, mutate, select, EvaluatedCandidate, SelectionContext};
use super::SearchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Genprog,
    Divgp,
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Technique::Genprog => write!(f, "genprog"),
            Technique::Divgp => write!(f, "divgp"),
        }
    }
}

impl std::str::FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "genprog" => Ok(Technique::Genprog),
            "divgp" => Ok(Technique::Divgp),
            other => Err(format!(
                "unknown technique `{other}` (expected genprog or divgp)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub pop_size: usize,
    pub max_generations: u32,
    pub tournament_k: usize,
    pub weights: FitnessWeights,
    /// λ of the combined selection score; only `divgp` uses it.
    pub diversity_weight: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            pop_size: 40,
            max_generations: 10,
            tournament_k: 2,
            weights: FitnessWeights::default(),
            diversity_weight: 0.5,
            mutation_rate: 1.0,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: &str| Err(SearchError::InvalidConfig(msg.into()));
        if self.pop_size < 2 {
            return bad("pop_size must be at least 2");
        }
        if self.tournament_k < 1 {
            return bad("tournament_k must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.diversity_weight) {
            return bad("diversity_weight must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("mutation_rate must be in [0, 1]");
        }
        self.weights.validate().map_err(SearchError::InvalidConfig)
    }
}

/// Execution knobs that are not part of the search configuration proper.
/// `jobs` deliberately stays out of the run record: it cannot change results.
#[derive(Debug, Clone, Copy)]
pub struct RepairParams {
    pub fuel: u64,
    pub min_support: usize,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub edits: Vec<Edit>,
    pub fitness: f64,
    pub diversity: u64,
    pub profile: String,
    pub passes_all: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub index: u32,
    pub candidates: Vec<CandidateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRecord {
    /// Stable per-run label (`p0`, `p1`, ...) used to derive pair seeds.
    pub label: String,
    pub edits: Vec<Edit>,
    /// Generation the patch was first found in; `None` for initialization.
    pub generation: Option<u32>,
    /// Initialization patches are reported but excluded from analysis.
    pub discarded: bool,
    pub seed: u64,
    /// Pretty-printed patched program.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub bug_id: String,
    pub technique: Technique,
    pub seed: u64,
    pub config: SearchConfig,
    pub fuel: u64,
    pub min_support: usize,
    /// Effective λ used for selection (0 for genprog).
    pub lambda: f64,
    pub positives: usize,
    pub negatives: usize,
    pub invariant_count: usize,
    pub generations: Vec<GenerationRecord>,
    pub patches: Vec<PatchRecord>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("run record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Generation-0 population dump; byte-identical across techniques for
    /// equal (bug, config, seed).
    pub fn gen0_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.generations[0])
            .expect("generation record serializes");
        s.push('\n');
        s
    }

    pub fn post_init_patches(&self) -> impl Iterator<Item = &PatchRecord> {
        self.patches.iter().filter(|p| !p.discarded)
    }
}

/// Runs the repair search for one (bug, technique, seed) and returns the
/// full run record. Deterministic: equal inputs give equal records, byte for
/// byte, regardless of `params.jobs`.
pub fn repair(
    bug_id: &str,
    original: &Program,
    whitebox: &[TestCase],
    cfg: &SearchConfig,
    technique: Technique,
    params: RepairParams,
) -> Result<RunRecord, SearchError> {
    cfg.validate()?;
    let (positives, negatives) = classify_tests(original, whitebox, params.fuel)?;
    let weights = localize(original, &positives, &negatives, params.fuel)?;
    let invariants = infer_invariants(original, whitebox, params.min_support, params.fuel)?;

    let lambda = match technique {
        Technique::Genprog => 0.0,
        Technique::Divgp => cfg.diversity_weight,
    };
    let ctx = SelectionContext {
        lambda,
        max_fitness: max_fitness(positives.len(), negatives.len(), cfg.weights),
        max_diversity: (2 * invariants.len() * (cfg.pop_size - 1)) as f64,
    };
    let pool = (params.jobs > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(params.jobs)
            .build()
            .expect("thread pool")
    });

    let mut record = RunRecord {
        bug_id: bug_id.to_string(),
        technique,
        seed: cfg.seed,
        config: cfg.clone(),
        fuel: params.fuel,
        min_support: params.min_support,
        lambda,
        positives: positives.len(),
        negatives: negatives.len(),
        invariant_count: invariants.len(),
        generations: Vec::new(),
        patches: Vec::new(),
    };

    let mut rng = SplitMix64::new(cfg.seed);
    let empty = Patch::empty(PatchOrigin::Init, cfg.seed);
    let mut population: Vec<Patch> = (0..cfg.pop_size)
        .map(|_| mutate(&empty, original, &weights, &mut rng))
        .collect();

    // (edits, found-at-init) pairs already reported; a genotype discarded at
    // initialization still counts if the differentiated search re-finds it.
    let mut seen: HashSet<(Vec<Edit>, bool)> = HashSet::new();

    let mut evaluated = evaluate_population(
        &population,
        original,
        &positives,
        &negatives,
        &invariants,
        cfg.weights,
        params.fuel,
        pool.as_ref(),
    );
    record.generations.push(generation_record(0, &evaluated));
    collect_patches(&mut record, &evaluated, original, &mut seen);

    for generation in 1..=cfg.max_generations {
        population = breed(
            &evaluated, generation, cfg, &ctx, original, &weights, &mut rng,
        );
        evaluated = evaluate_population(
            &population,
            original,
            &positives,
            &negatives,
            &invariants,
            cfg.weights,
            params.fuel,
            pool.as_ref(),
        );
        record
            .generations
            .push(generation_record(generation, &evaluated));
        collect_patches(&mut record, &evaluated, original, &mut seen);
    }

    Ok(record)
}

fn breed(
    evaluated: &[EvaluatedCandidate],
    generation: u32,
    cfg: &SearchConfig,
    ctx: &SelectionContext,
    original: &Program,
    weights: &std::collections::BTreeMap<crate::lang::StatementId, f64>,
    rng: &mut SplitMix64,
) -> Vec<Patch> {
    let mut children = Vec::with_capacity(cfg.pop_size);
    while children.len() < cfg.pop_size {
        let p1 = select(evaluated, cfg.tournament_k, ctx, rng);
        let p2 = select(evaluated, cfg.tournament_k, ctx, rng);
        let (mut c1, mut c2) = crossover(&evaluated[p1].patch, &evaluated[p2].patch, rng);
        c1.origin = PatchOrigin::Generation(generation);
        c2.origin = PatchOrigin::Generation(generation);
        if rng.next_f64() < cfg.mutation_rate {
            c1 = mutate(&c1, original, weights, rng);
        }
        children.push(c1);
        if children.len() < cfg.pop_size {
            if rng.next_f64() < cfg.mutation_rate {
                c2 = mutate(&c2, original, weights, rng);
            }
            children.push(c2);
        }
    }
    children
}

#[allow(clippy::too_many_arguments)]
fn evaluate_population(
    population: &[Patch],
    original: &Program,
    positives: &[&TestCase],
    negatives: &[&TestCase],
    invariants: &[Invariant],
    weights: FitnessWeights,
    fuel: u64,
    pool: Option<&rayon::ThreadPool>,
) -> Vec<EvaluatedCandidate> {
    let eval_one = |patch: &Patch| -> EvaluatedCandidate {
        let program = apply_edits(original, &patch.edits);
        let (pp, pn) = passed_counts(&program, positives, negatives, fuel);
        let prof = profile(&program, invariants, positives, negatives, fuel);
        EvaluatedCandidate {
            patch: patch.clone(),
            fitness: weighted_fitness(pp, pn, weights),
            passed_pos: pp,
            passed_neg: pn,
            passes_all: pp == positives.len() && pn == negatives.len(),
            diversity: 0,
            profile: prof,
        }
    };
    let mut out: Vec<EvaluatedCandidate> = match pool {
        Some(pool) => pool.install(|| {
            use rayon::prelude::*;
            population.par_iter().map(eval_one).collect()
        }),
        None => population.iter().map(eval_one).collect(),
    };
    let profiles: Vec<_> = out.iter().map(|c| c.profile.clone()).collect();
    for c in &mut out {
        c.diversity =
            invariant_diversity(&c.profile, &profiles).expect("profiles of one bug share a length");
    }
    out
}

fn generation_record(index: u32, evaluated: &[EvaluatedCandidate]) -> GenerationRecord {
    GenerationRecord {
        index,
        candidates: evaluated
            .iter()
            .map(|c| CandidateRecord {
                edits: c.patch.edits.clone(),
                fitness: c.fitness,
                diversity: c.diversity,
                profile: c.profile.chars.clone(),
                passes_all: c.passes_all,
            })
            .collect(),
    }
}

fn collect_patches(
    record: &mut RunRecord,
    evaluated: &[EvaluatedCandidate],
    original: &Program,
    seen: &mut HashSet<(Vec<Edit>, bool)>,
) {
    for candidate in evaluated {
        if !candidate.passes_all {
            continue;
        }
        let is_init = candidate.patch.origin == PatchOrigin::Init;
        if !seen.insert((candidate.patch.edits.clone(), is_init)) {
            continue;
        }
        let generation = match candidate.patch.origin {
            PatchOrigin::Init => None,
            PatchOrigin::Generation(g) => Some(g),
        };
        record.patches.push(PatchRecord {
            label: format!("p{}", record.patches.len()),
            edits: candidate.patch.edits.clone(),
            generation,
            discarded: is_init,
            seed: candidate.patch.seed,
            source: pretty_print(&apply_edits(original, &candidate.patch.edits)),
        });
    }
}

/// Exhaustively enumerates the single-edit neighborhood reachable by the
/// mutation operator (positively weighted targets, any donor) and returns
/// every edit whose patched program passes the whole white-box suite. This
/// is the offline verification that a one-edit fix exists for a bug.
pub fn enumerate_single_edit_fixes(
    original: &Program,
    whitebox: &[TestCase],
    fuel: u64,
) -> Result<Vec<Edit>, SearchError> {
    let (positives, negatives) = classify_tests(original, whitebox, fuel)?;
    let weights = localize(original, &positives, &negatives, fuel)?;
    let donors: Vec<_> = original.statements().iter().map(|s| s.id).collect();
    let mut fixes = Vec::new();
    let consider = |edit: Edit, fixes: &mut Vec<Edit>| {
        let program = apply_edits(original, &[edit]);
        if &program == original {
            return;
        }
        let (pp, pn) = passed_counts(&program, &positives, &negatives, fuel);
        if pp == positives.len() && pn == negatives.len() {
            fixes.push(edit);
        }
    };
    for (&target, &w) in &weights {
        if w <= 0.0 {
            continue;
        }
        consider(
            Edit {
                kind: super::edit::EditKind::Delete,
                target,
                donor: None,
            },
            &mut fixes,
        );
        for &donor in &donors {
            consider(
                Edit {
                    kind: super::edit::EditKind::Append,
                    target,
                    donor: Some(donor),
                },
                &mut fixes,
            );
            consider(
                Edit {
                    kind: super::edit::EditKind::Replace,
                    target,
                    donor: Some(donor),
                },
                &mut fixes,
            );
        }
    }
    Ok(fixes)
}
