//! Held-out correctness analysis, patch-set diversity under both metrics,
//! and deterministic report rendering.
//!
//! Patches found during initialization never enter these reports: analysis
//! starts from [`collect_analysis_patches`], which drops them.

mod fisher;

pub use fisher::{fisher_exact_two_sided, FisherOutcome};

use std::collections::BTreeMap;

use crate::bundle::BugBundle;
use crate::harness::{classify_tests, run_test};
use crate::invariants::{infer_invariants, invariant_diversity, profile};
use crate::lang::Program;
use crate::search::{apply_edits, RunRecord, Technique};
use crate::testgen::distance_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiversityMetric {
    Invariant,
    Testgen,
}

impl std::fmt::Display for DiversityMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiversityMetric::Invariant => write!(f, "invariant"),
            DiversityMetric::Testgen => write!(f, "testgen"),
        }
    }
}

impl std::str::FromStr for DiversityMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "invariant" => Ok(DiversityMetric::Invariant),
            "testgen" => Ok(DiversityMetric::Testgen),
            other => Err(format!(
                "unknown metric `{other}` (expected invariant or testgen)"
            )),
        }
    }
}

/// A post-initialization patch materialized for analysis.
#[derive(Debug, Clone)]
pub struct AnalysisPatch {
    pub bug: String,
    pub technique: Technique,
    pub seed: u64,
    /// Unique within (bug, technique): `seed<N>/p<k>`.
    pub label: String,
    pub generation: u32,
    pub program: Program,
}

/// Materializes every non-discarded patch of `records` against the bundle's
/// buggy program, ordered by (technique, seed, label).
pub fn collect_analysis_patches(bundle: &BugBundle, records: &[RunRecord]) -> Vec<AnalysisPatch> {
    let mut patches = Vec::new();
    for record in records {
        for patch in record.post_init_patches() {
            patches.push(AnalysisPatch {
                bug: record.bug_id.clone(),
                technique: record.technique,
                seed: record.seed,
                label: format!("seed{}/{}", record.seed, patch.label),
                generation: patch
                    .generation
                    .expect("post-init patches carry a generation"),
                program: apply_edits(&bundle.program, &patch.edits),
            });
        }
    }
    patches.sort_by(|a, b| {
        (a.technique.to_string(), a.seed, a.label.clone()).cmp(&(
            b.technique.to_string(),
            b.seed,
            b.label.clone(),
        ))
    });
    patches
}

#[derive(Debug, Clone)]
pub struct PatchCorrectness {
    pub bug: String,
    pub technique: Technique,
    pub seed: u64,
    pub label: String,
    pub generation: u32,
    pub blackbox_failed: usize,
    pub correct: bool,
}

/// Runs every analysis patch against the held-out black-box suite. A patch
/// is correct iff it passes every black-box test; white-box tests play no
/// part here.
pub fn evaluate_correctness(
    bundle: &BugBundle,
    patches: &[AnalysisPatch],
    fuel: u64,
) -> Vec<PatchCorrectness> {
    patches
        .iter()
        .map(|patch| {
            let failed = bundle
                .blackbox
                .iter()
                .filter(|t| !run_test(&patch.program, t, fuel))
                .count();
            PatchCorrectness {
                bug: patch.bug.clone(),
                technique: patch.technique,
                seed: patch.seed,
                label: patch.label.clone(),
                generation: patch.generation,
                blackbox_failed: failed,
                correct: failed == 0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectnessRow {
    pub bug: String,
    pub technique: Technique,
    pub patches_total: usize,
    pub patches_correct: usize,
}

/// Per (bug, technique) counts in sorted order. Bugs with no patches for a
/// technique still get a 0/0 row when listed in `bugs`.
pub fn summarize_correctness(bugs: &[String], patches: &[PatchCorrectness]) -> Vec<CorrectnessRow> {
    let mut rows = Vec::new();
    for bug in bugs {
        for technique in [Technique::Genprog, Technique::Divgp] {
            let group: Vec<_> = patches
                .iter()
                .filter(|p| &p.bug == bug && p.technique == technique)
                .collect();
            rows.push(CorrectnessRow {
                bug: bug.clone(),
                technique,
                patches_total: group.len(),
                patches_correct: group.iter().filter(|p| p.correct).count(),
            });
        }
    }
    rows
}

/// Pools rows into the 2x2 table (genprog correct/incorrect, divgp
/// correct/incorrect) used for the Fisher test.
pub fn pooled_contingency(rows: &[CorrectnessRow]) -> (u64, u64, u64, u64) {
    let mut table = (0u64, 0u64, 0u64, 0u64);
    for row in rows {
        let correct = row.patches_correct as u64;
        let incorrect = (row.patches_total - row.patches_correct) as u64;
        match row.technique {
            Technique::Genprog => {
                table.0 += correct;
                table.1 += incorrect;
            }
            Technique::Divgp => {
                table.2 += correct;
                table.3 += incorrect;
            }
        }
    }
    table
}

#[derive(Debug, Clone, Copy)]
pub struct DiversityParams {
    pub testgen_budget: usize,
    pub min_support: usize,
    pub fuel: u64,
    /// Master seed that pair seeds derive from.
    pub master_seed: u64,
}

/// Per-patch diversity of one technique's patch set for one bug. Singleton
/// sets report 0; the values depend only on (bundle, patch set, params).
pub fn evaluate_diversity(
    bundle: &BugBundle,
    patches: &[AnalysisPatch],
    metric: DiversityMetric,
    params: &DiversityParams,
) -> Vec<(String, f64)> {
    match metric {
        DiversityMetric::Invariant => {
            let invariants = infer_invariants(
                &bundle.program,
                &bundle.whitebox,
                params.min_support,
                params.fuel,
            )
            .unwrap_or_default();
            let (positives, negatives) =
                classify_tests(&bundle.program, &bundle.whitebox, params.fuel).unwrap_or_default();
            let profiles: Vec<_> = patches
                .iter()
                .map(|p| profile(&p.program, &invariants, &positives, &negatives, params.fuel))
                .collect();
            patches
                .iter()
                .zip(&profiles)
                .map(|(patch, prof)| {
                    let value = invariant_diversity(prof, &profiles)
                        .expect("profiles of one bug share a length");
                    (patch.label.clone(), value as f64)
                })
                .collect()
        }
        DiversityMetric::Testgen => {
            let labeled: Vec<(String, Program)> = patches
                .iter()
                .map(|p| (p.label.clone(), p.program.clone()))
                .collect();
            let matrix = distance_matrix(
                &labeled,
                params.testgen_budget,
                params.master_seed,
                &bundle.id,
                params.fuel,
            );
            patches
                .iter()
                .enumerate()
                .map(|(i, patch)| (patch.label.clone(), matrix[i].iter().sum()))
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiversityRow {
    pub bug: String,
    pub technique: Technique,
    pub metric: DiversityMetric,
    pub patch_count: usize,
    /// Arithmetic mean; `None` for an empty patch set (rendered as an
    /// em-dash, not 0).
    pub mean: Option<f64>,
}

pub fn mean_diversity(values: &[(String, f64)]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64)
    }
}

fn fmt_float(v: f64) -> String {
    // Shortest round-trip form keeps the CSVs byte-stable.
    format!("{v}")
}

fn fmt_mean(mean: Option<f64>) -> String {
    match mean {
        None => "—".to_string(),
        Some(v) => fmt_float(v),
    }
}

pub fn render_correctness_csv(rows: &[CorrectnessRow]) -> String {
    let mut out = String::from("bug,technique,patches_total,patches_correct\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.bug, row.technique, row.patches_total, row.patches_correct
        ));
    }
    let mut totals: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for row in rows {
        let entry = totals.entry(row.technique.to_string()).or_default();
        entry.0 += row.patches_total;
        entry.1 += row.patches_correct;
    }
    for (technique, (total, correct)) in totals {
        out.push_str(&format!("TOTAL,{technique},{total},{correct}\n"));
    }
    out
}

pub fn render_correctness_patches_csv(patches: &[PatchCorrectness]) -> String {
    let mut out = String::from("bug,technique,seed,patch,generation,blackbox_failed,correct\n");
    for p in patches {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.bug, p.technique, p.seed, p.label, p.generation, p.blackbox_failed, p.correct
        ));
    }
    out
}

pub fn render_diversity_csv(rows: &[DiversityRow]) -> String {
    let mut out = String::from("bug,technique,metric,patches,mean_diversity\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.bug,
            row.technique,
            row.metric,
            row.patch_count,
            fmt_mean(row.mean)
        ));
    }
    out
}

pub fn render_diversity_patches_csv(
    values: &[(String, Technique, DiversityMetric, String, f64)],
) -> String {
    let mut out = String::from("bug,technique,metric,patch,diversity\n");
    for (bug, technique, metric, label, value) in values {
        out.push_str(&format!(
            "{bug},{technique},{metric},{label},{}\n",
            fmt_float(*value)
        ));
    }
    out
}

/// Human-readable summary: correctness counts per bug and technique, mean
/// diversity per bug x technique x metric, and Fisher p-values (pooled and
/// per bug).
pub fn render_summary_md(correctness: &[CorrectnessRow], diversity: &[DiversityRow]) -> String {
    let mut out = String::from("# Repair evaluation summary\n\n## Correct patches\n\n");
    out.push_str("| Bug | genprog | divgp |\n|---|---|---|\n");
    let bugs: Vec<String> = {
        let mut seen = Vec::new();
        for row in correctness {
            if !seen.contains(&row.bug) {
                seen.push(row.bug.clone());
            }
        }
        seen
    };
    let cell = |bug: &str, technique: Technique| -> String {
        correctness
            .iter()
            .find(|r| r.bug == bug && r.technique == technique)
            .map(|r| format!("{} / {}", r.patches_correct, r.patches_total))
            .unwrap_or_else(|| "—".into())
    };
    for bug in &bugs {
        out.push_str(&format!(
            "| {bug} | {} | {} |\n",
            cell(bug, Technique::Genprog),
            cell(bug, Technique::Divgp)
        ));
    }
    let (a, b, c, d) = pooled_contingency(correctness);
    out.push_str(&format!(
        "| Total | {} / {} | {} / {} |\n",
        a,
        a + b,
        c,
        c + d
    ));

    out.push_str("\n## Fisher's exact test (correct vs incorrect)\n\n");
    let pooled = fisher_exact_two_sided(a, b, c, d);
    out.push_str(&format!(
        "- pooled table ({a},{b},{c},{d}): p = {}{}{}\n",
        fmt_float(pooled.p),
        if pooled.degenerate {
            " (degenerate table)"
        } else {
            ""
        },
        if pooled.p > 0.05 {
            " — not significant at 0.05"
        } else {
            " — significant at 0.05"
        },
    ));
    for bug in &bugs {
        let rows: Vec<&CorrectnessRow> = correctness.iter().filter(|r| &r.bug == bug).collect();
        let table = pooled_contingency(&rows.iter().map(|r| (*r).clone()).collect::<Vec<_>>());
        let result = fisher_exact_two_sided(table.0, table.1, table.2, table.3);
        out.push_str(&format!(
            "- {bug} ({},{},{},{}): p = {}{}\n",
            table.0,
            table.1,
            table.2,
            table.3,
            fmt_float(result.p),
            if result.degenerate {
                " (degenerate table)"
            } else {
                ""
            },
        ));
    }

    out.push_str("\n## Mean semantic diversity\n\n");
    out.push_str("| Bug | Metric | genprog | divgp |\n|---|---|---|---|\n");
    let div_cell = |bug: &str, metric: DiversityMetric, technique: Technique| -> String {
        diversity
            .iter()
            .find(|r| r.bug == bug && r.metric == metric && r.technique == technique)
            .map(|r| fmt_mean(r.mean))
            .unwrap_or_else(|| "—".into())
    };
    let mut div_bugs: Vec<String> = Vec::new();
    for row in diversity {
        if !div_bugs.contains(&row.bug) {
            div_bugs.push(row.bug.clone());
        }
    }
    for bug in &div_bugs {
        for metric in [DiversityMetric::Invariant, DiversityMetric::Testgen] {
            out.push_str(&format!(
                "| {bug} | {metric} | {} | {} |\n",
                div_cell(bug, metric, Technique::Genprog),
                div_cell(bug, metric, Technique::Divgp)
            ));
        }
    }
    out
}
