//! `divrepair` — search-based repair of mini-language bugs and the analysis
//! pipeline around it.
//!
//! Exit codes for `repair`: 0 when at least one post-initialization patch
//! was found, 2 when the search finished without one, 1 on any error. All
//! other commands exit 0 on success and 1 on error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use divrepair_core::bundle::{load_bundle, load_corpus, validate_bundle, BugBundle};
use divrepair_core::config::RunConfig;
use divrepair_core::evaluation::{
    collect_analysis_patches, evaluate_correctness, evaluate_diversity, fisher_exact_two_sided,
    mean_diversity, pooled_contingency, render_correctness_csv, render_correctness_patches_csv,
    render_diversity_csv, render_diversity_patches_csv, render_summary_md, summarize_correctness,
    AnalysisPatch, CorrectnessRow, DiversityMetric, DiversityParams, DiversityRow,
    PatchCorrectness,
};
use divrepair_core::invariants::infer_invariants;
use divrepair_core::search::{repair, RunRecord, Technique};
use divrepair_core::testgen::distance_matrix_detailed;

#[derive(Parser)]
#[command(
    name = "divrepair",
    version,
    about = "Search-based program repair with semantic-diversity analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the repair search on one bug bundle
    Repair(RepairArgs),
    /// Score patches against held-out black-box suites
    Evaluate(AnalyzeArgs),
    /// Compute patch-set semantic diversity for one metric
    Diversity(DiversityArgs),
    /// Fisher's exact test on correct/incorrect counts
    Stats(StatsArgs),
    /// Render every report (correctness, both diversity metrics, summary)
    Report(ReportArgs),
    /// Check corpus bundles against their invariants
    ValidateCorpus(CorpusArgs),
    /// Print or round-trip-check run configuration
    Config(ConfigArgs),
}

#[derive(Args)]
struct RepairArgs {
    /// Bug bundle directory (e.g. corpus/median-b1)
    #[arg(long)]
    bug: Option<PathBuf>,
    /// genprog or divgp
    #[arg(long)]
    technique: Option<String>,
    /// Single seed to run
    #[arg(long)]
    seed: Option<u64>,
    /// Inclusive seed range, e.g. 0..9
    #[arg(long)]
    seeds: Option<String>,
    /// Run configuration file (TOML); flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root (default: $DIVREPAIR_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for candidate evaluation (never changes results)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these bug ids (repeatable); default: all with run records
    #[arg(long)]
    bug: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DiversityArgs {
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    bug: Vec<String>,
    /// invariant or testgen
    #[arg(long, default_value = "invariant")]
    metric: String,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for per-pair seed derivation
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StatsArgs {
    /// 2x2 table as a,b,c,d = genprog correct, genprog incorrect,
    /// divgp correct, divgp incorrect
    #[arg(long)]
    counts: Option<String>,
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    bug: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long, default_value = "corpus")]
    corpus: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Print the default configuration as TOML
    #[arg(long)]
    defaults: bool,
    /// Load a configuration file, check it round-trips, and print it
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Repair(args) => cmd_repair(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Diversity(args) => cmd_diversity(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Report(args) => cmd_report(args),
        Command::ValidateCorpus(args) => cmd_validate_corpus(args),
        Command::Config(args) => cmd_config(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(path) => {
            RunConfig::load(path).with_context(|| format!("loading config {}", path.display()))
        }
    }
}

fn out_root(flag: &Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    if let Some(out) = flag {
        return out.clone();
    }
    if let Ok(env_out) = std::env::var("DIVREPAIR_OUT") {
        if !env_out.is_empty() {
            return PathBuf::from(env_out);
        }
    }
    if let Some(out) = &cfg.out {
        return PathBuf::from(out);
    }
    PathBuf::from("out")
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| anyhow!("--seeds expects an inclusive range like 0..9"))?;
    let a: u64 = a.trim().parse().context("bad range start")?;
    let b: u64 = b.trim().parse().context("bad range end")?;
    if b < a {
        bail!("--seeds range end is below its start");
    }
    Ok((a..=b).collect())
}

fn cmd_repair(args: RepairArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&args.config)?;
    let bug_dir = args
        .bug
        .clone()
        .or_else(|| cfg.bug.clone().map(PathBuf::from))
        .ok_or_else(|| anyhow!("--bug is required (or set `bug` in the config)"))?;
    let technique: Technique = args
        .technique
        .clone()
        .or_else(|| cfg.technique.clone())
        .ok_or_else(|| anyhow!("--technique is required (genprog or divgp)"))?
        .parse()
        .map_err(|e: String| anyhow!(e))?;
    let seeds: Vec<u64> = match (&args.seed, &args.seeds) {
        (Some(_), Some(_)) => bail!("--seed and --seeds are mutually exclusive"),
        (Some(seed), None) => vec![*seed],
        (None, Some(range)) => parse_seed_range(range)?,
        (None, None) => vec![cfg.seed],
    };
    let out = out_root(&args.out, &cfg);

    let bundle = load_bundle(&bug_dir)?;
    validate_bundle(&bundle, cfg.fuel)?;

    // Audit artifact: the inferred invariant list, one per line.
    let invariants =
        infer_invariants(&bundle.program, &bundle.whitebox, cfg.min_support, cfg.fuel)?;
    let invariants_text: String = invariants.iter().map(|inv| format!("{inv}\n")).collect();
    write_file(
        &out.join("runs").join(&bundle.id).join("invariants.txt"),
        &invariants_text,
    )?;

    let mut any_post_init = false;
    for seed in seeds {
        cfg.seed = seed;
        let record = repair(
            &bundle.id,
            &bundle.program,
            &bundle.whitebox,
            &cfg.search_config(),
            technique,
            cfg.repair_params(args.jobs),
        )?;
        let dir = out
            .join("runs")
            .join(&bundle.id)
            .join(technique.to_string());
        write_file(&dir.join(format!("seed{seed}.json")), &record.to_json())?;
        write_file(
            &dir.join(format!("seed{seed}.gen0.json")),
            &record.gen0_json(),
        )?;
        let found = record.post_init_patches().count();
        any_post_init |= found > 0;
        println!(
            "{} {} seed {}: {} patches ({} post-init)",
            bundle.id,
            technique,
            seed,
            record.patches.len(),
            found
        );
    }
    Ok(ExitCode::from(if any_post_init { 0 } else { 2 }))
}

/// Loads the run records of one bug, every technique, sorted by
/// (technique, seed).
fn load_records(out: &Path, bug_id: &str) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for technique in ["divgp", "genprog"] {
        let dir = out.join("runs").join(bug_id).join(technique);
        if !dir.is_dir() {
            continue;
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| {
                let path = e.ok()?.path();
                let name = path.file_name()?.to_string_lossy().into_owned();
                (name.starts_with("seed")
                    && name.ends_with(".json")
                    && !name.ends_with(".gen0.json"))
                .then_some(path)
            })
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            records.push(
                RunRecord::from_json(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            );
        }
    }
    records.sort_by_key(|r| (r.technique.to_string(), r.seed));
    Ok(records)
}

/// The bugs to analyze: the explicit list, or every corpus bug that has run
/// records. Explicitly requested bugs must have records.
fn analysis_targets(
    corpus: &Path,
    out: &Path,
    requested: &[String],
    fuel: u64,
) -> Result<Vec<(BugBundle, Vec<RunRecord>)>> {
    let mut targets = Vec::new();
    if requested.is_empty() {
        for bundle in load_corpus(corpus, fuel)? {
            let records = load_records(out, &bundle.id)?;
            if !records.is_empty() {
                targets.push((bundle, records));
            }
        }
        if targets.is_empty() {
            bail!(
                "no run records under {}; run `divrepair repair` first",
                out.join("runs").display()
            );
        }
    } else {
        let mut missing = Vec::new();
        for bug in requested {
            let bundle = load_bundle(&corpus.join(bug))?;
            let records = load_records(out, bug)?;
            if records.is_empty() {
                missing.push(out.join("runs").join(bug).display().to_string());
                continue;
            }
            targets.push((bundle, records));
        }
        if !missing.is_empty() {
            bail!("missing run records:\n{}", missing.join("\n"));
        }
    }
    Ok(targets)
}

fn correctness_analysis(
    targets: &[(BugBundle, Vec<RunRecord>)],
    fuel: u64,
) -> (Vec<CorrectnessRow>, Vec<PatchCorrectness>) {
    let mut all_patches = Vec::new();
    let mut bugs = Vec::new();
    for (bundle, records) in targets {
        bugs.push(bundle.id.clone());
        let patches = collect_analysis_patches(bundle, records);
        all_patches.extend(evaluate_correctness(bundle, &patches, fuel));
    }
    let rows = summarize_correctness(&bugs, &all_patches);
    (rows, all_patches)
}

fn cmd_evaluate(args: AnalyzeArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let out = out_root(&args.out, &cfg);
    let targets = analysis_targets(&args.corpus, &out, &args.bug, cfg.fuel)?;
    let (rows, patches) = correctness_analysis(&targets, cfg.fuel);
    write_file(
        &out.join("reports/correctness.csv"),
        &render_correctness_csv(&rows),
    )?;
    write_file(
        &out.join("reports/correctness_patches.csv"),
        &render_correctness_patches_csv(&patches),
    )?;
    for row in &rows {
        println!(
            "{} {}: {} / {} correct",
            row.bug, row.technique, row.patches_correct, row.patches_total
        );
    }
    let (a, b, c, d) = pooled_contingency(&rows);
    println!("pooled: genprog {}/{} divgp {}/{}", a, a + b, c, c + d);
    Ok(ExitCode::SUCCESS)
}

/// Computes diversity rows for one metric, serializing merged suites under
/// `diversity/<bug>/<technique>/<pair>/` when the metric generates them.
/// One per-patch diversity value: (bug, technique, metric, label, value).
type DiversityValue = (String, Technique, DiversityMetric, String, f64);

fn diversity_analysis(
    targets: &[(BugBundle, Vec<RunRecord>)],
    metric: DiversityMetric,
    params: &DiversityParams,
    out: Option<&Path>,
) -> Result<(Vec<DiversityRow>, Vec<DiversityValue>)> {
    let mut rows = Vec::new();
    let mut values_out = Vec::new();
    for (bundle, records) in targets {
        let patches = collect_analysis_patches(bundle, records);
        for technique in [Technique::Genprog, Technique::Divgp] {
            let group: Vec<AnalysisPatch> = patches
                .iter()
                .filter(|p| p.technique == technique)
                .cloned()
                .collect();
            let values = match (metric, out) {
                (DiversityMetric::Testgen, Some(out)) => {
                    // Same computation as evaluate_diversity, plus suite
                    // serialization for replay.
                    let labeled: Vec<(String, divrepair_core::lang::Program)> = group
                        .iter()
                        .map(|p| (p.label.clone(), p.program.clone()))
                        .collect();
                    let mut pair_files: Vec<(PathBuf, String, String)> = Vec::new();
                    let matrix = distance_matrix_detailed(
                        &labeled,
                        params.testgen_budget,
                        params.master_seed,
                        &bundle.id,
                        params.fuel,
                        |i, j, pair| {
                            let dir_name = format!(
                                "{}--{}",
                                labeled[i].0.replace('/', "-"),
                                labeled[j].0.replace('/', "-")
                            );
                            let dir = out
                                .join("diversity")
                                .join(&bundle.id)
                                .join(technique.to_string())
                                .join(dir_name);
                            let mut suite = String::new();
                            for input in &pair.merged {
                                suite.push_str(input);
                                suite.push('\n');
                            }
                            let meta = format!(
                                "{{\n  \"bug\": \"{}\",\n  \"pair\": [\"{}\", \"{}\"],\n  \"seed\": {},\n  \"budget\": {},\n  \"distance\": {}\n}}\n",
                                bundle.id,
                                labeled[i].0,
                                labeled[j].0,
                                pair.seed,
                                params.testgen_budget,
                                pair.distance
                            );
                            pair_files.push((dir, suite, meta));
                        },
                    );
                    for (dir, suite, meta) in pair_files {
                        write_file(&dir.join("suite.txt"), &suite)?;
                        write_file(&dir.join("meta.json"), &meta)?;
                    }
                    group
                        .iter()
                        .enumerate()
                        .map(|(i, p)| (p.label.clone(), matrix[i].iter().sum()))
                        .collect()
                }
                _ => evaluate_diversity(bundle, &group, metric, params),
            };
            rows.push(DiversityRow {
                bug: bundle.id.clone(),
                technique,
                metric,
                patch_count: values.len(),
                mean: mean_diversity(&values),
            });
            for (label, value) in values {
                values_out.push((bundle.id.clone(), technique, metric, label, value));
            }
        }
    }
    Ok((rows, values_out))
}

fn cmd_diversity(args: DiversityArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let out = out_root(&args.out, &cfg);
    let metric: DiversityMetric = args.metric.parse().map_err(|e: String| anyhow!(e))?;
    let params = DiversityParams {
        testgen_budget: cfg.testgen_budget,
        min_support: cfg.min_support,
        fuel: cfg.fuel,
        master_seed: args.seed,
    };
    let targets = analysis_targets(&args.corpus, &out, &args.bug, cfg.fuel)?;
    let (rows, values) = diversity_analysis(&targets, metric, &params, Some(&out))?;
    write_file(
        &out.join("reports/diversity.csv"),
        &render_diversity_csv(&rows),
    )?;
    write_file(
        &out.join("reports/diversity_patches.csv"),
        &render_diversity_patches_csv(&values),
    )?;
    for row in &rows {
        let mean = row.mean.map_or("—".to_string(), |m| format!("{m}"));
        println!(
            "{} {} {}: {} patches, mean {}",
            row.bug, row.technique, row.metric, row.patch_count, mean
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn print_fisher(a: u64, b: u64, c: u64, d: u64) {
    let outcome = fisher_exact_two_sided(a, b, c, d);
    let flag = if outcome.degenerate {
        " (degenerate table, p = 1 by convention)"
    } else {
        ""
    };
    println!("table ({a},{b},{c},{d}): p = {}{flag}", outcome.p);
    if outcome.p > 0.05 {
        println!("not significant at 0.05");
    } else {
        println!("significant at 0.05");
    }
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode> {
    if let Some(counts) = &args.counts {
        let parts: Vec<u64> = counts
            .split(',')
            .map(|p| p.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .context("--counts expects four comma-separated integers a,b,c,d")?;
        if parts.len() != 4 {
            bail!("--counts expects exactly four integers a,b,c,d");
        }
        print_fisher(parts[0], parts[1], parts[2], parts[3]);
        return Ok(ExitCode::SUCCESS);
    }
    let cfg = load_config(&args.config)?;
    let out = out_root(&args.out, &cfg);
    let targets = analysis_targets(&args.corpus, &out, &[], cfg.fuel)?;
    let (rows, _) = correctness_analysis(&targets, cfg.fuel);
    let (a, b, c, d) = pooled_contingency(&rows);
    print_fisher(a, b, c, d);
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let out = out_root(&args.out, &cfg);
    let targets = analysis_targets(&args.corpus, &out, &args.bug, cfg.fuel)?;
    let (rows, patches) = correctness_analysis(&targets, cfg.fuel);
    let params = DiversityParams {
        testgen_budget: cfg.testgen_budget,
        min_support: cfg.min_support,
        fuel: cfg.fuel,
        master_seed: args.seed,
    };
    let mut diversity_rows = Vec::new();
    let mut diversity_values = Vec::new();
    for metric in [DiversityMetric::Invariant, DiversityMetric::Testgen] {
        let (rows, values) = diversity_analysis(&targets, metric, &params, Some(&out))?;
        diversity_rows.extend(rows);
        diversity_values.extend(values);
    }
    write_file(
        &out.join("reports/correctness.csv"),
        &render_correctness_csv(&rows),
    )?;
    write_file(
        &out.join("reports/correctness_patches.csv"),
        &render_correctness_patches_csv(&patches),
    )?;
    write_file(
        &out.join("reports/diversity.csv"),
        &render_diversity_csv(&diversity_rows),
    )?;
    write_file(
        &out.join("reports/diversity_patches.csv"),
        &render_diversity_patches_csv(&diversity_values),
    )?;
    write_file(
        &out.join("reports/summary.md"),
        &render_summary_md(&rows, &diversity_rows),
    )?;
    println!("reports written under {}", out.join("reports").display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate_corpus(args: CorpusArgs) -> Result<ExitCode> {
    let cfg = load_config(&args.config)?;
    let bundles = load_corpus(&args.corpus, cfg.fuel)?;
    for bundle in &bundles {
        println!(
            "{}: ok ({} white-box, {} black-box tests{})",
            bundle.id,
            bundle.whitebox.len(),
            bundle.blackbox.len(),
            if bundle.reference.is_some() {
                ", reference"
            } else {
                ""
            }
        );
    }
    println!("{} bundles valid", bundles.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_config(args: ConfigArgs) -> Result<ExitCode> {
    if args.defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    if let Some(path) = &args.config {
        let cfg = RunConfig::load(path)?;
        let round_tripped =
            RunConfig::from_toml(&cfg.to_toml()).map_err(|e| anyhow!("round-trip failed: {e}"))?;
        if round_tripped != cfg {
            bail!("config round-trip mismatch for {}", path.display());
        }
        print!("{}", cfg.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    bail!("use --defaults or --config <file>");
}
