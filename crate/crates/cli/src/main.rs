//! Command-line front end: `cluster` runs the pipeline with explicit
//! rules, `search` sweeps candidate rule tuples in parallel and persists
//! the best as a saved state, `analyze` reports rule properties.

mod analyze;
mod output;
mod run;
mod search;
mod state;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rca_cluster::rules;

#[derive(Parser)]
#[command(
    name = "rca-cluster",
    version,
    about = "Clustering with reversible cellular automata"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a dataset with an explicit rule tuple.
    Cluster(ClusterArgs),
    /// Search candidate rule tuples and keep the best as a saved state.
    Search(SearchArgs),
    /// Report rule properties (propagation, cycles, criteria) at a cell count.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Optional schema sidecar (`name,kind` per line).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Encoding-plan override (same format as --plan-out writes).
    #[arg(long)]
    plan: Option<PathBuf>,
    /// z-score the metric feature matrix.
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Label CSV destination.
    #[arg(long, default_value = "labels.csv")]
    labels_out: PathBuf,
    /// Score report destination.
    #[arg(long, default_value = "report.txt")]
    report_out: PathBuf,
    /// Per-stage trace destination.
    #[arg(long, default_value = "trace.txt")]
    trace_out: PathBuf,
    /// Also write the fitted (or overriding) encoding plan here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated rule decimals: stage-1 rule, stage-2 rule,
    /// recursion rules.
    #[arg(long, value_delimiter = ',', required = true)]
    rules: Vec<u32>,
    /// Vertical split size n1 (cells per CA).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=24))]
    split_size: u64,
    /// Desired cluster count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    clusters: u64,
    /// Largest merged-object length clustered directly.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=24))]
    max_cell_length: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=24))]
    split_size: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    clusters: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=24))]
    max_cell_length: u64,
    /// Rules per tuple (stage-1 rule, stage-2 rule, recursion rules).
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=4))]
    tuple_length: u64,
    /// Cap on evaluated tuples in enumeration order; 0 means no cap.
    #[arg(long, default_value_t = 4096)]
    budget: u64,
    /// Worker threads; 0 picks the machine default.
    #[arg(long, default_value_t = 0)]
    threads: u64,
    /// Leaderboard length.
    #[arg(long, default_value_t = 10)]
    top: u64,
    /// Custom candidate pool (comma-separated rule decimals) instead of
    /// the vendored catalog.
    #[arg(long, value_delimiter = ',')]
    rule_pool: Option<Vec<u32>>,
    /// Saved-state directory (env RCA_CLUSTER_STATE_DIR, default rca_state).
    #[arg(long)]
    state_dir: Option<PathBuf>,
    #[arg(long, default_value = "leaderboard.txt")]
    leaderboard_out: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Cell count to analyze at.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=24))]
    n: u64,
    /// Rule decimal; repeatable.
    #[arg(long, conflicts_with = "catalog")]
    rule: Vec<u32>,
    /// Analyze every vendored candidate rule for this n.
    #[arg(long)]
    catalog: bool,
    /// Criterion-2 fraction override.
    #[arg(long)]
    l1: Option<f64>,
    /// Criterion-3 cycle cap override.
    #[arg(long)]
    l2: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Search(args) => cmd_search(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

#[allow(clippy::too_many_arguments)]
fn write_run_outputs(
    loaded: &run::LoadedRun,
    args: &OutputArgs,
    input_name: &str,
    rules: &[u32],
    split_size: usize,
    clusters: usize,
    result: &rca_cluster::ClusteringResult,
    scores: &output::Scores,
) -> Result<()> {
    output::atomic_write(&args.labels_out, &output::labels_csv(&result.labels))?;
    let report = output::report_text(&output::ReportInput {
        input: input_name,
        rows: loaded.dataset.row_count(),
        attributes: loaded.dataset.attribute_count(),
        encoded_bits: loaded.encoded.width,
        rules,
        split_size,
        clusters,
        scores,
        result,
    });
    output::atomic_write(&args.report_out, &report)?;
    output::atomic_write(&args.trace_out, &result.trace.render())?;
    if let Some(plan_out) = &args.plan_out {
        output::atomic_write(plan_out, &loaded.plan_text)?;
    }
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let loaded = run::load_inputs(
        &args.input.input,
        args.input.schema.as_deref(),
        args.input.plan.as_deref(),
        args.input.standardize,
    )?;
    let (split_size, clusters) = (args.split_size as usize, args.clusters as usize);
    let result = run::run_tuple(
        &loaded.encoded,
        &args.rules,
        split_size,
        clusters,
        args.max_cell_length as usize,
    )?;
    let scores = output::score_labels(&loaded.matrix, &result.labels);
    write_run_outputs(
        &loaded,
        &args.output,
        &args.input.input.display().to_string(),
        &args.rules,
        split_size,
        clusters,
        &result,
        &scores,
    )?;
    println!(
        "clustered {} rows into {} clusters (silhouette {}); labels in {}",
        loaded.dataset.row_count(),
        clusters,
        scores.silhouette,
        args.output.labels_out.display()
    );
    Ok(())
}

fn cmd_search(args: SearchArgs) -> Result<()> {
    let loaded = run::load_inputs(
        &args.input.input,
        args.input.schema.as_deref(),
        args.input.plan.as_deref(),
        args.input.standardize,
    )?;
    let (split_size, clusters) = (args.split_size as usize, args.clusters as usize);
    let max_cell_length = args.max_cell_length as usize;
    let fingerprint =
        state::fingerprint(&loaded.input_bytes, &loaded.plan_text, split_size, clusters);
    let state_dir = state::state_dir(args.state_dir.as_deref());

    if let Some(saved) = state::load(&state_dir, &fingerprint)? {
        let result = run::run_tuple(
            &loaded.encoded,
            &saved.rules,
            split_size,
            clusters,
            max_cell_length,
        )
        .context("replaying saved state")?;
        let scores = output::score_labels(&loaded.matrix, &result.labels);
        output::atomic_write(
            &args.leaderboard_out,
            &search::replay_leaderboard_text(&fingerprint, &saved.rules, &scores),
        )?;
        write_run_outputs(
            &loaded,
            &args.output,
            &args.input.input.display().to_string(),
            &saved.rules,
            split_size,
            clusters,
            &result,
            &scores,
        )?;
        println!(
            "replayed saved state for fingerprint {fingerprint} (rules {}); silhouette {}",
            saved
                .rules
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(","),
            scores.silhouette
        );
        return Ok(());
    }

    let pool: Vec<u32> = match &args.rule_pool {
        Some(rules) if !rules.is_empty() => rules.clone(),
        Some(_) => bail!("search stage: --rule-pool given but empty"),
        None => rules::candidate_rules(split_size)
            .context("search stage: no candidate pool for this split size")?
            .iter()
            .map(|r| r.decimal())
            .collect(),
    };
    let tuples = search::enumerate_tuples(&pool, args.tuple_length as usize, args.budget as usize);
    if tuples.is_empty() {
        bail!("search stage: empty candidate set");
    }
    let evaluations = search::evaluate_tuples(
        &loaded.encoded,
        &loaded.matrix,
        &tuples,
        split_size,
        clusters,
        max_cell_length,
        args.threads as usize,
    )?;
    let ranked = search::rank(&evaluations);
    let Some(&best_index) = ranked.first() else {
        bail!("search stage: no tuple produced a scorable clustering");
    };

    output::atomic_write(
        &args.leaderboard_out,
        &search::leaderboard_text(&fingerprint, &evaluations, &ranked, args.top as usize),
    )?;

    let best = &evaluations[best_index];
    let best_scores = best.outcome.as_ref().unwrap();
    state::store(
        &state_dir,
        &state::SavedState::new(
            fingerprint.clone(),
            best.rules.clone(),
            best_scores.silhouette.clone(),
            best_scores.davies_bouldin.clone(),
            best_scores.calinski_harabasz.clone(),
        ),
    )?;

    let result = run::run_tuple(
        &loaded.encoded,
        &best.rules,
        split_size,
        clusters,
        max_cell_length,
    )?;
    let scores = output::score_labels(&loaded.matrix, &result.labels);
    write_run_outputs(
        &loaded,
        &args.output,
        &args.input.input.display().to_string(),
        &best.rules,
        split_size,
        clusters,
        &result,
        &scores,
    )?;
    println!(
        "searched {} tuples; best rules {} silhouette {}; state saved under {}",
        evaluations.len(),
        best.rules
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(","),
        scores.silhouette,
        state_dir.display()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let n = args.n as usize;
    let rules: Vec<u32> = if args.catalog {
        rules::candidate_rules(n)
            .context("analyze stage")?
            .iter()
            .map(|r| r.decimal())
            .collect()
    } else if args.rule.is_empty() {
        bail!("analyze stage: pass --rule at least once or --catalog");
    } else {
        args.rule.clone()
    };
    let text = analyze::analysis_text(&analyze::AnalyzeConfig {
        n,
        rules,
        l1: args.l1,
        l2: args.l2,
    })?;
    match &args.out {
        Some(path) => output::atomic_write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}
