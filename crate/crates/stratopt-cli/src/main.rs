//! Command-line frontend for the strategy-learning pipeline.
//!
//! Subcommands mirror the offline/online pipeline: `explore` samples
//! parameters and builds the strategy catalog, `train` fits a classifier,
//! `evaluate` measures holdout quality, `render` prints a tree, `bench`
//! produces the benchmark table, and `solve` answers a single online query.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on pipeline failures.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stratopt::bench::{
    dataset_from_exploration, desk_table, generate, render_table, render_table_csv, BenchmarkSpec,
    Family, LearnerKind,
};
use stratopt::evaluate::{evaluate, EvaluationConfig, ReportContext};
use stratopt::explorer::{explore, ExplorationConfig, ExploreMode};
use stratopt::learners::{
    render_tree, render_tree_dot, train_nn, train_oct, NnGrid, OctGrid, PredictorModel, SplitMode,
};
use stratopt::persist::{
    catalog_from_records, catalog_records, load_artifact, save_artifact,
    CatalogFile, DatasetFile, ModelFile, ProblemFile, ReportFile, RunManifest,
};
use stratopt::problem::{ParameterSpace, ParametricProblem};
use stratopt::solver::{solve_continuous, solve_mio, MioOptions};
use stratopt::strategy::StrategyCatalog;

#[derive(Parser)]
#[command(
    name = "stratopt",
    version,
    about = "Learn optimal-solution strategies for parametric optimization problems"
)]
struct Cli {
    /// Worker thread cap (default: STRATOPT_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample parameters, solve them, and build the strategy catalog.
    Explore(ExploreArgs),
    /// Train a classifier on an exploration dataset.
    Train(TrainArgs),
    /// Evaluate a trained model on fresh holdout samples.
    Evaluate(EvaluateArgs),
    /// Print a trained tree as text or DOT.
    Render(RenderArgs),
    /// Run the full pipeline over benchmark families and emit a table.
    Bench(BenchArgs),
    /// One-shot online query: θ in, recovered solution out.
    Solve(SolveArgs),
}

#[derive(Args)]
struct ProblemSource {
    /// Built-in family: inventory | knapsack | knapsack-gen | supplier |
    /// transportation | portfolio | facility | hybrid.
    #[arg(long, conflicts_with = "problem")]
    family: Option<String>,
    /// Problem description file (JSON) instead of a built-in family.
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Family size: first dimension (warehouses, assets, facilities, items).
    #[arg(long)]
    n: Option<usize>,
    /// Family size: second dimension (stores, factors, locations).
    #[arg(long)]
    m: Option<usize>,
    /// Family size: time horizon (inventory, hybrid).
    #[arg(long, short = 't')]
    horizon: Option<usize>,
    /// Seed for the family's fixed data draws.
    #[arg(long, default_value_t = 0)]
    family_seed: u64,
}

impl ProblemSource {
    fn load(&self) -> Result<(ParametricProblem, ParameterSpace, String)> {
        if let Some(path) = &self.problem {
            let file: stratopt::persist::Artifact<ProblemFile> = match load_artifact(path) {
                Ok(f) => f,
                Err(_) => {
                    // Bare problem files (no manifest wrapper) are accepted too.
                    let bytes = std::fs::read(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let payload: ProblemFile = serde_json::from_slice(&bytes)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    stratopt::persist::Artifact {
                        manifest: RunManifest::new("external", serde_json::Value::Null, vec![]),
                        payload,
                    }
                }
            };
            let name = file.payload.name.clone();
            let (problem, space) = file.payload.into_parts()?;
            Ok((problem, space, name))
        } else if let Some(name) = &self.family {
            let family = Family::parse(name)
                .ok_or_else(|| anyhow!("unknown family '{name}'"))?;
            let mut spec = BenchmarkSpec::new(family, self.family_seed);
            spec.n = self.n;
            spec.m = self.m;
            spec.horizon = self.horizon;
            let label = spec.label();
            let (problem, space) = generate(&spec)?;
            Ok((problem, space, label))
        } else {
            bail!("either --family or --problem is required");
        }
    }
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    source: ProblemSource,
    /// Target unseen-strategy probability.
    #[arg(long, default_value_t = 0.005)]
    eps: f64,
    /// Confidence parameter of the missing-mass bound.
    #[arg(long, default_value_t = 0.05)]
    beta: f64,
    /// Samples solved per iteration.
    #[arg(long, default_value_t = 5000)]
    batch: usize,
    /// Termination rule: estimate | full-bound.
    #[arg(long, default_value = "estimate")]
    mode: String,
    /// Safety cap on the total sample count.
    #[arg(long, default_value_t = 100_000)]
    max_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset output path.
    #[arg(long)]
    out: PathBuf,
    /// Catalog output path (default: <out>.catalog.json).
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Print per-batch progress.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset produced by `explore`.
    #[arg(long)]
    dataset: PathBuf,
    /// Learner: oct | oct-h | nn.
    #[arg(long)]
    learner: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tree depths searched.
    #[arg(long, value_delimiter = ',', default_values_t = vec![5, 10, 15])]
    depths: Vec<usize>,
    /// Minimum leaf bucket sizes searched.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10])]
    min_buckets: Vec<usize>,
    /// Split-complexity weight of the tree loss.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Local-search restarts per grid point.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// SGD learning rates searched.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.001, 0.01, 0.1])]
    learning_rates: Vec<f64>,
    /// SGD batch sizes searched.
    #[arg(long, value_delimiter = ',', default_values_t = vec![32, 128])]
    batch_sizes: Vec<usize>,
    /// SGD epoch counts searched.
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100])]
    epochs: Vec<usize>,
    /// Hidden layer widths (default: max(32, 2M) twice).
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Holdout sample count.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
    /// Candidate strategies ranked per query.
    #[arg(long, short = 'k', default_value_t = 3)]
    top_k: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps_inf: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps_sub: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    model: PathBuf,
    /// Emit GraphViz DOT instead of indented text.
    #[arg(long)]
    dot: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark entries like `transportation:n=5,m=5` or `hybrid:t=10`
    /// (repeatable). Defaults to the desk-scale benchmark set.
    #[arg(long = "entry")]
    entries: Vec<String>,
    /// Learners to run per entry.
    #[arg(long, value_delimiter = ',', default_values_t = vec!["oct".to_string(), "oct-h".to_string(), "nn".to_string()])]
    learners: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Table output path (a .csv twin is written alongside).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated parameter vector.
    #[arg(long)]
    theta: String,
    /// Candidate strategies ranked for the query.
    #[arg(long, short = 'k', default_value_t = 3)]
    top_k: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps_inf: f64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; --help/--version exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli
        .threads
        .or_else(|| std::env::var("STRATOPT_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Explore(args) => cmd_explore(args),
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Render(args) => cmd_render(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Solve(args) => cmd_solve(args),
    }
}

fn cmd_explore(args: ExploreArgs) -> Result<()> {
    let mode = match args.mode.as_str() {
        "estimate" => ExploreMode::EstimateOnly,
        "full-bound" => ExploreMode::FullBound,
        other => bail!("unknown mode '{other}' (expected estimate | full-bound)"),
    };
    let (problem, space, problem_id) = args.source.load()?;
    let cfg = ExplorationConfig {
        epsilon: args.eps,
        beta: args.beta,
        batch_size: args.batch,
        mode,
        max_samples: args.max_samples,
        seed: args.seed,
        verbose: args.verbose,
    };
    let t0 = Instant::now();
    let result = explore(&problem, &space, &cfg)?;
    eprintln!(
        "explored N={} strategies M={} G={:.6} bound={:.6} ({:?}) in {:.1}s",
        result.n,
        result.catalog.len(),
        result.good_turing,
        result.bound_value,
        result.terminated_by,
        t0.elapsed().as_secs_f64()
    );

    let records = catalog_records(&result.catalog);
    let dataset = DatasetFile {
        problem_id: problem_id.clone(),
        problem,
        space,
        exploration: cfg.clone(),
        n: result.n,
        n_strategies: result.catalog.len() as u32,
        good_turing: result.good_turing,
        bound_value: result.bound_value,
        terminated_by: result.terminated_by,
        samples: result.samples,
        catalog: records.clone(),
    };
    let manifest = RunManifest::new("explore", serde_json::to_value(&cfg)?, vec![]);
    save_artifact(&args.out, manifest, &dataset)?;

    let catalog_path = args
        .catalog
        .unwrap_or_else(|| PathBuf::from(format!("{}.catalog.json", args.out.display())));
    let catalog_file = CatalogFile { problem_id, records };
    let manifest = RunManifest::new("explore:catalog", serde_json::to_value(&cfg)?, vec![]);
    save_artifact(&catalog_path, manifest, &catalog_file)?;
    println!("dataset: {}", args.out.display());
    println!("catalog: {}", catalog_path.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let dataset_art: stratopt::persist::Artifact<DatasetFile> = load_artifact(&args.dataset)?;
    let data_file = dataset_art.payload;
    let exploration = stratopt::explorer::ExplorationResult {
        samples: data_file.samples.clone(),
        catalog: catalog_from_records(&data_file.catalog),
        n: data_file.n,
        good_turing: data_file.good_turing,
        bound_value: data_file.bound_value,
        terminated_by: data_file.terminated_by,
    };
    let dataset = dataset_from_exploration(&exploration, args.seed);

    let t0 = Instant::now();
    let predictor = match args.learner.as_str() {
        "oct" | "oct-h" => {
            let grid = OctGrid { depths: args.depths.clone(), min_buckets: args.min_buckets.clone() };
            let mode = if args.learner == "oct" { SplitMode::Parallel } else { SplitMode::Hyperplane };
            train_oct(&dataset, &grid, mode, args.restarts, args.alpha, args.seed)?
        }
        "nn" => {
            let grid = NnGrid {
                learning_rates: args.learning_rates.clone(),
                batch_sizes: args.batch_sizes.clone(),
                epochs: args.epochs.clone(),
                hidden: args.hidden.clone(),
            };
            train_nn(&dataset, &grid, args.seed)?
        }
        other => bail!("unknown learner '{other}' (expected oct | oct-h | nn)"),
    };
    eprintln!(
        "trained {} (validation accuracy {:.2}%) in {:.1}s",
        args.learner,
        100.0 * predictor.val_accuracy,
        t0.elapsed().as_secs_f64()
    );

    let model = ModelFile {
        problem_id: data_file.problem_id,
        problem: data_file.problem,
        space: data_file.space,
        catalog: data_file.catalog,
        predictor,
        n_train: data_file.n,
        good_turing: data_file.good_turing,
    };
    let config = serde_json::json!({
        "learner": args.learner,
        "seed": args.seed,
        "depths": args.depths,
        "min_buckets": args.min_buckets,
        "alpha": args.alpha,
        "restarts": args.restarts,
        "learning_rates": args.learning_rates,
        "batch_sizes": args.batch_sizes,
        "epochs": args.epochs,
    });
    let manifest =
        RunManifest::new("train", config, vec![args.dataset.display().to_string()]);
    save_artifact(&args.out, manifest, &model)?;
    println!("model: {}", args.out.display());
    Ok(())
}

fn load_model(path: &PathBuf) -> Result<(ModelFile, StrategyCatalog)> {
    let art: stratopt::persist::Artifact<ModelFile> = load_artifact(path)?;
    let catalog = catalog_from_records(&art.payload.catalog);
    Ok((art.payload, catalog))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let (model, catalog) = load_model(&args.model)?;
    let cfg = EvaluationConfig {
        eps_inf: args.eps_inf,
        eps_sub: args.eps_sub,
        top_k: args.top_k,
        n_test: args.samples,
        seed: args.seed,
    };
    let sample_inst = model
        .problem
        .canonicalize(&stratopt::problem::sample_parameters(&model.space, args.seed, 1)?[0])?;
    let context = ReportContext {
        problem: model.problem_id.clone(),
        learner: model.predictor.kind().into(),
        n_var: sample_inst.n_var,
        n_con: sample_inst.n_con,
        n_train: model.n_train,
        good_turing: model.good_turing,
        n_strategies: catalog.len() as u32,
    };
    let t0 = Instant::now();
    let report = evaluate(&model.predictor, &model.problem, &model.space, &catalog, context, &cfg)?;
    let table = format!(
        "{}{}",
        stratopt::evaluate::table_header(),
        stratopt::evaluate::table_row(&report)
    );
    eprintln!(
        "evaluated {} samples in {:.1}s: accuracy {:.1}% p_bar {:.2e} d_bar {:.2e} t_ratio {:.2}",
        report.aggregates.n_test,
        t0.elapsed().as_secs_f64(),
        report.aggregates.accuracy_pct,
        report.aggregates.p_bar,
        report.aggregates.d_bar,
        report.aggregates.t_ratio
    );
    print!("{table}");
    let manifest = RunManifest::new(
        "evaluate",
        serde_json::to_value(&cfg)?,
        vec![args.model.display().to_string()],
    );
    save_artifact(&args.out, manifest, &ReportFile { report, table })?;
    println!("report: {}", args.out.display());
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let (model, _) = load_model(&args.model)?;
    let tree = match &model.predictor.model {
        PredictorModel::Tree(t) => t,
        PredictorModel::Network(_) => {
            bail!("model holds a network; rendering applies to trees only")
        }
    };
    let names = &model.problem.param_names;
    let text =
        if args.dot { render_tree_dot(tree, names)? } else { render_tree(tree, names)? };
    match args.out {
        Some(path) => {
            let manifest = RunManifest::new(
                "render",
                serde_json::json!({"dot": args.dot}),
                vec![args.model.display().to_string()],
            );
            save_artifact(&path, manifest, &text)?;
            println!("rendered: {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_entry(entry: &str, default_seed: u64) -> Result<BenchmarkSpec> {
    let (name, params) = match entry.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (entry, None),
    };
    let family = Family::parse(name).ok_or_else(|| anyhow!("unknown family '{name}'"))?;
    let mut spec = BenchmarkSpec::new(family, default_seed);
    if let Some(params) = params {
        for kv in params.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("bad entry parameter '{kv}' (expected key=value)"))?;
            match k {
                "n" => spec.n = Some(v.parse()?),
                "m" => spec.m = Some(v.parse()?),
                "t" | "horizon" => spec.horizon = Some(v.parse()?),
                "seed" => spec.seed = v.parse()?,
                other => bail!("unknown entry parameter '{other}'"),
            }
        }
    }
    Ok(spec)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let specs: Vec<BenchmarkSpec> = if args.entries.is_empty() {
        // Desk-scale default set.
        vec![
            parse_entry("transportation:n=5,m=5", args.seed)?,
            parse_entry("portfolio:n=50,m=10", args.seed)?,
            parse_entry("facility:n=10,m=10", args.seed)?,
            parse_entry("hybrid:t=10", args.seed)?,
        ]
    } else {
        args.entries
            .iter()
            .map(|e| parse_entry(e, args.seed))
            .collect::<Result<Vec<_>>>()?
    };
    let learners: Vec<LearnerKind> = args
        .learners
        .iter()
        .map(|l| LearnerKind::parse(l).ok_or_else(|| anyhow!("unknown learner '{l}'")))
        .collect::<Result<Vec<_>>>()?;

    let t0 = Instant::now();
    let rows = desk_table(&specs, &learners, args.seed);
    eprintln!("benchmarks finished in {:.1}s", t0.elapsed().as_secs_f64());
    let table = render_table(&rows);
    print!("{table}");
    let manifest = RunManifest::new(
        "bench",
        serde_json::json!({"entries": args.entries, "learners": args.learners, "seed": args.seed}),
        vec![],
    );
    save_artifact(&args.out, manifest, &rows)?;
    let csv_path = args.out.with_extension("csv");
    std::fs::write(&csv_path, render_table_csv(&rows))
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let txt_path = args.out.with_extension("txt");
    std::fs::write(&txt_path, &table)
        .with_context(|| format!("writing {}", txt_path.display()))?;
    println!("table: {} (+ .txt, .csv)", args.out.display());
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let (model, catalog) = load_model(&args.model)?;
    let theta: Vec<f64> = args
        .theta
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("bad theta entry '{v}': {e}")))
        .collect::<Result<Vec<_>>>()?;
    let inst = model.problem.canonicalize(&theta)?;

    // Online path: predict, reduced-solve, select.
    let t0 = Instant::now();
    let k = args.top_k.min(catalog.len().max(1));
    let labels = model.predictor.predict_topk(&theta, k)?;
    let candidates: Vec<(u32, &stratopt::strategy::Strategy)> =
        labels.iter().filter_map(|&l| catalog.get(l).map(|s| (l, s))).collect();
    let selection = stratopt::evaluate::select_best(&inst, &candidates, args.eps_inf)?;
    let method_time = t0.elapsed().as_secs_f64();

    // Reference solve for the suboptimality report.
    let t1 = Instant::now();
    let truth = if inst.integers.is_empty() {
        solve_continuous(&inst)
    } else {
        solve_mio(&inst, &MioOptions::default())
    };
    let full_time = t1.elapsed().as_secs_f64();
    let (d, feasible) = if truth.status.is_optimal() && selection.p <= args.eps_inf {
        let (d, _) =
            stratopt::evaluate::suboptimality(selection.result.objective, truth.objective);
        (Some(d), true)
    } else {
        (None, selection.p <= args.eps_inf)
    };

    let output = serde_json::json!({
        "theta": theta,
        "chosen_label": selection.chosen_label,
        "x": selection.result.x.as_slice(),
        "objective": selection.result.objective,
        "infeasibility": selection.p,
        "feasible": feasible,
        "suboptimality": d,
        "reference_objective": if truth.status.is_optimal() { Some(truth.objective) } else { None },
        "method_time": method_time,
        "full_solve_time": full_time,
        "candidates": selection.diagnostics,
    });
    let text = serde_json::to_string_pretty(&output)?;
    match args.out {
        Some(path) => {
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
            println!("solution: {}", path.display());
        }
        None => println!("{text}"),
    }
    if !feasible {
        eprintln!(
            "warning: recovered solution violates constraints (p = {:.3e} > {:.1e})",
            selection.p, args.eps_inf
        );
    }
    Ok(())
}
