use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use aorrtc::{
    AnytimeObserver, MetricWeights, Path, PlannerConfig, PlannerKind, Problem, SearchOutcome,
    SolutionEvent,
};
use aorrtc_bench::oracle::{grid_oracle, Connectivity};
use aorrtc_bench::report::SuiteReport;
use aorrtc_bench::suite::{parse_planners, run_suite, Clock, RunOptions, Suite};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aorrtc", version, about = "Anytime bidirectional RRT planning and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and print each improvement.
    Plan(PlanArgs),
    /// Run a benchmark suite and write CSV reports.
    Bench(BenchArgs),
    /// Grid shortest-path oracle for a 2-D point problem.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    /// aorrtc, aorrtc-nosimp, rrtc or arrtc.
    #[arg(long, default_value = "aorrtc")]
    planner: PlannerKind,
    /// Budget in seconds.
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Weight of configuration distance in nearest-vertex queries.
    #[arg(long, default_value_t = 1.0)]
    config_weight: f64,
    /// Weight of cost-to-come distance in nearest-vertex queries.
    #[arg(long, default_value_t = 1.0)]
    cost_weight: f64,
    /// Maximum edge length; defaults to a tenth of the space diagonal.
    #[arg(long)]
    edge_range: Option<f64>,
    /// Edge validation spacing; defaults to 1% of the space diagonal.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    no_balance: bool,
    #[arg(long)]
    no_simplify: bool,
    #[arg(long)]
    no_resample: bool,
    /// Share of the remaining budget one simplification may use.
    #[arg(long)]
    simplify_fraction: Option<f64>,
    /// Write the final path as CSV.
    #[arg(long)]
    path_out: Option<PathBuf>,
    /// Write both trees of the last search as CSV, with `-start`/`-goal` suffixes.
    #[arg(long)]
    trees_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite JSON file.
    #[arg(long)]
    suite: PathBuf,
    /// Comma-separated planner names; defaults to the suite's list.
    #[arg(long, value_delimiter = ',')]
    planners: Option<Vec<String>>,
    /// Seeds per (problem, planner) pair.
    #[arg(long)]
    seeds: Option<usize>,
    /// Per-trial budget: seconds, or iterations with `--clock iterations`.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    clock: Option<Clock>,
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
    /// Worker threads; 0 uses one per CPU.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Suboptimality factors for the near-optimality table.
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.05,0.1,0.2,0.5,1")]
    epsilons: Vec<f64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 1.0 / 512.0)]
    resolution: f64,
    /// any_angle or octile.
    #[arg(long, default_value = "any_angle")]
    connectivity: Connectivity,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Plan(args) => plan(args),
        Command::Bench(args) => bench(args),
        Command::Oracle(args) => oracle(args),
    }
}

struct PrintingObserver {
    last_search: Option<SearchOutcome>,
    keep_trees: bool,
}

impl AnytimeObserver for PrintingObserver {
    fn on_solution(&mut self, event: &SolutionEvent, _path: &Path) -> ControlFlow<()> {
        println!(
            "t={:.6}s iteration={} cost={} waypoints={} simplify={:.6}s",
            event.elapsed.as_secs_f64(),
            event.iteration,
            event.cost,
            event.waypoints,
            event.simplify_time.as_secs_f64()
        );
        ControlFlow::Continue(())
    }

    fn on_search(&mut self, outcome: &SearchOutcome) {
        if self.keep_trees {
            self.last_search = Some(outcome.clone());
        }
    }
}

fn plan(args: PlanArgs) -> Result<bool> {
    let problem = Problem::from_path(&args.problem)?;
    let mut cfg = PlannerConfig::for_problem(&problem)
        .with_seed(args.seed)
        .with_budget(Duration::try_from_secs_f64(args.budget).context("invalid --budget")?);
    cfg.max_iterations = args.max_iterations;
    cfg.weights = MetricWeights::new(args.config_weight, args.cost_weight)
        .context("configuration weight must be positive and cost weight nonnegative")?;
    if let Some(r) = args.edge_range {
        cfg.edge_range = r;
    }
    if let Some(r) = args.resolution {
        cfg.validation_resolution = r;
    }
    if let Some(f) = args.simplify_fraction {
        cfg.simplify_budget_fraction = f;
    }
    cfg.balance_trees = !args.no_balance;
    cfg.simplify = !args.no_simplify;
    cfg.resample_costs = !args.no_resample;
    cfg.check()?;

    println!(
        "problem={} planner={} straight_line={}",
        problem.name,
        args.planner,
        problem.straight_line_cost()
    );
    let mut observer = PrintingObserver {
        last_search: None,
        keep_trees: args.trees_out.is_some(),
    };
    let record = args.planner.run(&problem, &cfg, &mut observer);
    println!(
        "stop={:?} searches={} iterations={} vertices={} discarded={}",
        record.reason, record.searches, record.iterations, record.vertices_built, record.discarded
    );
    if let (Some(out), Some(path)) = (&args.path_out, &record.final_path) {
        let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
        let header: Vec<String> = (0..problem.dimension()).map(|k| format!("x{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for q in path.waypoints() {
            let row: Vec<String> = q.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
    }
    if let (Some(out), Some(search)) = (&args.trees_out, &observer.last_search) {
        for (suffix, tree) in [("start", &search.start_tree), ("goal", &search.goal_tree)] {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("tree");
            let path = out.with_file_name(format!("{stem}-{suffix}.csv"));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            tree.write_csv(BufWriter::new(file))?;
        }
    }
    Ok(record.solved())
}

fn bench(args: BenchArgs) -> Result<bool> {
    let suite = Suite::load(&args.suite)?;
    let planners = match &args.planners {
        Some(names) => Some(parse_planners(names)?),
        None => None,
    };
    if args.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        bail!("epsilons must be finite and nonnegative");
    }
    let opts = RunOptions {
        planners,
        seeds: args.seeds,
        budget: args.budget,
        clock: args.clock,
        jobs: args.jobs,
    };
    let run = run_suite(&suite, &opts)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let report = SuiteReport::new(run, &args.epsilons);
    report
        .write_csvs(&args.out_dir)
        .with_context(|| format!("writing reports to {}", args.out_dir.display()))?;
    let crashed = report
        .run
        .trials
        .iter()
        .filter(|t| t.status == aorrtc_bench::suite::TrialStatus::Crashed)
        .count();
    println!(
        "suite={} trials={} crashed={} out={}",
        report.run.suite,
        report.run.trials.len(),
        crashed,
        args.out_dir.display()
    );
    for c in &report.checks {
        let verdict = match c.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        println!(
            "{verdict} {} {} observed={} threshold={}",
            c.problem, c.check, c.observed, c.threshold
        );
    }
    Ok(report.passed())
}

fn oracle(args: OracleArgs) -> Result<bool> {
    let problem = Problem::from_path(&args.problem)?;
    let r = grid_oracle(&problem, args.resolution, args.connectivity)?;
    println!(
        "problem={} connectivity={} resolution={} cost={} error_bound={} waypoints={}",
        problem.name,
        r.connectivity,
        r.resolution,
        r.cost,
        r.error_bound,
        r.waypoints.len()
    );
    Ok(true)
}
