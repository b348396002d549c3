//! Command-line front end: parse a JSON experiment config, dispatch a
//! subcommand, write CSV/JSONL results.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use endocost::allocators::EtaSchedule;
use endocost::graph::validate_assumptions;
use endocost::harness::{
    mean_regret_by_horizon, run_batch, slope_fit, topology_sweep, truthfulness_series,
    write_trace, AllocatorSpec, ExperimentConfig, GraphSpec, ResultRow, RunOutcome, CSV_HEADER,
};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

#[derive(Parser)]
#[command(name = "endocost", about = "Online resource allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured runs and write result rows.
    Run(CommonArgs),
    /// Horizon sweep with a power-law slope fit per allocator.
    Sweep(CommonArgs),
    /// Topology sweep with the computation-regret product table.
    Topology(CommonArgs),
    /// Truthfulness-gap series over growing windows, with a rate verdict.
    Truthfulness(CommonArgs),
    /// Print the validation report without running.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the config's horizon list with this single horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Replace the config's allocator (uniform | gated | competitive).
    #[arg(long)]
    allocator: Option<String>,
    /// Replace the config's topology, keeping n and lambda.
    #[arg(long)]
    topology: Option<String>,
    /// Worker pool size; falls back to ENDOCOST_WORKERS, then to the
    /// available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Dump per-run traces under <out>/traces/.
    #[arg(long)]
    trace: bool,
    /// Proceed even when the coupling strength violates the safe bound.
    #[arg(long)]
    allow_unsafe_lambda: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Topology(args) => cmd_topology(args),
        Command::Truthfulness(args) => cmd_truthfulness(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message.replace('\n', " "));
            ExitCode::from(failure.code)
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        Failure::config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut config = ExperimentConfig::from_json(&text)
        .map_err(|e| Failure::config(format!("invalid config: {e}")))?;
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    if let Some(horizon) = args.horizon {
        config.horizons = vec![horizon];
    }
    if let Some(name) = &args.allocator {
        config.allocator = match name.as_str() {
            "uniform" => AllocatorSpec::Uniform,
            "gated" => AllocatorSpec::Gated {
                base_step: endocost::harness::GATED_BASE_STEP,
                step_exponent: endocost::harness::GATED_STEP_EXPONENT,
            },
            "competitive" => AllocatorSpec::Competitive {
                eta: None,
                anytime: false,
            },
            other => {
                return Err(Failure::config(format!("unknown allocator '{other}'")));
            }
        };
    }
    if let Some(name) = &args.topology {
        let n = config.graph.n();
        let lambda = config.graph.lambda();
        config.graph = match name.as_str() {
            "full" => GraphSpec::Full {
                n,
                lambda,
                w_coop: 1.0,
                w_comp: -1.0,
            },
            "ring" => GraphSpec::Ring { n, lambda, w: 1.0 },
            "star" => GraphSpec::Star { n, lambda, w: 1.0 },
            "wuxing" => GraphSpec::Wuxing {
                lambda,
                w_sheng: 1.0,
                w_ke: -1.0,
            },
            "generalized-wuxing" => GraphSpec::GeneralizedWuxing {
                n,
                lambda,
                w_sheng: 1.0,
                w_ke: -1.0,
            },
            other => {
                return Err(Failure::config(format!(
                    "unknown topology '{other}' (random-sparse must be configured in the file)"
                )));
            }
        };
    }
    config
        .validate()
        .map_err(|e| Failure::config(format!("invalid config: {e}")))?;
    Ok(config)
}

fn check_assumptions(config: &ExperimentConfig, args: &CommonArgs) -> Result<(), Failure> {
    let graph = config
        .graph
        .build()
        .map_err(|e| Failure::config(format!("invalid graph: {e}")))?;
    let report = validate_assumptions(&graph);
    if !report.passed() && !args.allow_unsafe_lambda {
        return Err(Failure::config(format!(
            "assumption violations: {} (rerun with --allow-unsafe-lambda to force)",
            report.violations.join("; ")
        )));
    }
    Ok(())
}

fn workers(args: &CommonArgs) -> Result<usize, Failure> {
    if let Some(w) = args.workers {
        return Ok(w.max(1));
    }
    if let Ok(value) = std::env::var("ENDOCOST_WORKERS") {
        return value
            .parse::<usize>()
            .map(|w| w.max(1))
            .map_err(|_| Failure::config(format!("ENDOCOST_WORKERS is not a number: {value}")));
    }
    Ok(std::thread::available_parallelism().map_or(1, |p| p.get()))
}

fn execute(
    config: &ExperimentConfig,
    args: &CommonArgs,
) -> Result<Vec<RunOutcome>, Failure> {
    let outcomes = run_batch(std::slice::from_ref(config), workers(args)?, args.trace)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    if args.trace {
        for outcome in &outcomes {
            let trace = outcome.trace.as_ref().expect("traces were requested");
            write_trace(trace, &args.out).map_err(|e| Failure::runtime(e.to_string()))?;
        }
    }
    Ok(outcomes)
}

/// Appends rows to results.csv / results.jsonl, writing the CSV header only
/// when the file is new.
fn append_results(rows: &[ResultRow], args: &CommonArgs) -> Result<(), Failure> {
    use std::io::Write as _;
    fs::create_dir_all(&args.out).map_err(|e| Failure::runtime(e.to_string()))?;
    let csv_path = args.out.join("results.csv");
    let fresh = !csv_path.exists();
    let mut csv = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&csv_path)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let mut jsonl = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(args.out.join("results.jsonl"))
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let mut text = String::new();
    if fresh {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
        let line = serde_json::to_string(row).map_err(|e| Failure::runtime(e.to_string()))?;
        jsonl
            .write_all(format!("{line}\n").as_bytes())
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    csv.write_all(text.as_bytes())
        .map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(())
}

fn cmd_run(args: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(args)?;
    check_assumptions(&config, args)?;
    let outcomes = execute(&config, args)?;
    let rows: Vec<ResultRow> = outcomes.iter().map(|o| o.row.clone()).collect();
    append_results(&rows, args)?;
    for row in &rows {
        println!(
            "{}: static_regret={} dynamic_regret={} wall={:.3}s",
            row.run_id(),
            row.static_regret,
            row.dynamic_regret,
            row.wall_seconds
        );
    }
    Ok(())
}

fn cmd_sweep(args: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(args)?;
    check_assumptions(&config, args)?;
    let mut all_rows = Vec::new();
    let mut fits = Vec::new();
    for allocator in config.allocator_list() {
        let mut variant = config.clone();
        variant.allocator = allocator.clone();
        variant.allocators = Vec::new();
        let outcomes = execute(&variant, args)?;
        let rows: Vec<ResultRow> = outcomes.into_iter().map(|o| o.row).collect();
        let points = mean_regret_by_horizon(&rows);
        let fit = slope_fit(&points).map_err(|e| Failure::runtime(e.to_string()))?;
        println!(
            "{}: p={:.4} c={:.4} r_squared={:.5}",
            allocator.label(),
            fit.exponent,
            fit.coefficient,
            fit.r_squared
        );
        fits.push(serde_json::json!({
            "allocator": allocator.label(),
            "exponent": fit.exponent,
            "coefficient": fit.coefficient,
            "r_squared": fit.r_squared,
        }));
        all_rows.extend(rows);
    }
    endocost::harness::write_results(&all_rows, &args.out)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let slopes = serde_json::to_string_pretty(&fits).map_err(|e| Failure::runtime(e.to_string()))?;
    fs::write(args.out.join("slopes.json"), slopes + "\n")
        .map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(())
}

fn cmd_topology(args: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(args)?;
    check_assumptions(&config, args)?;
    let sweep =
        topology_sweep(&config, workers(args)?).map_err(|e| Failure::runtime(e.to_string()))?;
    endocost::harness::write_results(&sweep.rows, &args.out)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    println!(
        "{:<20} {:>5} {:>18} {:>14}  constraints",
        "topology", "runs", "mean_cost_product", "mean_regret"
    );
    for group in &sweep.groups {
        println!(
            "{:<20} {:>5} {:>18.3} {:>14.4}  {}",
            group.topology,
            group.runs,
            group.mean_cost_product,
            group.mean_static_regret,
            if group.constraint_violation {
                "VIOLATED"
            } else {
                "ok"
            }
        );
    }
    Ok(())
}

fn cmd_truthfulness(args: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(args)?;
    check_assumptions(&config, args)?;
    if !config.environment.is_stationary() {
        println!(
            "warning: truthfulness convergence is only expected for stationary \
             environments; running anyway"
        );
    }
    let horizon = *config.horizons.last().expect("validated nonempty");
    let graph = config
        .graph
        .build()
        .map_err(|e| Failure::config(format!("invalid graph: {e}")))?;
    let mut single = config.clone();
    single.horizons = vec![horizon];
    single.seeds = vec![config.seeds[0]];
    let (trace, row) = endocost::harness::run_once(&single, horizon, single.seeds[0])
        .map_err(|e| Failure::runtime(e.to_string()))?;
    let mut windows: Vec<usize> = (0..=6)
        .rev()
        .map(|k| (horizon >> k).max(1) as usize)
        .collect();
    windows.dedup();
    let series = truthfulness_series(&trace, &graph, &windows)
        .map_err(|e| Failure::runtime(e.to_string()))?;

    use std::io::Write as _;
    fs::create_dir_all(&args.out).map_err(|e| Failure::runtime(e.to_string()))?;
    let mut file = fs::File::create(args.out.join("truthfulness.jsonl"))
        .map_err(|e| Failure::runtime(e.to_string()))?;
    for (window, gap) in &series {
        println!("window {window}: gap = {gap:?}");
        let line = serde_json::json!({ "window": window, "gap": gap });
        writeln!(file, "{line}").map_err(|e| Failure::runtime(e.to_string()))?;
    }
    append_results(std::slice::from_ref(&row), args)?;

    // Rate verdict: compare gap(T)/gap(T/4) against the ln(t)/sqrt(t) decay.
    let gap_full = series.last().and_then(|(_, g)| *g);
    let gap_quarter = series
        .iter()
        .find(|(w, _)| *w == (horizon / 4).max(1) as usize)
        .and_then(|(_, g)| *g);
    match (gap_quarter, gap_full) {
        (Some(gq), Some(gf)) if gq > 0.0 => {
            let t = horizon as f64;
            let expected = (t.ln() / t.sqrt()) / ((t / 4.0).ln() / (t / 4.0).sqrt());
            let measured = gf / gq;
            let verdict = if measured <= expected * 1.25 {
                "consistent"
            } else {
                "inconsistent"
            };
            println!(
                "rate check: gap(T)/gap(T/4) = {measured:.4}, ln t/sqrt t predicts {expected:.4} -> {verdict}"
            );
        }
        _ => println!("rate check: skipped (gap undefined or zero over the window)"),
    }
    Ok(())
}

fn cmd_validate(args: &CommonArgs) -> Result<(), Failure> {
    let config = load_config(args)?;
    let graph = config
        .graph
        .build()
        .map_err(|e| Failure::config(format!("invalid graph: {e}")))?;
    let report = validate_assumptions(&graph);
    println!(
        "graph: {} (n={}, m_directed={}, lambda={}, lambda*n={})",
        config.graph.label(),
        graph.n(),
        graph.m_directed(),
        graph.lambda(),
        report.lambda_n
    );
    println!("environment: {}", config.environment.label());
    let n = graph.n();
    for &horizon in &config.horizons {
        match &config.allocator {
            AllocatorSpec::Competitive { eta: Some(e), .. } => {
                let default_eta = EtaSchedule::<f64>::FixedHorizon { horizon }.at(n, 1);
                if (e - default_eta).abs() > 1e-12 {
                    println!(
                        "note: explicit eta {e} differs from sqrt(ln N / T) = {default_eta} at T={horizon}"
                    );
                }
            }
            AllocatorSpec::Competitive { anytime: true, .. } => {
                println!("note: anytime learning-rate schedule deviates from the fixed-horizon default");
            }
            AllocatorSpec::Gated {
                base_step,
                step_exponent,
            } => {
                if *base_step != endocost::harness::GATED_BASE_STEP
                    || *step_exponent != endocost::harness::GATED_STEP_EXPONENT
                {
                    println!(
                        "note: gated step {base_step}*t^{step_exponent} deviates from the 1.0*t^(-1/3) default"
                    );
                }
            }
            _ => {}
        }
    }
    if report.passed() {
        println!("all assumptions satisfied");
        Ok(())
    } else {
        for violation in &report.violations {
            println!("violation: {violation}");
        }
        Err(Failure::validation(format!(
            "{} assumption violation(s)",
            report.violations.len()
        )))
    }
}
