//! Command-line driver: generate planted instances, run the grid solvers,
//! sweep the cost model to CSV, print analysis tables, and run the built-in
//! verification suites.
//!
//! Primary output goes to stdout and is byte-identical for identical
//! arguments and seeds; diagnostics go to stderr. Exit codes: 0 success,
//! 1 solver failure, 2 usage error, 3 verification failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlinsolve::{
    amplify, checked_grid_size, classical_cost, classical_solve, crossover, dimred_solve,
    generate_instance, iterations_known_t, lemma1_check, lemma2_check, monte_carlo_success,
    naive_solve, quantum_cost, stage_iterations, success_lower_bound, ArithmeticMode, GridPoint,
    InstanceFile, LinearSystem, Predicate, SearchState, SearchStats, StageMode, StagePolicy,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "qlinsolve",
    version,
    about = "Staged amplitude-amplification solver for integer linear systems on a grid"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance and write it as JSON.
    Generate(GenerateArgs),
    /// Solve an instance from a file or generated on the fly.
    Solve(SolveArgs),
    /// Emit a CSV of costs, bounds, and empirical success rates over n.
    Sweep(SweepArgs),
    /// Print the cost model, crossover, and success-bound tables for a grid.
    Analyze(AnalyzeArgs),
    /// Run the built-in verification suites (exit 3 on any violation).
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Residuals wrap modulo M.
    Modular,
    /// Residuals are exact signed integers.
    Exact,
}

impl From<ModeArg> for ArithmeticMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Modular => ArithmeticMode::ModularM,
            ModeArg::Exact => ArithmeticMode::ExactInteger,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    /// One-shot amplification of the all-rows predicate over M^n points.
    Naive,
    /// Staged row-by-row reduction of the search space.
    Dimred,
    /// Exact Gaussian elimination (reference, no randomness).
    Classical,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageModeArg {
    /// Assume M^(n-i) survivors per stage.
    Model,
    /// Enumerate the surviving support to count targets exactly.
    Oracle,
    /// Unknown count: randomized growing schedule.
    Bbht,
}

impl From<StageModeArg> for StageMode {
    fn from(m: StageModeArg) -> Self {
        match m {
            StageModeArg::Model => StageMode::ModelCount,
            StageModeArg::Oracle => StageMode::OracleCount,
            StageModeArg::Bbht => StageMode::Bbht,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct GenerateArgs {
    /// System dimension.
    #[arg(long)]
    n: usize,
    /// Grid points per dimension (power of two).
    #[arg(long = "M", value_name = "M")]
    m: u64,
    /// Residual arithmetic.
    #[arg(long, value_enum, default_value = "modular")]
    mode: ModeArg,
    /// Generation seed (echoed into the instance file).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON to solve; alternatively pass --n and --M to generate.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Dimension for on-the-fly generation.
    #[arg(long)]
    n: Option<usize>,
    /// Grid size for on-the-fly generation.
    #[arg(long = "M", value_name = "M")]
    m: Option<u64>,
    /// Residual arithmetic for on-the-fly generation.
    #[arg(long, value_enum, default_value = "modular")]
    mode: ModeArg,
    /// Seed for on-the-fly generation.
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
    /// Solver to run.
    #[arg(long, value_enum, default_value = "dimred")]
    algo: AlgoArg,
    /// Stage iteration-count source for the staged solver.
    #[arg(long, value_enum, default_value = "model")]
    stage_mode: StageModeArg,
    /// Extra attempts per stage after a failed measurement.
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    /// Growth factor for the unknown-count schedule.
    #[arg(long, default_value_t = 1.2)]
    bbht_growth: f64,
    /// Random seed for measurements (echoed in the output).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs; batches report a success rate and exit 0.
    #[arg(long, default_value_t = 1)]
    runs: u32,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Print each pipeline transition as a JSON line.
    #[arg(long)]
    trace: bool,
    /// Print the final state's nonzero amplitudes as a JSON array.
    #[arg(long)]
    dump_state: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid points per dimension (power of two).
    #[arg(long = "M", value_name = "M")]
    m: u64,
    #[arg(long, default_value_t = 1)]
    n_min: usize,
    #[arg(long, default_value_t = 8)]
    n_max: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Monte Carlo runs per row (0 disables; rows outside the simulable
    /// guard leave the rate blank).
    #[arg(long, default_value_t = 200)]
    runs: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Grid points per dimension (power of two).
    #[arg(long = "M", value_name = "M")]
    m: u64,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

#[derive(Args)]
struct VerifyArgs {
    /// Seed for the randomized suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (e.g. `qlinsolve analyze | head`) instead
    // of panicking mid-print.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Verify(args) => Ok(cmd_verify(args)),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode, String> {
    let (system, solution) = generate_instance(args.n, args.m, args.mode.into(), args.seed)
        .map_err(|e| e.to_string())?;
    let file = InstanceFile::from_system(&system, args.seed, Some(&solution));
    let json = file.to_json();
    match &args.out {
        Some(path) => {
            fs::write(path, json + "\n").map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Instance plus an origin line and the planted solution when known.
fn load_or_generate(args: &SolveArgs) -> Result<(LinearSystem, Option<GridPoint>, String), String> {
    match (&args.input, args.n, args.m) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let file = InstanceFile::from_json(&text)
                .map_err(|e| format!("invalid instance {}: {e}", path.display()))?;
            let origin = format!(
                "file {} (n={}, M={}, mode={})",
                path.display(),
                file.n,
                file.m,
                match file.mode {
                    ArithmeticMode::ModularM => "modular",
                    ArithmeticMode::ExactInteger => "exact",
                }
            );
            let (system, solution) = file.into_system().map_err(|e| e.to_string())?;
            Ok((system, solution, origin))
        }
        (None, Some(n), Some(m)) => {
            let mode: ArithmeticMode = args.mode.into();
            let (system, solution) =
                generate_instance(n, m, mode, args.gen_seed).map_err(|e| e.to_string())?;
            let origin = format!("generated (n={n}, M={m}, mode={mode}, gen-seed={})", args.gen_seed);
            Ok((system, Some(solution), origin))
        }
        _ => Err("solve needs --in FILE, or both --n and --M for on-the-fly generation".into()),
    }
}

fn fmt_mode(mode: ArithmeticMode) -> &'static str {
    match mode {
        ArithmeticMode::ModularM => "modular",
        ArithmeticMode::ExactInteger => "exact",
    }
}

fn fmt_algo(algo: AlgoArg) -> &'static str {
    match algo {
        AlgoArg::Naive => "naive",
        AlgoArg::Dimred => "dimred",
        AlgoArg::Classical => "classical",
    }
}

fn fmt_stage_mode(mode: StageModeArg) -> &'static str {
    match mode {
        StageModeArg::Model => "model",
        StageModeArg::Oracle => "oracle",
        StageModeArg::Bbht => "bbht",
    }
}

fn solution_cell(point: Option<&GridPoint>) -> String {
    point
        .map(|p| {
            p.coords()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";")
        })
        .unwrap_or_default()
}

fn print_stats_table(stats: &SearchStats, system: &LinearSystem, planted: Option<&GridPoint>) {
    println!("  stage  space  count  sched  execd  oracle    p(pre)  flag  retries");
    for rec in &stats.stages {
        let count = rec
            .solution_count
            .map(|t| t.to_string())
            .unwrap_or_else(|| "?".into());
        println!(
            "  {:>5}  {:>5}  {:>5}  {:>5}  {:>5}  {:>6}  {:>8.6}  {:>4}  {:>7}",
            rec.stage,
            rec.space_size,
            count,
            rec.iterations,
            rec.executed_iterations,
            rec.oracle_calls,
            rec.pre_measurement_success,
            if rec.flag_outcome { "yes" } else { "no" },
            rec.retries
        );
    }
    match (&stats.final_point, stats.residual_ok) {
        (Some(p), true) => {
            println!("  solution: {p}");
            let residual = system.residual(p).expect("final point is on the grid");
            println!("  residual: {:?} (all zero: yes)", residual.values());
            if let Some(x_star) = planted {
                println!(
                    "  matches planted solution: {}",
                    if p == x_star { "yes" } else { "no" }
                );
            }
        }
        (Some(p), false) => {
            println!("  measured point: {p} (residual nonzero — run failed)");
        }
        (None, _) => {
            println!("  no solution: a stage exhausted its retries");
        }
    }
    println!(
        "  totals: scheduled {}, executed {}, oracle calls {}, retries {}",
        stats.total_iterations,
        stats.total_executed_iterations,
        stats.total_oracle_calls,
        stats.total_retries
    );
    println!(
        "  ledger: forward ops {}, erasures {}",
        stats.ledger_op_count, stats.ledger_uncompute_count
    );
    if let Some(p) = stats.model_success_probability {
        println!("  model success probability: {p:.6}");
    }
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, String> {
    let (system, planted, origin) = load_or_generate(&args)?;
    if args.runs == 0 {
        return Err("--runs must be at least 1".into());
    }
    let policy = StagePolicy {
        mode: args.stage_mode.into(),
        max_retries: args.max_retries,
        bbht_growth: args.bbht_growth,
    };
    policy.validate().map_err(|e| e.to_string())?;
    if args.algo != AlgoArg::Classical {
        checked_grid_size(system.n(), system.grid_modulus()).map_err(|e| e.to_string())?;
    }

    if args.format == FormatArg::Csv {
        println!("run,seed,algorithm,solved,solution,scheduled,executed,oracle_calls,retries,op_count,uncompute_count");
    } else if args.format == FormatArg::Table {
        println!("seed: {}", args.seed);
        println!("instance: {origin}");
        match args.algo {
            AlgoArg::Classical => println!("algorithm: classical"),
            algo => println!(
                "algorithm: {} (stage mode {}, max retries {}, growth {:.2})",
                fmt_algo(algo),
                fmt_stage_mode(args.stage_mode),
                args.max_retries,
                args.bbht_growth
            ),
        }
    }

    if args.algo == AlgoArg::Classical {
        return solve_classical(&args, &system, planted.as_ref());
    }

    let mut solved = 0u32;
    for run in 0..args.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(run as u64);
        let stats = match args.algo {
            AlgoArg::Naive => naive_solve(&system, &mut rng),
            AlgoArg::Dimred => dimred_solve(&system, &policy, &mut rng),
            AlgoArg::Classical => unreachable!(),
        }
        .map_err(|e| e.to_string())?;
        if stats.solution().is_some() {
            solved += 1;
        }
        if args.trace {
            for event in &stats.ledger_events {
                println!("{}", serde_json::to_string(event).expect("event serializes"));
            }
        }
        match args.format {
            FormatArg::Table => {
                if args.runs > 1 {
                    println!(
                        "run {run}: solved {} solution {} scheduled {} executed {} oracle {} retries {}",
                        if stats.solution().is_some() { "yes" } else { "no" },
                        stats
                            .solution()
                            .map(|p| p.to_string())
                            .unwrap_or_else(|| "-".into()),
                        stats.total_iterations,
                        stats.total_executed_iterations,
                        stats.total_oracle_calls,
                        stats.total_retries
                    );
                } else {
                    println!("run {run}:");
                    print_stats_table(&stats, &system, planted.as_ref());
                }
            }
            FormatArg::Json => {
                let line = serde_json::json!({
                    "run": run,
                    "seed": args.seed,
                    "algorithm": stats.algorithm,
                    "instance": {
                        "n": system.n(),
                        "M": system.grid_modulus(),
                        "mode": fmt_mode(system.mode()),
                    },
                    "solved": stats.solution().is_some(),
                    "stats": stats,
                });
                println!("{line}");
            }
            FormatArg::Csv => {
                println!(
                    "{run},{},{},{},{},{},{},{},{},{},{}",
                    args.seed,
                    stats.algorithm,
                    stats.solution().is_some(),
                    solution_cell(stats.solution()),
                    stats.total_iterations,
                    stats.total_executed_iterations,
                    stats.total_oracle_calls,
                    stats.total_retries,
                    stats.ledger_op_count,
                    stats.ledger_uncompute_count
                );
            }
        }
        if args.dump_state {
            let entries = stats
                .final_state
                .as_ref()
                .map(|s| s.nonzero_amplitudes(1e-15))
                .unwrap_or_default();
            println!("{}", serde_json::to_string(&entries).expect("dump serializes"));
        }
    }
    if args.runs > 1 {
        if args.format == FormatArg::Table {
            println!(
                "batch: {} runs, {} solved (rate {:.4})",
                args.runs,
                solved,
                solved as f64 / args.runs as f64
            );
        }
        Ok(ExitCode::SUCCESS)
    } else if solved == 1 {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("solver failed: no verified solution");
        Ok(ExitCode::from(1))
    }
}

fn solve_classical(
    args: &SolveArgs,
    system: &LinearSystem,
    planted: Option<&GridPoint>,
) -> Result<ExitCode, String> {
    match classical_solve(system) {
        Ok(point) => {
            let residual = system.residual(&point).map_err(|e| e.to_string())?;
            match args.format {
                FormatArg::Table => {
                    println!("  solution: {point}");
                    println!(
                        "  residual: {:?} (all zero: {})",
                        residual.values(),
                        if residual.is_zero() { "yes" } else { "no" }
                    );
                    if let Some(x_star) = planted {
                        println!(
                            "  matches planted solution: {}",
                            if &point == x_star { "yes" } else { "no" }
                        );
                    }
                }
                FormatArg::Json => {
                    let line = serde_json::json!({
                        "run": 0,
                        "seed": args.seed,
                        "algorithm": "classical",
                        "instance": {
                            "n": system.n(),
                            "M": system.grid_modulus(),
                            "mode": fmt_mode(system.mode()),
                        },
                        "solved": true,
                        "solution": point.coords(),
                        "residual_ok": residual.is_zero(),
                    });
                    println!("{line}");
                }
                FormatArg::Csv => {
                    println!(
                        "0,{},classical,true,{},,,,,,",
                        args.seed,
                        solution_cell(Some(&point))
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            match args.format {
                FormatArg::Table => println!("  no grid solution: {e}"),
                FormatArg::Json => {
                    let line = serde_json::json!({
                        "run": 0,
                        "seed": args.seed,
                        "algorithm": "classical",
                        "solved": false,
                        "reason": e.to_string(),
                    });
                    println!("{line}");
                }
                FormatArg::Csv => println!("0,{},classical,false,,,,,,,", args.seed),
            }
            Ok(ExitCode::from(1))
        }
    }
}

/// Largest grid a sweep row will simulate for its empirical column. A row
/// costs `runs` full state-vector simulations, so this is much tighter than
/// the single-run guard; larger rows leave the rate blank.
const SWEEP_EMPIRICAL_BUDGET: u128 = 1 << 16;

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, String> {
    if args.step == 0 {
        return Err("--step must be at least 1".into());
    }
    if args.n_min == 0 || args.n_min > args.n_max {
        return Err("need 1 <= --n-min <= --n-max".into());
    }
    let mut out = String::from("n,M,quantum_steps,classical_steps,bound,empirical_rate\n");
    let policy = StagePolicy {
        mode: StageMode::ModelCount,
        max_retries: 0,
        ..StagePolicy::default()
    };
    for n in (args.n_min..=args.n_max).step_by(args.step) {
        let q = quantum_cost(n as u64, args.m);
        let c = classical_cost(n as u64);
        let bound = success_lower_bound(n as u64, args.m)
            .map(|b| format!("{:.6}", b.bound))
            .unwrap_or_default();
        let within_budget = (args.m as u128)
            .checked_pow(n as u32)
            .is_some_and(|size| size <= SWEEP_EMPIRICAL_BUDGET);
        let rate = if args.runs > 0 && within_budget {
            let (system, _) = generate_instance(
                n,
                args.m,
                ArithmeticMode::ModularM,
                args.seed.wrapping_add(n as u64),
            )
            .map_err(|e| e.to_string())?;
            let mc = monte_carlo_success(
                &system,
                &policy,
                args.runs,
                args.seed.wrapping_add(1_000_000 + n as u64),
            )
            .map_err(|e| e.to_string())?;
            format!("{:.4}", mc.rate)
        } else {
            String::new()
        };
        out.push_str(&format!("{n},{},{q},{c},{bound},{rate}\n", args.m));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, &out).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn analyze_cost_rows(m: u64) -> Vec<u64> {
    let x = crossover(m);
    let mut ns: Vec<u64> = vec![1, 10, 100];
    ns.extend([x.saturating_sub(1).max(1), x, x + 1, 1000]);
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn analyze_bound_rows(m: u64) -> Vec<u64> {
    let mut ns: Vec<u64> = [1u64, m >> 10, m >> 4, m >> 3]
        .into_iter()
        .filter(|&n| n >= 1 && n < m)
        .collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<ExitCode, String> {
    if args.m < 2 || !args.m.is_power_of_two() {
        return Err(format!("--M must be a power of two >= 2, got {}", args.m));
    }
    let m = args.m;
    let per_stage = stage_iterations(m);
    let x = crossover(m);
    let costs: Vec<_> = analyze_cost_rows(m)
        .into_iter()
        .map(|n| qlinsolve::CostModel::evaluate(n, m))
        .collect();
    let bounds: Vec<_> = analyze_bound_rows(m)
        .into_iter()
        .map(|n| success_lower_bound(n, m).expect("n < m by construction"))
        .collect();
    match args.format {
        FormatArg::Table => {
            println!("grid modulus M: {m} (2^{})", m.trailing_zeros());
            println!("per-stage iterations floor(pi/4 sqrt(M)): {per_stage}");
            println!("crossover dimension (n^3 overtakes 2n(s+n)): {x}");
            println!();
            println!("{:>10}  {:>18}  {:>18}", "n", "quantum_steps", "classical_steps");
            for c in &costs {
                println!("{:>10}  {:>18}  {:>18}", c.n, c.quantum_steps, c.classical_steps);
            }
            println!();
            println!("success lower bound (M - 2n)/(M - n):");
            println!("{:>12}  {:>10}  {:>10}", "n", "bound", "per-stage^n");
            for b in &bounds {
                println!("{:>12}  {:>10.6}  {:>10.6}", b.n, b.bound, b.model);
            }
        }
        FormatArg::Json => {
            let doc = serde_json::json!({
                "M": m,
                "stage_iterations": per_stage,
                "crossover": x,
                "costs": costs,
                "bounds": bounds,
            });
            println!("{doc}");
        }
        FormatArg::Csv => {
            println!("n,M,quantum_steps,classical_steps");
            for c in &costs {
                println!("{},{},{},{}", c.n, c.m, c.quantum_steps, c.classical_steps);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

struct Suite {
    failures: u32,
}

impl Suite {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{}: {name} — {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn cmd_verify(args: VerifyArgs) -> ExitCode {
    let mut suite = Suite { failures: 0 };

    // Closed-form amplification on a sample of space/target sizes.
    {
        let mut worst: f64 = 0.0;
        for &(space, t) in &[(4u64, 1u64), (16, 2), (64, 1), (64, 8), (256, 4)] {
            let state = SearchState::uniform(1, space).expect("guarded");
            let pred = Predicate::new("targets", move |p: &GridPoint| p.index(space) < t);
            let k = iterations_known_t(space, t).expect("valid counts");
            let amplified = amplify(&state, &pred, &state, k).expect("same support");
            let theta = (t as f64 / space as f64).sqrt().asin();
            let expected = ((2 * k + 1) as f64 * theta).sin().powi(2);
            worst = worst.max((amplified.success_probability(&pred) - expected).abs());
        }
        suite.check(
            "closed-form success probability",
            worst < 1e-9,
            format!("worst deviation {worst:.2e}"),
        );
    }

    // Certainty on four points with one target.
    {
        let state = SearchState::uniform(1, 4).expect("guarded");
        let pred = Predicate::new("target", |p: &GridPoint| p.index(4) == 2);
        let amplified = amplify(&state, &pred, &state, 1).expect("same support");
        let p = amplified.success_probability(&pred);
        suite.check(
            "single-iteration certainty on 4 points",
            (p - 1.0).abs() < 1e-12,
            format!("p = {p:.15}"),
        );
    }

    // Norm conservation under composed operations.
    {
        let state = SearchState::uniform(2, 8).expect("guarded");
        let pred = Predicate::new("targets", |p: &GridPoint| p.index(8) < 5);
        let looped = amplify(&state, &pred, &state, 500).expect("same support");
        let drift = (looped.norm() - 1.0).abs();
        suite.check(
            "norm conservation over 500 rounds",
            drift < 1e-9,
            format!("drift {drift:.2e}"),
        );
    }

    // Binomial inequality, exhaustive at moderate size.
    {
        let mut failures = 0u32;
        for n in 1..=40u64 {
            for k in 1..=n {
                if !lemma1_check(n, k) {
                    failures += 1;
                }
            }
        }
        suite.check(
            "binomial bound C(n,k) <= n^k",
            failures == 0,
            format!("0 failures expected, saw {failures} (n <= 40, exact integers)"),
        );
    }

    // Product inequality on random samples plus the boundary case.
    {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut failures = 0u32;
        for _ in 0..1000 {
            let n = rng.random_range(1..=500u64);
            let p = rng.random::<f64>() / (n as f64 + 1.0);
            if !lemma2_check(p, n).expect("np < 1").holds {
                failures += 1;
            }
        }
        let boundary = lemma2_check(0.0, 9).expect("in domain").holds;
        suite.check(
            "product bound (1-p)^n vs (1-2np)/(1-np)",
            failures == 0 && boundary,
            format!("{failures} failures over 1000 samples; p=0 boundary holds"),
        );
    }

    // Cost model identity and crossover window on the 32-bit grid.
    {
        let m = 1u64 << 32;
        let mut cost_ok = true;
        for n in [1u64, 17, 321, 322, 2000] {
            if quantum_cost(n, m) != 2 * n as u128 * (51_471 + n as u128) {
                cost_ok = false;
            }
        }
        let x = crossover(m);
        suite.check(
            "cost model and crossover window",
            cost_ok && (320..=323).contains(&x),
            format!("per-stage constant {}, crossover {x}", stage_iterations(m)),
        );
    }

    // Large-system success bound reduces to the exact rational.
    {
        let b = success_lower_bound(1 << 28, 1 << 32).expect("n < M");
        suite.check(
            "large-system success bound",
            (b.bound_numer, b.bound_denom) == (14, 15) && b.bound >= 0.93,
            format!("bound {:.5} = {}/{}", b.bound, b.bound_numer, b.bound_denom),
        );
    }

    // Stage-count structure and solver agreement on seeded instances.
    {
        let policy = StagePolicy {
            mode: StageMode::OracleCount,
            max_retries: 12,
            ..StagePolicy::default()
        };
        let mut structure_ok = true;
        let mut agree_ok = true;
        for i in 0..10u64 {
            let (n, m) = if i % 2 == 0 { (2usize, 8u64) } else { (3, 4) };
            let (sys, planted) =
                generate_instance(n, m, ArithmeticMode::ModularM, args.seed.wrapping_add(i))
                    .expect("generation succeeds at these sizes");
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(77 + i));
            let stats = dimred_solve(&sys, &policy, &mut rng).expect("runs");
            for (idx, rec) in stats.stages.iter().enumerate() {
                if rec.space_size != m.pow((n - idx) as u32)
                    || rec.solution_count != Some(m.pow((n - idx - 1) as u32))
                {
                    structure_ok = false;
                }
            }
            let classical = classical_solve(&sys).expect("solvable");
            if stats.solution() != Some(&planted) || classical != planted {
                agree_ok = false;
            }
        }
        suite.check(
            "stage counts follow M^(n-i)",
            structure_ok,
            "enumerated counts match the geometric model".into(),
        );
        suite.check(
            "staged and classical solvers agree",
            agree_ok,
            "10 seeded instances, planted solutions recovered".into(),
        );
    }

    println!(
        "verify: {} checks failed",
        suite.failures
    );
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
