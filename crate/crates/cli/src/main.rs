//! `tapf`: solve, generate, benchmark and verify TAPF instances.
//!
//! Exit codes: 0 success (solved / no violations), 1 verify found
//! violations, 2 infeasible, 3 timeout, 64 usage error or missing file,
//! 65 malformed input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tapf::bench::{self, BenchCase, RunStatus};
use tapf::gridmap::{read_instance_file, read_map_file, InstanceError, LoadedInstance};
use tapf::plan_io::{format_plan, parse_plan};
use tapf::solver::{Outcome, SolverKind};
use tapf::validate::validate;

const EXIT_VIOLATIONS: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "tapf", version, about = "Optimal target assignment and path finding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write the plan.
    Solve(SolveArgs),
    /// Generate a benchmark instance.
    Gen(GenArgs),
    /// Run solvers over a directory of instances and write a results CSV.
    Bench(BenchArgs),
    /// Check a plan against its instance.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_parser = parse_solver)]
    solver: SolverKind,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 30.0, value_parser = parse_seconds)]
    timeout: f64,
    /// Plan output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Group,
    Common,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum)]
    scenario: Scenario,
    #[arg(long)]
    agents: usize,
    /// Targets per agent (common scenario).
    #[arg(long)]
    target_set_size: Option<usize>,
    /// Fraction of each set drawn from the shared pool (common scenario).
    #[arg(long)]
    shared_ratio: Option<f64>,
    #[arg(long)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    cases: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_solver, default_value = "itacbs,cbsta")]
    solvers: Vec<SolverKind>,
    #[arg(long, default_value_t = 30.0, value_parser = parse_seconds)]
    timeout: f64,
    /// Parallel runs; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    plan: PathBuf,
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse()
}

fn parse_seconds(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a nonnegative number of seconds")),
    }
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

fn data(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_DATA, error }
}

/// Missing or unreadable files are usage errors, anything else is bad data.
fn classify(error: InstanceError) -> Failure {
    match error {
        InstanceError::Io { .. } => usage(error.into()),
        other => data(other.into()),
    }
}

fn load_instance(path: &Path) -> Result<LoadedInstance, Failure> {
    read_instance_file(path).map_err(classify)
}

fn solve(args: SolveArgs) -> Result<u8, Failure> {
    let loaded = load_instance(&args.instance)?;
    let instance = &loaded.instance;
    let outcome = args.solver.solve(instance, Duration::from_secs_f64(args.timeout));
    let stats = outcome.stats();
    eprintln!(
        "{}: expanded {} generated {} in {:.3} s",
        args.solver,
        stats.expanded,
        stats.generated,
        stats.runtime.as_secs_f64()
    );
    match &outcome {
        Outcome::Solved(solution) => {
            let text = format_plan(instance, solution, Some(args.solver));
            match &args.out {
                Some(path) => fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(usage)?,
                None => print!("{text}"),
            }
            eprintln!("flowtime {}", solution.flowtime);
            Ok(0)
        }
        Outcome::Infeasible(_) => {
            eprintln!("infeasible");
            Ok(EXIT_INFEASIBLE)
        }
        Outcome::TimedOut(_) => {
            eprintln!("timed out after {} s", args.timeout);
            Ok(EXIT_TIMEOUT)
        }
    }
}

fn gen(args: GenArgs) -> Result<u8, Failure> {
    let map = Arc::new(read_map_file(&args.map).map_err(classify)?);
    let map_name = args
        .map
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "map".into());
    let case: BenchCase = match args.scenario {
        Scenario::Group => bench::gen_group(map, &map_name, args.agents, args.seed),
        Scenario::Common => {
            let size = args
                .target_set_size
                .ok_or_else(|| usage(anyhow!("--target-set-size is required for the common scenario")))?;
            let ratio = args
                .shared_ratio
                .ok_or_else(|| usage(anyhow!("--shared-ratio is required for the common scenario")))?;
            bench::gen_common(map, &map_name, args.agents, size, ratio, args.seed)
        }
    }
    .map_err(|e| usage(e.into()))?;
    let path = bench::write_case(&args.out, &case, &args.map)
        .with_context(|| format!("writing into {}", args.out.display()))
        .map_err(usage)?;
    println!("{}", path.display());
    Ok(0)
}

fn run_bench(args: BenchArgs) -> Result<u8, Failure> {
    let cases = bench::load_cases(&args.cases).map_err(classify)?;
    let records = bench::run(&cases, &args.solvers, Duration::from_secs_f64(args.timeout), args.jobs);
    for r in &records {
        if let RunStatus::Panicked(message) = &r.status {
            eprintln!("{} / {}: solver panicked: {message}", r.case_id, r.solver);
        }
    }
    let file = fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(usage)?;
    bench::write_csv(file, &records)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(usage)?;
    let solved = records.iter().filter(|r| r.solved).count();
    eprintln!("{} runs, {solved} solved", records.len());
    Ok(0)
}

fn verify(args: VerifyArgs) -> Result<u8, Failure> {
    let loaded = load_instance(&args.instance)?;
    let text = fs::read_to_string(&args.plan)
        .with_context(|| format!("reading {}", args.plan.display()))
        .map_err(usage)?;
    let solution = parse_plan(&text, &loaded.instance).map_err(|e| data(e.into()))?;
    let violations = validate(&loaded.instance, &solution);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok: flowtime {}", solution.flowtime);
        Ok(0)
    } else {
        Ok(EXIT_VIOLATIONS)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => run_bench(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
