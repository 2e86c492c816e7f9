//! `povm-shadows`: validate measurements, compute shadows and shadow norms,
//! simulate estimation and search for good measurements.
//!
//! Exit status is 0 on success, 2 on a usage error and 3 when a computation
//! or input fails; in the last case stderr carries
//! `{"error": <kind>, "message": <text>}`.

mod bench;
mod commands;
mod output;
mod sources;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "povm-shadows",
    version,
    about = "Classical shadows from generalized measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect or export a measurement.
    #[command(subcommand)]
    Povm(PovmCommand),
    /// Least-square classical shadows of a measurement.
    Shadows(ShadowsArgs),
    /// Squared shadow norms of observables (CSV).
    ShadowNorm(ShadowNormArgs),
    /// Monte Carlo estimation of an expectation value.
    Simulate(SimulateArgs),
    /// Simulated-annealing search for a qubit measurement.
    Optimize(OptimizeArgs),
    /// Reproduce reference values.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum PovmCommand {
    /// Check a measurement and print a JSON summary.
    Validate {
        /// Built-in name or JSON file.
        source: String,
    },
    /// Write a measurement as JSON.
    Export {
        source: String,
        /// Mix every effect with white noise, keeping weight `p`.
        #[arg(long)]
        depolarize: Option<f64>,
        /// Reflect the Bloch vectors through the origin (qubits only).
        #[arg(long)]
        invert: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ShadowMethod {
    General,
    Symmetric,
    Bloch,
}

#[derive(Args, Debug)]
struct ShadowsArgs {
    #[arg(long)]
    povm: String,
    #[arg(long, value_enum, default_value_t = ShadowMethod::General)]
    method: ShadowMethod,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ShadowNormArgs {
    #[arg(long)]
    povm: String,
    /// JSON file or built-in set (pauli-eigenprojections, paulis,
    /// <solid>-projections, haar:<count>:<seed>).
    #[arg(long)]
    observables: Option<String>,
    /// Add the state-averaged second moment as a column.
    #[arg(long)]
    average: bool,
    /// Print the largest projector norm over a sphere grid as JSON.
    #[arg(long, value_name = "R")]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Measurement applied on every site.
    #[arg(long)]
    povm: String,
    /// One operator, a list of per-site operators, or one joint state.
    #[arg(long)]
    state: PathBuf,
    /// One operator, or `{"factors": [[..]]}` for a product observable.
    #[arg(long)]
    observable: PathBuf,
    #[arg(long)]
    shots: usize,
    #[arg(long = "median-of-means", value_name = "K", default_value_t = 1)]
    median_of_means: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// Observables, or product observables with --factorized
    /// (file or factorized:<pool>:<count>:<seed>).
    #[arg(long)]
    observables: String,
    #[arg(long, default_value_t = 4)]
    outcomes: usize,
    #[arg(long, default_value_t = 1)]
    qubits: usize,
    #[arg(long)]
    factorized: bool,
    #[arg(long, default_value_t = 20_000)]
    iterations: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.995)]
    cooling_ratio: f64,
    #[arg(long, default_value_t = 0.3)]
    move_scale: f64,
    /// 0 picks the temperature from the spread of random moves.
    #[arg(long, default_value_t = 0.0)]
    initial_temperature: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Objective trace CSV; defaults to `<out>.trace.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BenchSuite {
    Paper,
}

#[derive(Args, Debug)]
struct BenchArgs {
    suite: BenchSuite,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(povm_shadows::Error),
    Bench(String),
}

impl From<povm_shadows::Error> for CliError {
    fn from(e: povm_shadows::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn report(&self) -> ExitCode {
        let (kind, message) = match self {
            CliError::Usage(m) => {
                eprintln!("error: {m}");
                return ExitCode::from(2);
            }
            CliError::Core(e) => (e.kind(), e.to_string()),
            CliError::Bench(m) => ("BenchmarkMismatch", m.clone()),
        };
        eprintln!(
            "{}",
            serde_json::json!({ "error": kind, "message": message })
        );
        ExitCode::from(3)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Povm(PovmCommand::Validate { source }) => commands::povm_validate(&source),
        Command::Povm(PovmCommand::Export {
            source,
            depolarize,
            invert,
            out,
        }) => commands::povm_export(&source, depolarize, invert, out.as_deref()),
        Command::Shadows(a) => commands::shadows(&a),
        Command::ShadowNorm(a) => commands::shadow_norm(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Bench(a) => bench::run(a.suite, a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
