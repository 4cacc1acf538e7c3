use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pexp_core::lang::Mode;
use pexp_slicer::{cmd_check, cmd_graph, cmd_oracle, cmd_slice, cmd_vcs, parse_rational, Format, Outcome, RunConfig, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "pexp-slicer", version, about = "Specification-based slicing of probabilistic programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Correctness notion; defaults to the one in the file's spec line
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Output format; each command has its own default
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Convergence tolerance of value iteration (e.g. 1e-9 or 1/1000)
    #[arg(long, global = true, value_parser = rational)]
    tolerance: Option<pexp_core::lang::Q>,

    #[arg(long, global = true, default_value_t = pexp_core::semantics::DEFAULT_MAX_ITER)]
    max_iter: usize,

    /// Seed for sampled runs
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Slice with repeated greedy passes instead of the slice graph
    #[arg(long, global = true)]
    greedy: bool,

    /// Weight of edges entering or leaving skip nodes
    #[arg(long, global = true, value_parser = rational)]
    skip_weight: Option<pexp_core::lang::Q>,

    /// Allow replacing a loop body by skip when only partial correctness is at stake
    #[arg(long, global = true)]
    allow_trivial_loop_slices: bool,

    /// Sampled runs per state added to the oracle output
    #[arg(long, global = true, default_value_t = 0)]
    samples: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Discharge the verification conditions of the file's specification
    Check { file: PathBuf },
    /// Compute a slice preserving the specification
    Slice { file: PathBuf },
    /// Print the verification conditions
    Vcs { file: PathBuf },
    /// Print the slice graph
    Graph { file: PathBuf },
    /// Tabulate the pre-expectation of the post over all states
    Oracle { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Partial,
    Total,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Dot,
    Csv,
}

fn rational(s: &str) -> Result<pexp_core::lang::Q, String> {
    parse_rational(s).ok_or_else(|| format!("`{s}` is not a non-negative rational"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let defaults = RunConfig::default();
    let cfg = RunConfig {
        mode: cli.mode.map(|m| match m {
            ModeArg::Partial => Mode::Partial,
            ModeArg::Total => Mode::Total,
        }),
        tolerance: cli.tolerance.unwrap_or(defaults.tolerance),
        max_iter: cli.max_iter,
        skip_weight: cli.skip_weight.unwrap_or(defaults.skip_weight),
        allow_trivial_loop_slices: cli.allow_trivial_loop_slices,
        seed: cli.seed,
        output_format: cli.format.map(|f| match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Dot => Format::Dot,
            FormatArg::Csv => Format::Csv,
        }),
        greedy: cli.greedy,
        samples: cli.samples,
        color: std::env::var("PEXP_COLOR").is_ok_and(|v| v == "1"),
    };
    let (file, cmd): (&PathBuf, fn(&str, &RunConfig) -> Outcome) = match &cli.command {
        Command::Check { file } => (file, cmd_check),
        Command::Slice { file } => (file, cmd_slice),
        Command::Vcs { file } => (file, cmd_vcs),
        Command::Graph { file } => (file, cmd_graph),
        Command::Oracle { file } => (file, cmd_oracle),
    };
    let out = match std::fs::read_to_string(file) {
        Ok(src) => cmd(&src, &cfg),
        Err(e) => Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: format!("error: {}: {e}\n", file.display()) },
    };
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code as u8)
}
