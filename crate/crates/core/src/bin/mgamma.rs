use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use mgamma::construction::BoundMode;
use mgamma::harness::{self, Command, ExperimentManifest, Verbosity};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Build the prefix, write artifacts, verify.
    Construct,
    /// Re-verify the artifacts in --out.
    Verify,
    /// Agreement profiles and gamma evidence.
    Gamma,
    /// Exact tails against the Hoeffding bound on a grid.
    Hypergrid,
    /// Factorial amplification and majority decoding.
    Halfbound,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Hoeffding,
    ExactFinite,
}

#[derive(Debug, Parser)]
#[command(name = "mgamma", version, about = "Finite-scale experiments on coarse computability bounds of m-degrees")]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// TOML or JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stages: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_enum)]
    bound_mode: Option<Mode>,
    /// Also dump the prefix as ASCII 0/1.
    #[arg(long)]
    raw: bool,
    #[arg(long, conflicts_with = "verbose")]
    quiet: bool,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Construct => Command::Construct,
        Cmd::Verify => Command::Verify,
        Cmd::Gamma => Command::Gamma,
        Cmd::Hypergrid => Command::Hypergrid,
        Cmd::Halfbound => Command::Halfbound,
    };
    let mut manifest = ExperimentManifest::new(command, cli.config, cli.out);
    manifest.seed = cli.seed;
    manifest.stages = cli.stages;
    manifest.horizon = cli.horizon;
    manifest.bound_mode = cli.bound_mode.map(|m| match m {
        Mode::Hoeffding => BoundMode::Hoeffding,
        Mode::ExactFinite => BoundMode::ExactFinite,
    });
    manifest.raw = cli.raw;
    manifest.verbosity = if cli.quiet {
        Verbosity::Quiet
    } else if cli.verbose {
        Verbosity::Verbose
    } else {
        Verbosity::Normal
    };
    match harness::run(&manifest) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mgamma: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
