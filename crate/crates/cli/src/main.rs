use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use biphoton::config::{self, RunConfig};
use biphoton::dynamics::Parallelism;
use biphoton::run::{self, exit, Command, RunOptions};
use clap::{Args, Parser, Subcommand};

/// Butterfly photon-pair source simulator.
#[derive(Debug, Parser)]
#[command(name = "biphoton", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Integrate the rate equations and fit pair and loss rates.
    Simulate(Common),
    /// Solve the loss-free steady state.
    Steady(Common),
    /// Signal–idler cross-correlation of one mode.
    G2(Common),
    /// Circular-polarization scan and entangled fraction.
    Polarization(Common),
    /// Reduce the silver scheme to effective butterfly parameters.
    SilverReduce(Common),
    /// Simulate every point of the configured sweep.
    Sweep(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration (`fig2` or `silver-paper`).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory [default: outputs.dir or the working directory].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of rings.
    #[arg(long)]
    rings: Option<usize>,
    /// Exit with status 6 on any regime warning.
    #[arg(long)]
    strict: bool,
    /// Worker threads; 1 keeps everything on the calling thread.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl Cmd {
    fn split(&self) -> (Command, &Common) {
        match self {
            Cmd::Simulate(c) => (Command::Simulate, c),
            Cmd::Steady(c) => (Command::Steady, c),
            Cmd::G2(c) => (Command::G2, c),
            Cmd::Polarization(c) => (Command::Polarization, c),
            Cmd::SilverReduce(c) => (Command::SilverReduce, c),
            Cmd::Sweep(c) => (Command::Sweep, c),
        }
    }
}

fn load(args: &Common) -> Result<RunConfig> {
    let cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, Some(name)) => config::preset(name)?,
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    Ok(cfg)
}

fn code_of(err: &anyhow::Error) -> u8 {
    let code = match err.downcast_ref::<biphoton::Error>() {
        Some(e) => run::exit_code(e),
        None if err.downcast_ref::<std::io::Error>().is_some() => exit::IO,
        None => exit::CONFIG,
    };
    code as u8
}

fn execute(command: Command, args: &Common) -> Result<i32> {
    let cfg = load(args)?;
    let opts = RunOptions {
        out_dir: args
            .out
            .clone()
            .or_else(|| cfg.output_dir().cloned())
            .unwrap_or_else(|| PathBuf::from(".")),
        rings: args.rings,
        strict: args.strict,
        parallelism: if args.threads > 1 {
            Parallelism::Rayon
        } else {
            Parallelism::Sequential
        },
    };
    let outcome = if args.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .context("starting the thread pool")?;
        pool.install(|| run::run_command(&cfg, command, &opts))?
    } else {
        run::run_command(&cfg, command, &opts)?
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.exit_code(args.strict))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    if args.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(exit::USAGE as u8);
    }
    match execute(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code_of(&e))
        }
    }
}
