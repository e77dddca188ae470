//! `ripstab` command-line front end. Everything the binary does is reachable
//! through [`run`], which maps failures to exit codes: 0 success, 1 input
//! error, 2 internal invariant violation.

pub mod commands;
pub mod manifest;
pub mod records;

use std::ffi::OsString;

use clap::{Parser, Subcommand};
use log::LevelFilter;

pub use commands::{BenchArgs, EvalArgs, InterpolateArgs, SynthArgs, TcaArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ripstab", version, about = "Temporal stabilization and evaluation of instance-mask streams")]
pub struct Cli {
    /// Worker threads for per-video parallelism (0 = one per logical CPU).
    #[arg(long, global = true, env = "RIPSTAB_JOBS", default_value_t = 0)]
    pub jobs: usize,

    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true, env = "RIPSTAB_LOG_LEVEL", default_value = "warn")]
    pub log_level: LevelFilter,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stabilize a prediction stream with temporal confidence aggregation.
    Tca(TcaArgs),
    /// Score predictions against annotations.
    Eval(EvalArgs),
    /// Fill in annotations between keyframes.
    Interpolate(InterpolateArgs),
    /// Generate a synthetic detection stream and its ground truth.
    Synth(SynthArgs),
    /// Measure aggregation throughput.
    Bench(BenchArgs),
}

impl Cli {
    pub fn jobs(&self) -> usize {
        if self.jobs == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.jobs
        }
    }
}

/// Parse `args` (including the program name), execute, and return the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .try_init();

    let jobs = cli.jobs();
    let outcome = std::panic::catch_unwind(|| match &cli.command {
        Command::Tca(args) => commands::tca::execute(args, jobs),
        Command::Eval(args) => commands::eval::execute(args),
        Command::Interpolate(args) => commands::interpolate::execute(args),
        Command::Synth(args) => commands::synth::execute(args),
        Command::Bench(args) => commands::bench::execute(args),
    });
    match outcome {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_INTERNAL
            }
        }
        Err(_) => {
            eprintln!("error: internal failure (panic)");
            EXIT_INTERNAL
        }
    }
}
