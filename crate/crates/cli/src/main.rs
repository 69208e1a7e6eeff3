//! `skotrim`: reflection, h-cuts, trimming, sampling and verification from
//! the command line.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on bad usage
//! or invalid input.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Format;

#[derive(Parser, Debug)]
#[command(name = "skotrim", version, about = "Skorokhod reflection, h-cuts and h-trimming of real trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-sided reflection on [0, h]: writes <prefix>.lambda, .c0 and .ch.
    Reflect(CutArgs),
    /// The h-cut: writes <prefix>.cut and <prefix>.events.json.
    Cut(CutArgs),
    /// h-trimming of a tree given as JSON or as a contour path CSV.
    Trim(TrimArgs),
    /// Random samplers.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Verification reports.
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct CutArgs {
    #[arg(long)]
    h: f64,
    /// Input path, CSV with header `t,value`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_prefix: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also write a long-format `series,t,value` CSV of the overlaid paths.
    #[arg(long, value_name = "FILE")]
    emit_plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct TrimArgs {
    #[arg(long)]
    h: f64,
    /// A tree (`.json`) or a contour path (`.csv`).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Law {
    FixedLength,
    ExcursionMeasure,
}

#[derive(Subcommand, Debug)]
enum Simulate {
    /// A positive random-walk excursion of height at least h.
    #[command(allow_negative_numbers = true)]
    Excursion {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        h: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "fixed-length")]
        law: Law,
        /// Unit steps instead of Donsker scaling.
        #[arg(long)]
        lattice: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// A simple random walk of n steps.
    #[command(allow_negative_numbers = true)]
    Walk {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        lattice: bool,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// A binary tree with exponential branches of mean h/2.
    #[command(allow_negative_numbers = true)]
    BinaryTree {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Cap on the number of branches.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// Also write the graft sequence as JSON.
        #[arg(long, value_name = "FILE")]
        grafts: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Trimming, cut and graft trees of an excursion agree.
    #[command(allow_negative_numbers = true)]
    Main1 {
        #[arg(long)]
        h: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_name = "FILE")]
        emit_plot_data: Option<PathBuf>,
    },
    /// Graft statistics of conditioned excursions against the binary tree.
    #[command(allow_negative_numbers = true)]
    Pn {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        replicates: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Walk steps per excursion.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, value_enum, default_value = "fixed-length")]
        law: Law,
    },
    /// Unmarked-trimming probability of a Poisson-marked walk tree.
    #[command(allow_negative_numbers = true)]
    Teo1 {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        t: f64,
        /// Steps of the driving walk (ignored with --in).
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        markings: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Driving path as CSV instead of a sampled walk.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
}

/// What a successful run found.
pub enum Outcome {
    Done,
    VerificationFailed,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SKOTRIM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow::anyhow!("SKOTRIM_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    match cli.command {
        Command::Reflect(a) => commands::reflect(&a),
        Command::Cut(a) => commands::cut(&a),
        Command::Trim(a) => commands::trim(&a),
        Command::Simulate(s) => commands::simulate(s),
        Command::Verify(v) => commands::verify(v),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // deep trees and long contours are handled iteratively, but JSON
    // parsing of deeply nested input still wants a large stack
    let worker = std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(move || run(cli))
        .expect("spawning the worker thread");
    match worker.join() {
        Ok(Ok(Outcome::Done)) => ExitCode::SUCCESS,
        Ok(Ok(Outcome::VerificationFailed)) => ExitCode::from(1),
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
