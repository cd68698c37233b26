//! `qgep`: batch runner for sequential quaternion-gate GEP experiments.

mod config;
mod experiment;
mod problem;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qgep_core::operators::{write_banded, write_vector};
use qgep_core::{Observable, Sense};

use config::{ConfigError, ExperimentConfig, ProblemSource};
use experiment::run_experiment;
use problem::build_problem;

#[derive(Parser)]
#[command(name = "qgep", version, about = "Sequential quaternion-gate solver for generalized eigenproblems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    config: PathBuf,
    /// Override a config key, e.g. `--set trials=5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of an experiment and write CSV results.
    Run(ConfigArgs),
    /// Write the qubit-sized pencil in the banded text format.
    ExportPencil {
        #[command(flatten)]
        args: ConfigArgs,
        /// Target directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the pencil densely and print its extremal eigenvalues.
    SolveClassical(ConfigArgs),
}

fn load(args: &ConfigArgs) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(&args.config, &args.overrides)
}

fn run(args: ConfigArgs) -> anyhow::Result<()> {
    let cfg = load(&args)?;
    let report = run_experiment(&cfg)?;
    println!(
        "{} trial(s), {} failed; results in {}",
        report.trials,
        report.failed,
        cfg.output_dir.display()
    );
    if let Some(e) = report.best_relative_error {
        println!("best relative error {e:e}");
    }
    Ok(())
}

fn export_pencil(args: ConfigArgs, out: Option<PathBuf>) -> anyhow::Result<()> {
    let cfg = load(&args)?;
    let built = build_problem(&cfg)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let create = |name: &str| -> anyhow::Result<BufWriter<File>> {
        let path = dir.join(name);
        println!("{}", path.display());
        Ok(BufWriter::new(
            File::create(&path).with_context(|| format!("cannot write {}", path.display()))?,
        ))
    };
    match built.problem.a() {
        Observable::Operator(a) => write_banded(a, create("A.txt")?)?,
        Observable::Projector(p) => write_vector(p.state().amplitudes(), create("F.txt")?)?,
    }
    let b_name = if built.sle.is_some() { "K.txt" } else { "B.txt" };
    write_banded(built.problem.b(), create(b_name)?)?;
    Ok(())
}

fn solve_classical(args: ConfigArgs) -> anyhow::Result<()> {
    let cfg = load(&args)?;
    let built = build_problem(&cfg)?;
    let classical = built
        .classical
        .as_ref()
        .context("pencil too large for the dense solver")?;
    let sense = built.problem.sense();
    println!("dim = {}", built.problem.dim());
    println!("sense = {sense}");
    if let Some(r) = built.padding {
        println!("padding = {r}");
    }
    println!("lambda_min = {}", classical.min().value);
    println!("lambda_max = {}", classical.max().value);
    let target = classical.extremal(sense).value;
    println!("target = {target}");
    if cfg.source() == ProblemSource::Beam && sense == Sense::Min {
        println!("frequency_hz = {}", target.sqrt() / (2.0 * std::f64::consts::PI));
    }
    Ok(())
}

/// 2 for invalid input, 3 for numerical failures, 1 for anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<qgep_core::Error>() {
            return match e {
                qgep_core::Error::Io(_) => 1,
                e if e.is_numerical() => 3,
                _ => 2,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ExportPencil { args, out } => export_pencil(args, out),
        Command::SolveClassical(args) => solve_classical(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
