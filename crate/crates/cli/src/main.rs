use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rdsconc::harness::{
    asclt_report, run_bounds, run_corr_dim, run_lyap, run_selftest, run_simulate, run_tail, survey_report,
    ExperimentConfig, Format, Report, DEFAULT_SELFTEST_SEED,
};
use rdsconc::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "rdsconc", version, about = "Concentration experiments for random dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the grid resolution for suprema over starting points.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Overrides the trial count of the selected experiment.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Write one trajectory, or two coupled ones.
    Simulate,
    /// Estimate lambda_n along an n ladder.
    Lambda,
    /// Tail frequencies against the matching concentration bound.
    Tail,
    /// Correlation sums and the fitted dimension.
    CorrDim,
    /// Finite-time Lyapunov rates.
    Lyap,
    /// Distance of log-averaged sums to the fitted normal law.
    Asclt,
    /// Evaluate bounds from explicit inputs, without simulation.
    Bounds,
    /// Run the built-in property and dominance suite.
    Selftest,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

enum Failure {
    Error(Error),
    Selftest,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn load(path: Option<&Path>) -> Result<(ExperimentConfig, serde_json::Value), Error> {
    let path = path.ok_or_else(|| Error::Usage("this subcommand needs --config".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let echo = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    Ok((ExperimentConfig::from_json(&text)?, echo))
}

fn apply_overrides(cli: &Cli, cfg: &mut ExperimentConfig) {
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(g) = cli.grid {
        cfg.grid = Some(g);
    }
    if let Some(t) = cli.trials {
        match cli.command {
            Command::Tail => cfg.tail.iter_mut().for_each(|c| c.trials = t),
            Command::Lambda => cfg.lambda.iter_mut().for_each(|c| c.trials = t),
            Command::Lyap => cfg.lyap.iter_mut().for_each(|c| c.trials = t),
            Command::Asclt => cfg.asclt.iter_mut().for_each(|c| c.sigma_trials = t),
            _ => {}
        }
    }
}

fn emit(cli: &Cli, report: &Report, echo: Option<&serde_json::Value>) -> Result<(), Error> {
    let format = cli.format.into();
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(&mut w, format, echo)?;
            w.flush()?;
        }
        None => report.write(io::stdout().lock(), format, echo)?,
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(e.to_string()))?;
    }

    if cli.command == Command::Selftest {
        let outcome = run_selftest(cli.seed.unwrap_or(DEFAULT_SELFTEST_SEED), cli.trials)?;
        emit(cli, &outcome.report, None)?;
        return if outcome.passed { Ok(()) } else { Err(Failure::Selftest) };
    }

    let (mut cfg, echo) = load(cli.config.as_deref())?;
    apply_overrides(cli, &mut cfg);
    let report = match cli.command {
        Command::Simulate => run_simulate(&cfg)?,
        Command::Lambda => survey_report(&cfg)?,
        Command::Tail => {
            let r = run_tail(&cfg)?;
            if !r.meta.flags.is_empty() {
                eprintln!("flags: {}", r.meta.flags.join(", "));
            }
            r.to_report()
        }
        Command::CorrDim => run_corr_dim(&cfg)?,
        Command::Lyap => run_lyap(&cfg)?,
        Command::Asclt => asclt_report(&cfg)?,
        Command::Bounds => run_bounds(&cfg)?,
        Command::Selftest => unreachable!("handled above"),
    };
    emit(cli, &report, Some(&echo))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Selftest) => {
            eprintln!("selftest: at least one check failed");
            ExitCode::from(EXIT_SELFTEST)
        }
        Err(Failure::Error(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::Config(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}
