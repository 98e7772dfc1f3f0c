use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcert::experiments::{
    self, Algorithm, Alternative, BoundsConfig, CertifyRunConfig, DivergenceConfig, EnsembleKind, Format,
    GenSigmaConfig, Report, SpectrumFamily, SweepConfig, VerifyConfig,
};
use qcert::Error;

#[derive(Parser)]
#[command(name = "qcert", version, about = "Simulate quantum state certification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Print the spectrum of a named family.
    GenSigma {
        #[arg(long, default_value = "mm")]
        family: SpectrumFamily,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Run certification trials against a chosen alternative.
    Certify {
        #[arg(long, default_value = "mm")]
        family: SpectrumFamily,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// null, hs-far, offdiag, tail, paninski or corner.
        #[arg(long, default_value = "null")]
        alt: Alternative,
        /// basic or full.
        #[arg(long, default_value = "full")]
        algorithm: Algorithm,
        /// Copy budget per trial.
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Minimal copies per dimension and the fitted log-log slope.
    Sweep {
        #[arg(long, default_value = "mm")]
        family: SpectrumFamily,
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<usize>,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "basic")]
        algorithm: Algorithm,
        /// Success rate that defines the minimal copy count.
        #[arg(long, default_value_t = 0.9)]
        target: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Run the numerical check battery; exits 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per certification check.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Monte Carlo samples per moment check.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        /// Cases per randomized property check.
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long)]
        skip_certify: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Predicted copy complexities for a spectrum.
    Bounds {
        #[arg(long, default_value = "mm")]
        family: SpectrumFamily,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        eps: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Exact transcript divergences for random basis schedules.
    Divergence {
        #[arg(long, default_value = "geometric:0.2")]
        family: SpectrumFamily,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// corner, paninski or offdiag.
        #[arg(long, default_value = "corner")]
        ensemble: EnsembleKind,
        /// Number of schedules.
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        copies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mixture draws for continuous ensembles.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[command(flatten)]
        output: Output,
    },
}

fn run(command: Command) -> qcert::Result<(Report, Output)> {
    Ok(match command {
        Command::GenSigma { family, d, output } => {
            (experiments::cmd_gen_sigma(&GenSigmaConfig { family, d })?, output)
        }
        Command::Certify { family, d, eps, delta, trials, seed, alt, algorithm, budget, output } => {
            let mut cfg = CertifyRunConfig::new(family, d, eps, delta, alt, algorithm);
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.threads = output.threads;
            cfg.budget = budget.unwrap_or(u64::MAX);
            (experiments::cmd_certify(&cfg)?, output)
        }
        Command::Sweep { family, d, eps, delta, trials, seed, algorithm, target, output } => {
            let mut cfg = SweepConfig::basic(d, eps, delta);
            cfg.family = family;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.threads = output.threads;
            cfg.algorithm = algorithm;
            cfg.target = target;
            (experiments::cmd_sweep(&cfg)?, output)
        }
        Command::Verify { seed, trials, samples, cases, skip_certify, output } => {
            let cfg = VerifyConfig { seed, samples, cases, trials, skip_certify };
            (experiments::with_threads(output.threads, || experiments::cmd_verify(&cfg))??, output)
        }
        Command::Bounds { family, d, eps, output } => (experiments::cmd_bounds(&BoundsConfig { family, d, eps })?, output),
        Command::Divergence { family, d, eps, ensemble, trials, copies, seed, draws, output } => {
            let cfg = DivergenceConfig { family, d, eps, ensemble, schedules: trials, copies, seed, draws };
            (experiments::with_threads(output.threads, || experiments::cmd_divergence(&cfg))??, output)
        }
    })
}

fn write(report: &Report, output: &Output) -> qcert::Result<()> {
    match &output.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(output.format, &mut w)?;
            w.flush()?;
        }
        None => report.write(output.format, io::stdout().lock())?,
    }
    Ok(())
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_)
            | Error::UnsupportedRange(_)
            | Error::Infeasible { .. }
            | Error::EnsembleUnavailable(_)
            | Error::DimensionMismatch { .. }
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = run(cli.command).and_then(|(report, output)| write(&report, &output).map(|_| report));
    match result {
        Ok(report) if report.passed == Some(false) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
