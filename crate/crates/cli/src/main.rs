//! Command-line front end for the coprime-mmse experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coprime_mmse::experiments::{
    run_cdf_experiment, run_nmse_vs_q, run_oracle_check, run_rmse_vs_q, write_cdf_csv, write_nmse_csv,
    write_oracle_csv, write_rmse_csv, write_spectrum_csv, Experiment, ExperimentConfig,
};
use coprime_mmse::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "coprime-mmse", version, about = "Coprime-array DoA experiments with MMSE autocorrelation combining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical CDF of the NMSE in estimating Z.
    Cdf(Common),
    /// Mean NMSE versus sample support.
    NmseVsQ(Common),
    /// DoA RMSE (degrees) versus sample support.
    RmseVsQ(Common),
    /// Closed-form MSE against Monte Carlo; exits 2 if any check fails.
    OracleCheck(Common),
    /// MUSIC pseudospectrum of a single trial.
    Spectrum(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count (overrides the config; Monte-Carlo trials for oracle-check).
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, oracle: bool) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            if oracle {
                cfg.oracle_trials = trials;
            } else {
                cfg.trials = trials;
            }
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_output(cfg: &ExperimentConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(command: Command) -> Result<bool, Error> {
    let oracle = matches!(command, Command::OracleCheck(_));
    let (Command::Cdf(args)
    | Command::NmseVsQ(args)
    | Command::RmseVsQ(args)
    | Command::OracleCheck(args)
    | Command::Spectrum(args)) = &command;
    let cfg = args.load(oracle)?;
    let mut passed = true;
    match command {
        Command::Cdf(_) => {
            let res = run_cdf_experiment(&cfg)?;
            let mut out = open_output(&cfg)?;
            write_cdf_csv(&mut out, &cfg, &res)?;
            out.flush()?;
        }
        Command::NmseVsQ(_) => {
            let res = run_nmse_vs_q(&cfg)?;
            let mut out = open_output(&cfg)?;
            write_nmse_csv(&mut out, &cfg, &res)?;
            out.flush()?;
        }
        Command::RmseVsQ(_) => {
            let res = run_rmse_vs_q(&cfg)?;
            let mut out = open_output(&cfg)?;
            write_rmse_csv(&mut out, &cfg, &res)?;
            out.flush()?;
        }
        Command::OracleCheck(_) => {
            let res = run_oracle_check(&cfg)?;
            let mut out = open_output(&cfg)?;
            write_oracle_csv(&mut out, &cfg, &res)?;
            out.flush()?;
            passed = res.all_pass();
        }
        Command::Spectrum(_) => {
            let exp = Experiment::new(cfg.clone())?;
            let (scene, kind, music) = exp.spectrum()?;
            let mut out = open_output(&cfg)?;
            write_spectrum_csv(&mut out, &cfg, &scene, kind, &music)?;
            out.flush()?;
        }
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("coprime-mmse: one or more oracle checks failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(e) => {
            eprintln!("coprime-mmse: {e}");
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_RUNTIME })
        }
    }
}
