//! `zeno-spectro`: run the Zeno noise-sensing pipeline from a JSON config.
//!
//! Every subcommand reads the config (or the built-in defaults), applies the
//! command-line overrides and works inside `--out`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zeno_spectro::experiment::{self, Config};
use zeno_spectro::Error;

#[derive(Parser, Debug)]
#[command(
    name = "zeno-spectro",
    version,
    about = "Noise spectroscopy with stochastic quantum Zeno measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config; a previous manifest.json is accepted too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Repetitions per τ.
    #[arg(long, global = true)]
    q: Option<usize>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Relative eigenvalue truncation threshold.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Clip negative reconstructed spectrum values to zero.
    #[arg(long, global = true)]
    clamp_negative: bool,

    /// Shift the filter bank by this many μs before reconstructing.
    #[arg(long, global = true)]
    tau_offset_us: Option<f64>,

    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample survival probabilities: survivals.csv, manifest.json.
    Simulate,
    /// Estimate χ(τ) from survivals.csv: chi.csv.
    Chi,
    /// Reconstruct the spectrum from chi.csv: spectrum.csv, eigen.csv, summary.json.
    Reconstruct,
    /// Score a reconstructed spectrum against the configured noise model.
    Fidelity {
        /// spectrum.csv to score; defaults to the one in --out.
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Analytic χ(τ), filter bank and overlap matrix without simulation.
    Theory,
    /// simulate, chi and reconstruct in one go.
    Run,
}

impl Common {
    fn config(&self) -> zeno_spectro::Result<Config> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(q) = self.q {
            c.q_repetitions = q;
        }
        if let Some(seed) = self.seed {
            c.master_seed = seed;
        }
        if let Some(eps) = self.epsilon {
            c.reconstruction.epsilon = eps;
        }
        if self.clamp_negative {
            c.reconstruction.clamp_negative = true;
        }
        if let Some(offset) = self.tau_offset_us {
            c.reconstruction.tau_offset_us = offset;
        }
        Ok(c)
    }
}

fn warn_weak_zeno(violations: usize, total: usize) {
    if violations > 0 {
        eprintln!("warning: {violations} of {total} realizations left the weak-Zeno regime (some |α_j| > 1)");
    }
}

fn print_fidelities(summary: &experiment::Summary) {
    println!("kept {} of {} modes", summary.kept, summary.k_taus);
    if let Some(f) = summary.fidelity_chi {
        println!("fidelity_chi {f:.6}");
    }
    if let Some(f) = summary.fidelity_spectrum {
        println!("fidelity_spectrum {f:.6}");
    }
}

fn run(cli: &Cli) -> zeno_spectro::Result<()> {
    let config = cli.common.config()?;
    let out = &cli.common.out;
    let workers = cli.common.workers;
    match &cli.command {
        Command::Simulate => {
            let report = experiment::stage_simulate(&config, out, workers)?;
            warn_weak_zeno(report.weak_zeno_violations, report.rows.len());
            println!("wrote {} survival rows to {}", report.rows.len(), out.display());
        }
        Command::Chi => {
            let rows = experiment::stage_chi(&config, out, workers)?;
            println!("wrote {} χ rows to {}", rows.len(), out.display());
        }
        Command::Reconstruct => {
            let summary = experiment::stage_reconstruct(&config, out)?;
            print_fidelities(&summary);
        }
        Command::Fidelity { spectrum } => {
            let path = spectrum.clone().unwrap_or_else(|| out.join(experiment::io::SPECTRUM));
            let f = experiment::stage_fidelity(&config, &path)?;
            println!("{f:.6}");
        }
        Command::Theory => {
            let rows = experiment::stage_theory(&config, out, workers)?;
            println!("wrote χ_theory for {} τ values to {}", rows.len(), out.display());
        }
        Command::Run => {
            let (report, summary) = experiment::stage_run(&config, out, workers)?;
            warn_weak_zeno(report.weak_zeno_violations, report.rows.len());
            print_fidelities(&summary);
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    if err.is_config_error() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
