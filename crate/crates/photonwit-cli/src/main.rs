use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use photonwit_cli::config::{ExperimentConfig, Overrides};
use photonwit_cli::{certify, extract, sweep, verdict, CliError};

/// Simulate and certify single-photon entanglement witnessed by local
/// homodyne measurements.
#[derive(Parser)]
#[command(name = "photonwit", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration flags shared by the simulating subcommands. Every flag
/// overrides the corresponding config-file field.
#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Heralded single-photon probability of the source.
    #[arg(long)]
    p1: Option<f64>,
    /// Two-photon contamination probability of the source.
    #[arg(long)]
    p2: Option<f64>,
    /// How grid transmissions split over the arms: sym, asym, or explicit.
    #[arg(long)]
    loss_mode: Option<String>,
    /// Arm A efficiency (explicit loss mode).
    #[arg(long)]
    eta_a: Option<f64>,
    /// Arm B efficiency (explicit loss mode).
    #[arg(long)]
    eta_b: Option<f64>,
    /// Comma-separated overall transmissions η_AB.
    #[arg(long, value_delimiter = ',')]
    eta_grid: Option<Vec<f64>>,
    /// Single overall transmission; shorthand for a one-point grid.
    #[arg(long, conflicts_with = "eta_grid")]
    eta_ab: Option<f64>,
    /// Monte Carlo samples per CHSH setting pair.
    #[arg(long)]
    samples_per_setting: Option<usize>,
    /// Base RNG seed; grid points derive their own streams from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated bound methods for sweep columns.
    #[arg(long, value_delimiter = ',')]
    bounds: Option<Vec<String>>,
    /// Statistical penalty k: witnessed means S − k·SE clears the bound.
    #[arg(long)]
    k_sigma: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = ExperimentConfig::load(self.config.as_ref())?;
        config.apply(&Overrides {
            p1: self.p1,
            p2: self.p2,
            loss_mode: self.loss_mode.clone(),
            eta_a: self.eta_a,
            eta_b: self.eta_b,
            eta_grid: self.eta_ab.map(|v| vec![v]).or_else(|| self.eta_grid.clone()),
            samples_per_setting: self.samples_per_setting,
            seed: self.seed,
            bounds: self.bounds.clone(),
            k_sigma: self.k_sigma,
            output: self.output.clone(),
        })?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every grid point and write a CSV of witness values,
    /// bounds, and verdicts.
    Sweep(ConfigArgs),
    /// Simulate one point and write a full JSON verdict report.
    Verdict(ConfigArgs),
    /// Audit the closed-form dual certificate over a p_joint grid.
    Certify {
        /// Comma-separated p_joint values in (0, 0.5].
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Corrupt λ by this amount first; the audit must then fail.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate local photon statistics from a samples CSV.
    Extract {
        /// Samples CSV (as written by `sample`); stdin when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Tracked photon-number categories (3 = {0, 1, ≥2}).
        #[arg(long, default_value_t = 3)]
        n_levels: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate one point and emit its raw quadrature samples as CSV.
    Sample(ConfigArgs),
}

/// Opens the requested sink, buffered.
fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(value: &T, path: Option<&PathBuf>) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::CheckFailed(format!("serializing report: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let rows = sweep::run_sweep(&config)?;
            let out = sink(config.output.as_ref())?;
            sweep::write_sweep_csv(&rows, &config.bounds, out)?;
            Ok(0)
        }
        Command::Verdict(args) => {
            let config = args.resolve()?;
            let (report, exit) = verdict::run_verdict(&config)?;
            write_json(&report, config.output.as_ref())?;
            Ok(exit.code())
        }
        Command::Certify { grid, perturb, output } => {
            let grid = grid.unwrap_or_else(certify::default_grid);
            let report = certify::run_certify(&grid, perturb)?;
            write_json(&report, output.as_ref())?;
            Ok(if report.all_passed { 0 } else { 2 })
        }
        Command::Extract { input, n_levels, output } => {
            let report = match input {
                Some(p) => extract::run_extract(File::open(&p)?, n_levels)?,
                None => extract::run_extract(std::io::stdin().lock(), n_levels)?,
            };
            write_json(&report, output.as_ref())?;
            Ok(0)
        }
        Command::Sample(args) => {
            let config = args.resolve()?;
            let out = sink(config.output.as_ref())?;
            extract::run_sample(&config, out)?;
            Ok(0)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Help and version go to stdout, diagnostics to stderr.
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
