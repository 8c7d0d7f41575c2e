use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slcarma_cli::commands::{self, ReproduceReport};
use slcarma_cli::{exit, ExperimentConfig, Failure, Overrides, Result};

#[derive(Parser)]
#[command(name = "slcarma", version, about = "CARMA processes driven by periodic compound-Poisson noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the subordinator and the sampled CARMA trajectory.
    Simulate(Common),
    /// Closed-form periodic mean and autocovariance over one period.
    Moments(Common),
    /// Spectral coherence, autocorrelation and a verdict for one series.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// CSV series to analyze instead of simulating from the config.
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Run the bundled reference configuration end to end.
    Reproduce(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independently seeded paths.
    #[arg(long, default_value_t = 1)]
    paths: u64,
    /// Analyze the raw series without removing its mean.
    #[arg(long)]
    no_detrend: bool,
    /// Replace the partition by a single subinterval with the same mass.
    #[arg(long)]
    stationary_control: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            no_detrend: self.no_detrend,
            stationary_control: self.stationary_control,
        }
    }

    fn config(&self, fallback_reference: bool) -> Result<ExperimentConfig> {
        let base = match (&self.config, fallback_reference) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, true) => ExperimentConfig::reference(),
            (None, false) => return Err(Failure::validation("--config", "required for this command")),
        };
        base.apply(&self.overrides())
    }
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn summarize(report: &ReproduceReport) {
    for v in &report.verdicts {
        println!(
            "path {} seed {}: {:?} period {:?} first line {:?}{}",
            v.index,
            v.seed,
            v.verdict.class,
            v.verdict.period,
            v.verdict.line_offsets.first(),
            if v.matches { "" } else { "  (mismatch)" }
        );
    }
    println!("{}/{} paths match {:?}", report.matched, report.paths, report.expected);
}

fn run(cli: Cli) -> Result<()> {
    slcarma_cli::init_threads()?;
    match cli.command {
        Command::Simulate(c) => report_files(&commands::simulate(&c.config(false)?, c.paths)?),
        Command::Moments(c) => report_files(&commands::moments(&c.config(false)?)?),
        Command::Diagnose { common, series } => {
            let (analysis, files) = match series {
                Some(path) => {
                    let base = match &common.config {
                        Some(_) => common.config(false)?,
                        None => ExperimentConfig::reference().apply(&common.overrides())?,
                    };
                    let out = common.out.clone().unwrap_or_else(|| base.output_dir.clone());
                    let y = commands::read_series(&path)?;
                    commands::diagnose_series(&y, &base.diagnostics, base.acf_max_lag, &out)?
                }
                None => commands::diagnose(&common.config(false)?)?,
            };
            report_files(&files);
            println!("{}", serde_json::to_string(&analysis.verdict).map_err(Failure::from)?);
        }
        Command::Reproduce(c) => {
            let cfg = c.config(true)?;
            let report = commands::reproduce(&cfg, c.paths, c.stationary_control)?;
            report_files(&report.files);
            summarize(&report);
            if !report.passed() {
                return Err(Failure::Verdict(format!(
                    "{} of {} paths match the expected {:?}",
                    report.matched, report.paths, report.expected
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
