//! Command-line entry point: `generate`, `estimate`, `run`, and `validate`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use leaksim::config::{Preset, SimConfig};
use leaksim::harness::{
    cmd_estimate, cmd_generate, cmd_run, cmd_validate, exit_code_for, print_summary,
    resolve_estimation_config, with_thread_pool,
};
use leaksim::Result;

#[derive(Parser)]
#[command(
    name = "leaksim",
    version,
    about = "Treatment-leakage simulation and estimation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration file; missing keys fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scale preset: `paper` (n=10000, B=1000) or `desk` (n=2000, B=300).
    #[arg(long)]
    preset: Option<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of units override.
    #[arg(long)]
    n: Option<usize>,
    /// Paragraphs per document override.
    #[arg(long)]
    k: Option<usize>,
    /// Use the weight-normalized (Hajek) IPW form.
    #[arg(long)]
    hajek: bool,
    /// Truncate fitted propensities to [eps, 1-eps] before weighting.
    #[arg(long, value_name = "EPS")]
    clip: Option<f64>,
    /// Worker pool size (results are identical for any value).
    #[arg(long)]
    threads: Option<usize>,
}

impl ConfigArgs {
    /// Precedence: built-in defaults, then the config file, then the
    /// preset, then individual flags.
    fn resolve(&self) -> Result<SimConfig> {
        let mut config = match &self.config {
            Some(path) => SimConfig::from_path(path)?,
            None => SimConfig::default(),
        };
        if let Some(preset) = &self.preset {
            config.apply_preset(preset.parse::<Preset>()?);
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.n {
            config.n = n;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if self.hajek {
            config.flags.hajek = true;
        }
        if let Some(eps) = self.clip {
            config.flags.clip_epsilon = Some(eps);
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (JSON-lines plus sidecar metadata).
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output dataset path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the six-estimate analysis over an existing dataset.
    Estimate {
        /// Dataset file produced by `generate`.
        dataset: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory for estimates.csv/json, propensities.csv, and
        /// leakage.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate and estimate in one invocation.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the configuration invariants and the calibration oracle.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate { config, out } => {
            let resolved = config.resolve()?;
            resolved.validate()?;
            with_thread_pool(config.threads, || cmd_generate(&resolved, &out))?;
            eprintln!("wrote {}", out.display());
            Ok(true)
        }
        Command::Estimate {
            dataset,
            config,
            out,
        } => {
            let explicit = if config.config.is_some()
                || config.preset.is_some()
                || config.seed.is_some()
                || config.hajek
                || config.clip.is_some()
            {
                Some(config.resolve()?)
            } else {
                None
            };
            let resolved = resolve_estimation_config(&dataset, explicit)?;
            let report = with_thread_pool(config.threads, || {
                cmd_estimate(&dataset, &out, &resolved)
            })?;
            print_summary(&report);
            Ok(true)
        }
        Command::Run { config, out } => {
            let resolved = config.resolve()?;
            resolved.validate()?;
            with_thread_pool(config.threads, || cmd_run(&resolved, &out))?;
            Ok(true)
        }
        Command::Validate { config } => {
            let resolved = config.resolve()?;
            let checks = cmd_validate(&resolved);
            let mut all_passed = true;
            for check in &checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                all_passed &= check.passed;
                println!("{status} {}: {}", check.name, check.message);
            }
            Ok(all_passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // Validation findings are reported, not crashed on.
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            ExitCode::from(u8::try_from(code).unwrap_or(1))
        }
    }
}
