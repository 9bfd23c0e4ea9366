//! Experiment orchestration behind the CLI subcommands: dataset generation,
//! the end-to-end six-estimate analysis, diagnostic exports, and
//! configuration validation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::config::{CheckReport, SimConfig};
use crate::dataset::{read_dataset, read_sidecar, write_dataset};
use crate::dgp::generate_units;
use crate::distill::{leakage_fraction, Granularity};
use crate::error::{Error, Result};
use crate::estimators::{ols_ate, run_six_estimates, EstimateReport, EstimationOutput};
use crate::textgen::{attach_documents, BigramLm, DocumentGenerator};
use crate::{Real, Unit};

/// Format a float with 17 significant digits, making CSV output
/// byte-reproducible.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Run a closure inside a rayon pool of the given size (or the default
/// pool). Results are independent of the pool size by construction; the
/// knob only trades latency for cores.
pub fn with_thread_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(f),
    }
}

/// Generate the full synthetic dataset for a configuration: numeric draws
/// first, then documents.
pub fn simulate_dataset(config: &SimConfig) -> Result<Vec<Unit>> {
    config.validate()?;
    let mut units = generate_units(config.n, &config.dgp, config.seed)?;
    let lm: BigramLm<Real> = BigramLm::builtin();
    let topics = config.topic_set();
    let generator = DocumentGenerator::new(
        &lm,
        &topics,
        config.topic_mixture,
        &config.topics.country_pool,
        config.k,
        config.paragraph_length,
    )?;
    attach_documents(&mut units, &generator, config.seed)?;
    Ok(units)
}

/// `generate` subcommand: write the dataset file and its sidecar.
pub fn cmd_generate(config: &SimConfig, out_path: &Path) -> Result<()> {
    let units = simulate_dataset(config)?;
    write_dataset(out_path, &units, config)?;
    Ok(())
}

/// Resolve the estimation config: an explicit config wins, then the dataset
/// sidecar, then built-in defaults.
pub fn resolve_estimation_config(
    dataset_path: &Path,
    explicit: Option<SimConfig>,
) -> Result<SimConfig> {
    if let Some(config) = explicit {
        return Ok(config);
    }
    if let Some(meta) = read_sidecar(dataset_path)? {
        return Ok(meta.config);
    }
    Ok(SimConfig::default())
}

/// `estimate` subcommand: run the six-estimate analysis over an existing
/// dataset and write the report files into `out_dir`.
pub fn cmd_estimate(
    dataset_path: &Path,
    out_dir: &Path,
    config: &SimConfig,
) -> Result<EstimateReport> {
    let units = read_dataset(dataset_path)?;
    std::fs::create_dir_all(out_dir)?;
    let output = run_six_estimates(&units, config)?;
    write_report_files(out_dir, &units, &output)?;
    Ok(output.report)
}

fn write_report_files(
    out_dir: &Path,
    units: &[Unit],
    output: &EstimationOutput,
) -> Result<()> {
    let digest = &output.report.config_digest;

    let mut w = BufWriter::new(File::create(out_dir.join("estimates.csv"))?);
    writeln!(w, "# config_digest={digest}")?;
    writeln!(w, "label,value,ci_low,ci_high")?;
    for e in &output.report.estimates {
        writeln!(
            w,
            "{},{},{},{}",
            e.label,
            fmt_g17(e.value),
            fmt_g17(e.ci_low),
            fmt_g17(e.ci_high)
        )?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(out_dir.join("estimates.json"))?);
    serde_json::to_writer_pretty(&mut w, &output.report)?;
    w.write_all(b"\n")?;
    w.flush()?;

    let mut w = BufWriter::new(File::create(out_dir.join("propensities.csv"))?);
    writeln!(w, "# config_digest={digest}")?;
    writeln!(w, "pi_true,pi_no_distill,pi_perfect")?;
    for i in 0..units.len() {
        writeln!(
            w,
            "{},{},{}",
            fmt_g17(output.pi_true[i]),
            fmt_g17(output.pi_no_distill[i]),
            fmt_g17(output.pi_perfect[i])
        )?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(out_dir.join("leakage.csv"))?);
    writeln!(w, "# config_digest={digest}")?;
    writeln!(w, "leakage_token,leakage_paragraph")?;
    for unit in units {
        let token: Real = leakage_fraction(&unit.document, Granularity::Token)?;
        let paragraph: Real = leakage_fraction(&unit.document, Granularity::Paragraph)?;
        writeln!(w, "{},{}", fmt_g17(token), fmt_g17(paragraph))?;
    }
    w.flush()?;
    Ok(())
}

/// `run` subcommand: generate, estimate, and print the summary table.
pub fn cmd_run(config: &SimConfig, out_dir: &Path) -> Result<EstimateReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let dataset_path = out_dir.join("dataset.jsonl");
    let units = simulate_dataset(config)?;
    write_dataset(&dataset_path, &units, config)?;
    let output = run_six_estimates(&units, config)?;
    write_report_files(out_dir, &units, &output)?;
    print_summary(&output.report);
    Ok(output.report)
}

/// Print the label / estimate / CI table plus the true effect.
pub fn print_summary(report: &EstimateReport) {
    println!("{:<22} {:>10} {:>10} {:>10}", "label", "estimate", "ci_low", "ci_high");
    for e in &report.estimates {
        println!(
            "{:<22} {:>10.4} {:>10.4} {:>10.4}",
            e.label.to_string(),
            e.value,
            e.ci_low,
            e.ci_high
        );
    }
    println!("tau_true = {:?}", report.true_tau);
    println!("config_digest = {}", report.config_digest);
}

/// Units used by the numeric-only calibration oracle inside `validate`.
const CALIBRATION_ORACLE_N: usize = 4_000;

/// `validate` subcommand: run every static config check plus the numeric
/// calibration oracle (OLS without the unobserved confounder must come out
/// negative, i.e. biased by at least the true effect). Returns the check
/// list; never panics on a bad config.
pub fn cmd_validate(config: &SimConfig) -> Vec<CheckReport> {
    let mut checks = config.checks();
    let statics_ok = checks.iter().all(|c| c.passed);
    if statics_ok {
        let oracle = match generate_units::<Real>(CALIBRATION_ORACLE_N, &config.dgp, config.seed)
            .and_then(|units| ols_ate(&units, false))
        {
            Ok(estimate) => {
                let biased_down = estimate < 0.0;
                CheckReport {
                    name: "calibration_oracle_omitted_u_bias".into(),
                    passed: biased_down,
                    message: format!(
                        "OLS of Y on (T, X) without U gives {estimate:.3} (needs < 0)"
                    ),
                }
            }
            Err(e) => CheckReport {
                name: "calibration_oracle_omitted_u_bias".into(),
                passed: false,
                message: format!("oracle run failed: {e}"),
            },
        };
        checks.push(oracle);
    } else {
        checks.push(CheckReport {
            name: "calibration_oracle_omitted_u_bias".into(),
            passed: false,
            message: "skipped: static checks failed".into(),
        });
    }
    checks
}

/// Exit code mapping: bad configuration or corrupt input is 2, I/O failure
/// is 3, anything else is 1.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_)
        | Error::Toml(_)
        | Error::Dataset(_)
        | Error::InvalidArgument(_)
        | Error::Json(_) => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}
