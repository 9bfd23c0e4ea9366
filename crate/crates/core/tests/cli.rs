//! End-to-end tests of the command-line interface: subcommand behavior,
//! exit codes, file formats, and flag precedence.

use std::path::Path;
use std::process::{Command, Output};

fn leaksim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leaksim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_tiny_config(path: &Path, n: usize) {
    std::fs::write(
        path,
        format!(
            "seed = 5\nn = {n}\nk = 6\nparagraph_length = 8\nbootstrap_b = 100\n\n[lambda_path]\ncount = 40\nmin_ratio = 0.001\n"
        ),
    )
    .unwrap();
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

#[test]
fn generate_writes_dataset_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    write_tiny_config(&config, 5);
    let out = dir.path().join("data.jsonl");
    let result = leaksim(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(dir.path().join("data.jsonl.meta.json").exists());

    // Same config and seed: byte-identical output.
    let out2 = dir.path().join("data2.jsonl");
    let result = leaksim(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(&out2).unwrap()
    );
}

#[test]
fn cli_flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    write_tiny_config(&config, 500);
    let out = dir.path().join("data.jsonl");
    let result = leaksim(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--n",
        "7",
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 7);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["paragraphs"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "n = 0\n").unwrap();
    let out = dir.path().join("data.jsonl");
    let result = leaksim(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn estimate_rejects_missing_and_corrupt_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    let result = leaksim(&[
        "estimate",
        dir.path().join("absent.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));

    let corrupt = dir.path().join("corrupt.jsonl");
    std::fs::write(&corrupt, "not json\n").unwrap();
    let result = leaksim(&[
        "estimate",
        corrupt.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn validate_reports_pass_and_fail() {
    let result = leaksim(&["validate"]);
    assert!(result.status.success());
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(stdout.contains("calibration_oracle_omitted_u_bias"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "[topic_mixture]\nu_topic = 0.5\nt_topic = 0.6\ngeneral = 0.2\n",
    )
    .unwrap();
    let result = leaksim(&["validate", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("FAIL topic_mixture_sums_to_one"));

    let config = dir.path().join("bad_sigma.toml");
    std::fs::write(&config, "[dgp]\noutcome_sigma = -1.0\n").unwrap();
    let result = leaksim(&["validate", "--config", config.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("FAIL outcome_sigma_non_negative"));
}

#[test]
fn run_produces_the_full_report_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    write_tiny_config(&config, 60);
    let out_dir = dir.path().join("out");
    let result = leaksim(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("tau_true = 5.0"));

    // estimates.csv: a digest comment, a header, six data rows.
    let estimates = std::fs::read_to_string(out_dir.join("estimates.csv")).unwrap();
    assert!(estimates.starts_with("# config_digest="));
    let rows = data_lines(&estimates);
    assert_eq!(rows[0], "label,value,ci_low,ci_high");
    assert_eq!(rows.len() - 1, 6);
    assert!(rows[1].starts_with("tau1_oracle_u,"));

    // propensities.csv: three propensity columns, one row per unit.
    let propensities = std::fs::read_to_string(out_dir.join("propensities.csv")).unwrap();
    let rows = data_lines(&propensities);
    assert_eq!(rows[0], "pi_true,pi_no_distill,pi_perfect");
    assert_eq!(rows.len() - 1, 60);
    assert!(rows[1].split(',').count() == 3);

    // leakage.csv: both granularities; the paragraph column mean sits near
    // the topic-mixture expectation.
    let leakage = std::fs::read_to_string(out_dir.join("leakage.csv")).unwrap();
    let rows = data_lines(&leakage);
    assert_eq!(rows[0], "leakage_token,leakage_paragraph");
    let paragraph_mean: f64 = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum::<f64>()
        / 60.0;
    assert!(
        (paragraph_mean - 0.2).abs() < 0.08,
        "paragraph leakage mean {paragraph_mean}"
    );

    // estimates.json carries the digest and seed for traceability.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("estimates.json")).unwrap())
            .unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["estimates"].as_array().unwrap().len(), 6);
    assert!(report["config_digest"].as_str().unwrap().len() == 64);

    // The dataset sidecar ties the run to its configuration.
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("dataset.jsonl.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["config_digest"], report["config_digest"]);

    // Re-estimating from the written dataset reproduces estimates.csv
    // byte for byte.
    let out2 = dir.path().join("out2");
    let result = leaksim(&[
        "estimate",
        out_dir.join("dataset.jsonl").to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(
        std::fs::read(out_dir.join("estimates.csv")).unwrap(),
        std::fs::read(out2.join("estimates.csv")).unwrap()
    );
}
