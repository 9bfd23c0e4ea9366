//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, with a field-level message.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A next-token distribution collapsed to zero total mass.
    #[error("degenerate distribution: every vocabulary token has probability zero")]
    DegenerateDistribution,

    /// Ratio over an empty document is undefined.
    #[error("leakage fraction is undefined for an empty document")]
    EmptyDocument,

    /// The treatment vector contains a single class.
    #[error("degenerate labels: treatment vector contains a single class")]
    DegenerateLabels,

    /// The coordinate-descent solver hit the sweep limit. Carries the last
    /// iterate so callers can inspect how far the fit got.
    #[error("solver did not converge after {sweeps} sweeps (max coefficient change {max_delta:e})")]
    NotConverged {
        sweeps: usize,
        max_delta: f64,
        last_weights: Vec<f64>,
        last_intercept: f64,
    },

    /// Least-squares design matrix is rank deficient.
    #[error("rank-deficient design: column `{column}` is collinear with earlier columns")]
    RankDeficient { column: String },

    /// Feature width does not match the fitted model.
    #[error("feature width mismatch: expected {expected} columns, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    /// A propensity of exactly 0 or 1 reached the IPW weight.
    #[error("propensity at unit {index} is exactly {value}; inverse weight undefined")]
    PropensityOutOfRange { index: usize, value: f64 },

    /// Too many bootstrap resamples failed.
    #[error("estimator failed in {failed} of {total} bootstrap resamples (>1% allowed)")]
    BootstrapFailures { failed: usize, total: usize },

    /// Invalid argument to a library operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Dataset file is missing a field or otherwise corrupt.
    #[error("corrupt dataset: {0}")]
    Dataset(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}
