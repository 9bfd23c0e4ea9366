//! Simulation and estimation toolkit for treatment leakage in text-based
//! causal inference.
//!
//! The library generates synthetic observational datasets in which an
//! unobserved binary confounder is proxied by a generated document, injects
//! controlled treatment leakage into the text, applies oracle distillation
//! regimes, and measures how leakage and distillation change inverse
//! propensity weighted estimates of the average treatment effect.
//!
//! Numeric routines are generic over the scalar type via [`scalar::Scalar`]
//! (implemented for `f32` and `f64`); the end-to-end pipeline and all file
//! formats use the concrete [`Real`] alias.

pub mod config;
pub mod dataset;
pub mod dgp;
pub mod diagnostics;
pub mod distill;
pub mod error;
pub mod estimators;
pub mod features;
pub mod harness;
pub mod linalg;
pub mod propensity;
pub mod rng;
pub mod scalar;
pub mod textgen;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the default pipeline and all serialized outputs.
pub type Real = f64;

/// Structural-model coefficients at the default scalar type.
pub type Coefficients = dgp::DgpCoefficients<Real>;
/// One observational record at the default scalar type.
pub type Unit = dgp::Unit<Real>;
/// Estimation design matrix at the default scalar type.
pub type FeatureMatrix = features::FeatureMatrix<Real>;
/// Fitted sparse logistic propensity model at the default scalar type.
pub type PropensityModel = propensity::PropensityModel<Real>;
