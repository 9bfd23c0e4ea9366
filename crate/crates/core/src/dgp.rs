//! Numeric data-generating process: observed confounders, the unobserved
//! binary confounder, treatment assignment, outcome, and true propensities.
//!
//! The structural model is linear and additive, so the average treatment
//! effect equals `outcome_tau` by construction. The unobserved confounder is
//! mapped to ±1 inside linear predictors so its weight is symmetric.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, DOMAIN_UNIT_NUMERIC, DOMAIN_UNIT_OUTCOME};
use crate::scalar::{sigmoid, Scalar};
use crate::textgen::Document;

/// Coefficients of the treatment and outcome equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    bound(deserialize = "F: serde::Deserialize<'de> + Scalar")
)]
pub struct DgpCoefficients<F> {
    pub treat_weights_x: [F; 3],
    pub treat_weight_u: F,
    pub treat_intercept: F,
    pub outcome_weights_x: [F; 3],
    pub outcome_weight_u: F,
    /// True average treatment effect.
    pub outcome_tau: F,
    pub outcome_intercept: F,
    /// Outcome noise standard deviation. Zero is accepted and makes the
    /// outcome deterministic, which the exact-recovery tests rely on.
    pub outcome_sigma: F,
}

/// Calibrated defaults. The confounder weights make an outcome model that
/// omits the unobserved confounder strongly biased downward, and the
/// treatment intercept plus outcome level put the unnormalized IPW
/// estimator in its extreme-weight regime once the text predicts treatment
/// almost perfectly.
impl<F: Scalar> Default for DgpCoefficients<F> {
    fn default() -> Self {
        let c = F::from_f64c;
        DgpCoefficients {
            treat_weights_x: [c(0.8), c(-0.5), c(0.3)],
            treat_weight_u: c(1.7),
            treat_intercept: c(-0.6),
            outcome_weights_x: [c(-1.0), c(1.0), c(-0.5)],
            outcome_weight_u: c(-5.0),
            outcome_tau: c(5.0),
            outcome_intercept: c(14.0),
            outcome_sigma: c(2.0),
        }
    }
}

impl<F: Scalar> DgpCoefficients<F> {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .treat_weights_x
            .iter()
            .chain(self.outcome_weights_x.iter())
            .chain([
                &self.treat_weight_u,
                &self.treat_intercept,
                &self.outcome_weight_u,
                &self.outcome_tau,
                &self.outcome_intercept,
                &self.outcome_sigma,
            ]);
        for v in all {
            if !v.is_finite() {
                return Err(Error::Config("dgp: coefficients must be finite".into()));
            }
        }
        if self.outcome_sigma < F::zero() {
            return Err(Error::Config(format!(
                "dgp.outcome_sigma: must be non-negative, got {}",
                self.outcome_sigma
            )));
        }
        Ok(())
    }
}

/// One observational record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unit<F> {
    pub id: u64,
    pub x: [F; 3],
    pub u: u8,
    pub t: u8,
    pub y: F,
    pub pi_true: F,
    #[serde(rename = "paragraphs", with = "doc_as_paragraphs")]
    pub document: Document,
}

/// Serialize the document as a bare paragraph array, which is the dataset
/// line schema.
mod doc_as_paragraphs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::textgen::{Document, Paragraph};

    pub fn serialize<S: Serializer>(doc: &Document, ser: S) -> Result<S::Ok, S::Error> {
        doc.paragraphs.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Document, D::Error> {
        Ok(Document {
            paragraphs: Vec::<Paragraph>::deserialize(de)?,
        })
    }
}

/// Map a binary confounder to its centered ±1 value.
pub fn centered<F: Scalar>(u: u8) -> F {
    if u == 1 {
        F::one()
    } else {
        -F::one()
    }
}

/// Three independent standard-normal covariate draws.
pub fn draw_confounders<F: Scalar, R: Rng + ?Sized>(rng: &mut R) -> [F; 3] {
    [
        F::standard_normal(rng),
        F::standard_normal(rng),
        F::standard_normal(rng),
    ]
}

/// Even coin toss for the unobserved confounder.
pub fn draw_unobserved<R: Rng + ?Sized>(rng: &mut R) -> u8 {
    if rng.gen::<f64>() < 0.5 {
        1
    } else {
        0
    }
}

/// True assignment probability
/// `sigmoid(treat_intercept + treat_weights_x . x + treat_weight_u * (2u-1))`.
pub fn true_propensity<F: Scalar>(x: &[F; 3], u: u8, c: &DgpCoefficients<F>) -> F {
    let mut eta = c.treat_intercept + c.treat_weight_u * centered(u);
    for (w, xi) in c.treat_weights_x.iter().zip(x.iter()) {
        eta = eta + *w * *xi;
    }
    sigmoid(eta)
}

/// Mean of the outcome equation for given covariates, confounder, and
/// treatment.
pub fn outcome_mean<F: Scalar>(x: &[F; 3], u: u8, t: u8, c: &DgpCoefficients<F>) -> F {
    let mut mean = c.outcome_intercept + c.outcome_weight_u * centered(u);
    for (w, xi) in c.outcome_weights_x.iter().zip(x.iter()) {
        mean = mean + *w * *xi;
    }
    if t == 1 {
        mean = mean + c.outcome_tau;
    }
    mean
}

/// Gaussian outcome draw; one normal variate is always consumed so the
/// stream layout does not depend on sigma.
pub fn draw_outcome<F: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    x: &[F; 3],
    u: u8,
    t: u8,
    c: &DgpCoefficients<F>,
) -> F {
    outcome_mean(x, u, t, c) + c.outcome_sigma * F::standard_normal(rng)
}

/// Draw the numeric fields of one unit. The assignment stream supplies
/// x1, x2, x3, u, t in that order; the outcome stream supplies the y noise.
pub fn draw_unit<F: Scalar, R: Rng + ?Sized, S: Rng + ?Sized>(
    id: u64,
    c: &DgpCoefficients<F>,
    assignment_rng: &mut R,
    outcome_rng: &mut S,
) -> Unit<F> {
    let x = draw_confounders(assignment_rng);
    let u = draw_unobserved(assignment_rng);
    let pi_true = true_propensity(&x, u, c);
    let t = if F::unit_uniform(assignment_rng) < pi_true {
        1
    } else {
        0
    };
    let y = draw_outcome(outcome_rng, &x, u, t, c);
    Unit {
        id,
        x,
        u,
        t,
        y,
        pi_true,
        document: Document::default(),
    }
}

/// Generate the numeric portion of `n` units in parallel. Each unit draws
/// its assignment variables and its outcome noise from two substreams keyed
/// by unit id. Documents are left empty and attached by the text generator.
pub fn generate_units<F: Scalar>(
    n: usize,
    c: &DgpCoefficients<F>,
    master_seed: u64,
) -> Result<Vec<Unit<F>>> {
    if n == 0 {
        return Err(Error::Config("n: must be at least 1".into()));
    }
    c.validate()?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|id| {
            let mut assignment = substream(master_seed, DOMAIN_UNIT_NUMERIC, id);
            let mut outcome = substream(master_seed, DOMAIN_UNIT_OUTCOME, id);
            draw_unit(id, c, &mut assignment, &mut outcome)
        })
        .collect())
}
