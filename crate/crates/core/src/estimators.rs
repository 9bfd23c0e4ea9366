//! The six ATE estimates: two OLS outcome models, three IPW estimates under
//! different text regimes, and one IPW estimate with the true propensities,
//! each with a percentile-bootstrap confidence interval.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::dgp::{centered, Unit};
use crate::diagnostics::{auc, ks_distance, share_outside};
use crate::distill::{distill, DistillRegime};
use crate::error::{Error, Result};
use crate::features::{
    assemble_from_counts, build_vocabulary_from_counts, count_terms, DocTermCounts,
};
use crate::linalg::{least_squares, Matrix};
use crate::propensity::{
    cv_select_lambda, fit_l1_logistic_with_diagnostics, lambda_max, lambda_path,
    predict_propensity, PropensityModel,
};
use crate::rng::{bootstrap_index, substream, DOMAIN_BOOTSTRAP};
use crate::scalar::Scalar;
use crate::Real;

/// Ordinary least squares estimate of the treatment coefficient on the
/// design `[1, T, X (, centered U)]`, solved by Householder QR.
pub fn ols_ate<F: Scalar>(units: &[Unit<F>], include_u: bool) -> Result<F> {
    let idx: Vec<usize> = (0..units.len()).collect();
    ols_ate_indexed(units, &idx, include_u)
}

/// OLS treatment coefficient over a resample given by `idx`.
pub fn ols_ate_indexed<F: Scalar>(
    units: &[Unit<F>],
    idx: &[usize],
    include_u: bool,
) -> Result<F> {
    let p = if include_u { 6 } else { 5 };
    if idx.len() < p + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} units for OLS, got {}",
            p + 2,
            idx.len()
        )));
    }
    let n = idx.len();
    let mut columns: Vec<Vec<F>> = Vec::with_capacity(p);
    columns.push(vec![F::one(); n]);
    columns.push(idx.iter().map(|&i| F::from_u8(units[i].t).unwrap()).collect());
    for k in 0..3 {
        columns.push(idx.iter().map(|&i| units[i].x[k]).collect());
    }
    let mut names = vec!["intercept", "t", "x1", "x2", "x3"];
    if include_u {
        columns.push(idx.iter().map(|&i| centered(units[i].u)).collect());
        names.push("u");
    }
    let design = Matrix::from_columns(columns)?;
    let y: Vec<F> = idx.iter().map(|&i| units[i].y).collect();
    let beta = least_squares(&design, &y, &names)?;
    Ok(beta[1])
}

/// Horvitz-Thompson IPW estimate:
/// `(1/n) sum { T y / pi - (1-T) y / (1-pi) }`. Every propensity must lie
/// strictly inside (0, 1).
pub fn ipw_ate<F: Scalar>(y: &[F], t: &[u8], pi_hat: &[F]) -> Result<F> {
    check_ipw_inputs(y, t, pi_hat)?;
    let n = F::from_usize(y.len()).unwrap();
    let mut acc = F::zero();
    for i in 0..y.len() {
        acc = acc
            + if t[i] == 1 {
                y[i] / pi_hat[i]
            } else {
                -y[i] / (F::one() - pi_hat[i])
            };
    }
    Ok(acc / n)
}

/// Weight-normalized (Hajek) IPW estimate.
pub fn ipw_ate_hajek<F: Scalar>(y: &[F], t: &[u8], pi_hat: &[F]) -> Result<F> {
    check_ipw_inputs(y, t, pi_hat)?;
    let mut num_t = F::zero();
    let mut den_t = F::zero();
    let mut num_c = F::zero();
    let mut den_c = F::zero();
    for i in 0..y.len() {
        if t[i] == 1 {
            let w = F::one() / pi_hat[i];
            num_t = num_t + w * y[i];
            den_t = den_t + w;
        } else {
            let w = F::one() / (F::one() - pi_hat[i]);
            num_c = num_c + w * y[i];
            den_c = den_c + w;
        }
    }
    if den_t == F::zero() || den_c == F::zero() {
        return Err(Error::DegenerateLabels);
    }
    Ok(num_t / den_t - num_c / den_c)
}

fn check_ipw_inputs<F: Scalar>(y: &[F], t: &[u8], pi_hat: &[F]) -> Result<()> {
    if y.len() != t.len() || y.len() != pi_hat.len() {
        return Err(Error::InvalidArgument(
            "ipw inputs have mismatched lengths".into(),
        ));
    }
    for (i, p) in pi_hat.iter().enumerate() {
        if *p <= F::zero() || *p >= F::one() {
            return Err(Error::PropensityOutOfRange {
                index: i,
                value: p.to_f64c(),
            });
        }
    }
    Ok(())
}

/// Empirical quantile with linear interpolation between order statistics
/// (the usual type-7 rule). Input must be sorted.
pub fn quantile_sorted<F: Scalar>(sorted: &[F], p: F) -> F {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = F::from_usize(n - 1).unwrap() * p;
    let lo = h.floor().to_usize().unwrap().min(n - 2);
    let frac = h - F::from_usize(lo).unwrap();
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Percentile bootstrap result.
#[derive(Debug, Clone)]
pub struct BootstrapCi<F> {
    pub low: F,
    pub high: F,
    /// Successful resamples the interval is based on.
    pub n_used: usize,
    pub n_failed: usize,
}

/// Percentile bootstrap over unit-level resamples with replacement. Each
/// resample `r` draws its indices from the substream
/// `(master, BOOTSTRAP, label << 32 | r)` and re-runs `estimator` on them.
/// Failed resamples are dropped, but more than 1% of failures is an error.
pub fn bootstrap_percentile_ci<F, E>(
    n_units: usize,
    b: usize,
    level: F,
    master_seed: u64,
    label: usize,
    estimator: E,
) -> Result<BootstrapCi<F>>
where
    F: Scalar,
    E: Fn(&[usize]) -> Result<F> + Sync,
{
    if b < 100 {
        return Err(Error::InvalidArgument(format!(
            "bootstrap needs at least 100 resamples, got {b}"
        )));
    }
    if n_units == 0 {
        return Err(Error::InvalidArgument("no units to resample".into()));
    }
    let results: Vec<Result<F>> = (0..b)
        .into_par_iter()
        .map(|r| {
            use rand::Rng;
            let mut rng = substream(master_seed, DOMAIN_BOOTSTRAP, bootstrap_index(label, r));
            let idx: Vec<usize> = (0..n_units).map(|_| rng.gen_range(0..n_units)).collect();
            estimator(&idx)
        })
        .collect();

    let mut values: Vec<F> = Vec::with_capacity(b);
    let mut n_failed = 0usize;
    for r in results {
        match r {
            Ok(v) => values.push(v),
            Err(_) => n_failed += 1,
        }
    }
    if (n_failed as f64) > 0.01 * b as f64 {
        return Err(Error::BootstrapFailures {
            failed: n_failed,
            total: b,
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let half = F::from_f64c(0.5);
    let alpha = (F::one() - level) * half;
    Ok(BootstrapCi {
        low: quantile_sorted(&values, alpha),
        high: quantile_sorted(&values, F::one() - alpha),
        n_used: values.len(),
        n_failed,
    })
}

/// The six estimate labels, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateLabel {
    Tau1OracleU,
    Tau2OmitU,
    Tau3NoDistill,
    Tau4OverAggressive,
    Tau5PerfectDistill,
    Tau6TruePropensity,
}

impl EstimateLabel {
    pub const ALL: [EstimateLabel; 6] = [
        EstimateLabel::Tau1OracleU,
        EstimateLabel::Tau2OmitU,
        EstimateLabel::Tau3NoDistill,
        EstimateLabel::Tau4OverAggressive,
        EstimateLabel::Tau5PerfectDistill,
        EstimateLabel::Tau6TruePropensity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateLabel::Tau1OracleU => "tau1_oracle_u",
            EstimateLabel::Tau2OmitU => "tau2_omit_u",
            EstimateLabel::Tau3NoDistill => "tau3_no_distill",
            EstimateLabel::Tau4OverAggressive => "tau4_over_aggressive",
            EstimateLabel::Tau5PerfectDistill => "tau5_perfect_distill",
            EstimateLabel::Tau6TruePropensity => "tau6_true_propensity",
        }
    }

    fn index(self) -> usize {
        Self::ALL.iter().position(|l| *l == self).unwrap()
    }
}

impl std::fmt::Display for EstimateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One estimate with its percentile bootstrap interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    pub label: EstimateLabel,
    pub value: Real,
    pub ci_low: Real,
    pub ci_high: Real,
    /// Successful bootstrap resamples behind the interval.
    pub n_bootstrap: usize,
    pub n_failed: usize,
    /// Fitted propensities nudged off exactly 0 or 1 before weighting.
    pub n_nudged: usize,
}

/// Distribution summary of one propensity series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropensitySummary {
    pub series: String,
    pub mean: Real,
    pub min: Real,
    pub max: Real,
    pub share_outside_005_095: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc_vs_t: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_vs_true: Option<Real>,
}

/// Self-describing report settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub ipw_form: String,
    pub clip_epsilon: Option<Real>,
    pub rebuild_vocab_in_bootstrap: bool,
    /// The penalty is selected once on the full sample and held fixed
    /// across bootstrap resamples.
    pub lambda_fixed_across_bootstrap: bool,
    pub lambda_selection_rule: String,
    pub idf: String,
    pub selected_lambdas: BTreeMap<String, Real>,
}

/// The full six-estimate report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimates: Vec<Estimate>,
    pub true_tau: Real,
    pub config_digest: String,
    pub seed: u64,
    pub metadata: ReportMetadata,
    pub propensity_summaries: Vec<PropensitySummary>,
}

impl EstimateReport {
    pub fn estimate(&self, label: EstimateLabel) -> &Estimate {
        self.estimates
            .iter()
            .find(|e| e.label == label)
            .expect("report carries all six labels")
    }
}

/// Report plus the per-unit propensity series needed for the histogram
/// export.
#[derive(Debug, Clone)]
pub struct EstimationOutput {
    pub report: EstimateReport,
    pub pi_true: Vec<Real>,
    pub pi_no_distill: Vec<Real>,
    pub pi_perfect: Vec<Real>,
}

/// Move probabilities at exactly 0 or 1 to the nearest representable
/// interior value, counting how many were touched. With a clip epsilon,
/// truncate to `[eps, 1-eps]` instead.
fn make_interior(probs: &mut [Real], clip_epsilon: Option<Real>) -> usize {
    let (lo, hi) = match clip_epsilon {
        Some(eps) => (eps, 1.0 - eps),
        None => (1e-12, 1.0 - 1e-12),
    };
    let mut touched = 0usize;
    for p in probs.iter_mut() {
        let must_move = match clip_epsilon {
            Some(_) => *p < lo || *p > hi,
            None => *p <= 0.0 || *p >= 1.0,
        };
        if must_move {
            *p = p.max(lo).min(hi);
            touched += 1;
        }
    }
    touched
}

struct TextRegimeFit {
    regime: DistillRegime,
    lambda: Real,
    model: PropensityModel<Real>,
    propensities: Vec<Real>,
    n_nudged: usize,
    counts: Vec<DocTermCounts>,
}

/// Run the full six-estimate analysis over a complete dataset.
pub fn run_six_estimates(units: &[Unit<Real>], config: &SimConfig) -> Result<EstimationOutput> {
    config.validate()?;
    if units.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let n = units.len();
    let seed = config.seed;
    let b = config.bootstrap_b;
    let level = 0.95;

    let y: Vec<Real> = units.iter().map(|u| u.y).collect();
    let t: Vec<u8> = units.iter().map(|u| u.t).collect();
    let x_rows: Vec<[Real; 3]> = units.iter().map(|u| u.x).collect();
    let pi_true: Vec<Real> = units.iter().map(|u| u.pi_true).collect();

    let ipw = |y: &[Real], t: &[u8], pi: &[Real]| -> Result<Real> {
        if config.flags.hajek {
            ipw_ate_hajek(y, t, pi)
        } else {
            ipw_ate(y, t, pi)
        }
    };

    // tau1 / tau2: outcome models.
    let mut estimates: Vec<Estimate> = Vec::with_capacity(6);
    for (label, include_u) in [
        (EstimateLabel::Tau1OracleU, true),
        (EstimateLabel::Tau2OmitU, false),
    ] {
        let value = ols_ate(units, include_u)?;
        let ci = bootstrap_percentile_ci(n, b, level, seed, label.index(), |idx| {
            ols_ate_indexed(units, idx, include_u)
        })?;
        estimates.push(Estimate {
            label,
            value,
            ci_low: ci.low,
            ci_high: ci.high,
            n_bootstrap: ci.n_used,
            n_failed: ci.n_failed,
            n_nudged: 0,
        });
    }

    // tau3 / tau4 / tau5: text-based propensity pipelines.
    let mut selected_lambdas = BTreeMap::new();
    let mut regime_fits: Vec<TextRegimeFit> = Vec::with_capacity(3);
    for (stream_idx, (label, regime)) in [
        (EstimateLabel::Tau3NoDistill, DistillRegime::Identity),
        (EstimateLabel::Tau4OverAggressive, DistillRegime::OverAggressive),
        (EstimateLabel::Tau5PerfectDistill, DistillRegime::Perfect),
    ]
    .into_iter()
    .enumerate()
    {
        let counts: Vec<DocTermCounts> = units
            .par_iter()
            .map(|u| count_terms(&distill(&u.document, regime)))
            .collect();
        let vocab =
            build_vocabulary_from_counts(counts.iter().map(|c| (c, 1)), config.vocab_size)?;
        let count_refs: Vec<&DocTermCounts> = counts.iter().collect();
        let fm = assemble_from_counts(&x_rows, &count_refs, &vocab)?;

        let lmax = lambda_max(&fm, &t);
        let path = lambda_path(lmax, config.lambda_path.count, config.lambda_path.min_ratio);
        let selection =
            cv_select_lambda(&fm, &t, config.cv_folds, &path, seed, stream_idx as u64)?;
        let (mut model, _) = fit_l1_logistic_with_diagnostics(&fm, &t, selection.lambda, None)?;
        model.cv_curve = selection.cv_curve;

        let mut propensities = predict_propensity(&model, &fm)?;
        let n_nudged = make_interior(&mut propensities, config.flags.clip_epsilon);
        selected_lambdas.insert(label.as_str().to_string(), selection.lambda);
        regime_fits.push(TextRegimeFit {
            regime,
            lambda: selection.lambda,
            model,
            propensities,
            n_nudged,
            counts,
        });
    }

    for (fit, label) in regime_fits.iter().zip([
        EstimateLabel::Tau3NoDistill,
        EstimateLabel::Tau4OverAggressive,
        EstimateLabel::Tau5PerfectDistill,
    ]) {
        let value = ipw(&y, &t, &fit.propensities)?;
        let warm: Option<(&[Real], Real)> = if config.flags.rebuild_vocab {
            None
        } else {
            Some((&fit.model.weights, fit.model.intercept))
        };
        let full_vocab = build_vocabulary_from_counts(
            fit.counts.iter().map(|c| (c, 1)),
            config.vocab_size,
        )?;
        let ci = bootstrap_percentile_ci(n, b, level, seed, label.index(), |idx| {
            let sub_counts: Vec<&DocTermCounts> = idx.iter().map(|&i| &fit.counts[i]).collect();
            let sub_x: Vec<[Real; 3]> = idx.iter().map(|&i| x_rows[i]).collect();
            let sub_t: Vec<u8> = idx.iter().map(|&i| t[i]).collect();
            let sub_y: Vec<Real> = idx.iter().map(|&i| y[i]).collect();
            let vocab = if config.flags.rebuild_vocab {
                build_vocabulary_from_counts(
                    idx.iter().map(|&i| (&fit.counts[i], 1)),
                    config.vocab_size,
                )?
            } else {
                full_vocab.clone()
            };
            let fm = assemble_from_counts(&sub_x, &sub_counts, &vocab)?;
            let warm_ref = if vocab.len() == full_vocab.len() {
                warm
            } else {
                None
            };
            let (model, _) = fit_l1_logistic_with_diagnostics(&fm, &sub_t, fit.lambda, warm_ref)?;
            let mut probs = predict_propensity(&model, &fm)?;
            make_interior(&mut probs, config.flags.clip_epsilon);
            ipw(&sub_y, &sub_t, &probs)
        })?;
        estimates.push(Estimate {
            label,
            value,
            ci_low: ci.low,
            ci_high: ci.high,
            n_bootstrap: ci.n_used,
            n_failed: ci.n_failed,
            n_nudged: fit.n_nudged,
        });
    }

    // tau6: IPW with the data-generating propensities.
    {
        let label = EstimateLabel::Tau6TruePropensity;
        let value = ipw(&y, &t, &pi_true)?;
        let ci = bootstrap_percentile_ci(n, b, level, seed, label.index(), |idx| {
            let sub_y: Vec<Real> = idx.iter().map(|&i| y[i]).collect();
            let sub_t: Vec<u8> = idx.iter().map(|&i| t[i]).collect();
            let sub_pi: Vec<Real> = idx.iter().map(|&i| pi_true[i]).collect();
            ipw(&sub_y, &sub_t, &sub_pi)
        })?;
        estimates.push(Estimate {
            label,
            value,
            ci_low: ci.low,
            ci_high: ci.high,
            n_bootstrap: ci.n_used,
            n_failed: ci.n_failed,
            n_nudged: 0,
        });
    }

    // Keep the fixed report order.
    estimates.sort_by_key(|e| e.label.index());

    let summary = |series: &str, probs: &[Real], with_fit_stats: bool| PropensitySummary {
        series: series.to_string(),
        mean: probs.iter().sum::<Real>() / probs.len() as Real,
        min: probs.iter().copied().fold(f64::INFINITY, f64::min),
        max: probs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        share_outside_005_095: share_outside(probs, 0.05, 0.95),
        auc_vs_t: with_fit_stats.then(|| auc(probs, &t)),
        ks_vs_true: with_fit_stats.then(|| ks_distance(probs, &pi_true)),
    };
    let pi_no_distill = regime_fits
        .iter()
        .find(|f| f.regime == DistillRegime::Identity)
        .map(|f| f.propensities.clone())
        .unwrap();
    let pi_perfect = regime_fits
        .iter()
        .find(|f| f.regime == DistillRegime::Perfect)
        .map(|f| f.propensities.clone())
        .unwrap();
    let propensity_summaries = vec![
        summary("pi_true", &pi_true, false),
        summary("pi_no_distill", &pi_no_distill, true),
        summary("pi_perfect", &pi_perfect, true),
    ];

    let report = EstimateReport {
        estimates,
        true_tau: config.dgp.outcome_tau,
        config_digest: config.digest(),
        seed,
        metadata: ReportMetadata {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ipw_form: if config.flags.hajek {
                "hajek".into()
            } else {
                "horvitz-thompson".into()
            },
            clip_epsilon: config.flags.clip_epsilon,
            rebuild_vocab_in_bootstrap: config.flags.rebuild_vocab,
            lambda_fixed_across_bootstrap: true,
            lambda_selection_rule: "min-deviance".into(),
            idf: "ln((1+N)/(1+df))".into(),
            selected_lambdas,
        },
        propensity_summaries,
    };
    Ok(EstimationOutput {
        report,
        pi_true,
        pi_no_distill,
        pi_perfect,
    })
}
