//! L1-regularized logistic regression for the propensity model
//! `P(T | X, W)`, fit by cyclic coordinate descent on the IRLS quadratic
//! approximation, with the regularization strength chosen by k-fold
//! cross-validation on held-out binomial deviance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Matrix;
use crate::rng::{substream, DOMAIN_CV};
use crate::scalar::{logit, sigmoid, Scalar};

/// Fitted sparse logistic model.
#[derive(Debug, Clone)]
pub struct PropensityModel<F> {
    /// One weight per feature column.
    pub weights: Vec<F>,
    pub intercept: F,
    /// Selected (or requested) penalty.
    pub lambda: F,
    /// `(lambda, mean held-out deviance)` pairs when fit via CV.
    pub cv_curve: Vec<(F, F)>,
    pub column_names: Vec<String>,
}

impl<F: Scalar> PropensityModel<F> {
    /// JSON serialization with weights keyed by column name.
    pub fn to_json(&self) -> Result<String> {
        let weights: serde_json::Map<String, serde_json::Value> = self
            .column_names
            .iter()
            .zip(&self.weights)
            .map(|(name, w)| (name.clone(), serde_json::json!(w.to_f64c())))
            .collect();
        let value = serde_json::json!({
            "intercept": self.intercept.to_f64c(),
            "lambda": self.lambda.to_f64c(),
            "weights": weights,
            "cv_curve": self
                .cv_curve
                .iter()
                .map(|(l, d)| vec![l.to_f64c(), d.to_f64c()])
                .collect::<Vec<_>>(),
            "selection_rule": "min-deviance",
        });
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn n_nonzero(&self) -> usize {
        self.weights.iter().filter(|w| **w != F::zero()).count()
    }
}

/// `sign(z) * max(|z| - gamma, 0)`.
pub fn soft_threshold<F: Scalar>(z: F, gamma: F) -> F {
    debug_assert!(gamma >= F::zero());
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        F::zero()
    }
}

/// Smallest penalty at which every weight is zero:
/// `max_j |(1/n) sum_i x_ij (t_i - mean t)|`.
pub fn lambda_max<F: Scalar>(features: &FeatureMatrix<F>, t: &[u8]) -> F {
    let m = features.matrix();
    let n = F::from_usize(m.rows()).unwrap();
    let t_bar = F::from_usize(t.iter().map(|v| *v as usize).sum()).unwrap() / n;
    let mut best = F::zero();
    for j in 0..m.cols() {
        let col = m.column(j);
        let mut acc = F::zero();
        for (xi, ti) in col.iter().zip(t) {
            acc = acc + *xi * (F::from_u8(*ti).unwrap() - t_bar);
        }
        best = best.max((acc / n).abs());
    }
    best
}

/// Descending log-spaced path from `lambda_max` down to
/// `min_ratio * lambda_max`.
pub fn lambda_path<F: Scalar>(lambda_max: F, count: usize, min_ratio: F) -> Vec<F> {
    if count <= 1 {
        return vec![lambda_max];
    }
    let log_max = lambda_max.ln();
    let log_min = (lambda_max * min_ratio).ln();
    let step = (log_min - log_max) / F::from_usize(count - 1).unwrap();
    (0..count)
        .map(|i| (log_max + step * F::from_usize(i).unwrap()).exp())
        .collect()
}

/// Per-fit diagnostics: sweep count and the penalized objective after each
/// sweep (non-increasing by construction; a step-halving safeguard backs
/// off any IRLS overshoot).
#[derive(Debug, Clone)]
pub struct FitDiagnostics<F> {
    pub sweeps: usize,
    pub objective_trace: Vec<F>,
}

const MAX_SWEEPS: usize = 10_000;
const COEF_TOL: f64 = 1e-7;
/// glmnet-style clamp on the IRLS working weights.
const WEIGHT_EPS: f64 = 1e-5;

struct FitState<F> {
    weights: Vec<F>,
    intercept: F,
    eta: Vec<F>,
}

fn penalized_objective<F: Scalar>(eta: &[F], t: &[u8], weights: &[F], lambda: F) -> F {
    let n = F::from_usize(eta.len()).unwrap();
    let mut nll = F::zero();
    for (e, ti) in eta.iter().zip(t) {
        // ln(1 + exp(eta)) - t * eta, computed stably.
        let log1pe = if *e > F::zero() {
            *e + (-*e).exp().ln_1p()
        } else {
            e.exp().ln_1p()
        };
        nll = nll + log1pe - F::from_u8(*ti).unwrap() * *e;
    }
    let l1: F = weights.iter().map(|w| w.abs()).sum();
    nll / n + lambda * l1
}

fn recompute_eta<F: Scalar>(m: &Matrix<F>, state: &mut FitState<F>) {
    for (r, e) in state.eta.iter_mut().enumerate() {
        *e = state.intercept + m.row_dot(r, &state.weights);
    }
}

/// Core fitter on a raw design matrix. One sweep = refresh the IRLS
/// quadratic, update the intercept, then one cyclic pass over all
/// coordinates. Converged when the largest coefficient change in a sweep is
/// below 1e-7.
fn fit_core<F: Scalar>(
    m: &Matrix<F>,
    t: &[u8],
    lambda: F,
    warm: Option<(&[F], F)>,
) -> Result<(Vec<F>, F, FitDiagnostics<F>)> {
    let n = m.rows();
    let p = m.cols();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 rows".into()));
    }
    if t.len() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            got: t.len(),
        });
    }
    let pos = t.iter().filter(|v| **v == 1).count();
    if pos == 0 || pos == n {
        return Err(Error::DegenerateLabels);
    }
    if lambda < F::zero() {
        return Err(Error::InvalidArgument("lambda must be non-negative".into()));
    }

    let nf = F::from_usize(n).unwrap();
    let t_bar = F::from_usize(pos).unwrap() / nf;
    let mut state = match warm {
        Some((w, b0)) => {
            let mut s = FitState {
                weights: w.to_vec(),
                intercept: b0,
                eta: vec![F::zero(); n],
            };
            recompute_eta(m, &mut s);
            s
        }
        None => FitState {
            weights: vec![F::zero(); p],
            intercept: logit(t_bar),
            eta: vec![logit(t_bar); n],
        },
    };

    let weight_eps = F::from_f64c(WEIGHT_EPS);
    let coef_tol = F::from_f64c(COEF_TOL);
    let mut trace = Vec::new();
    let mut objective = penalized_objective(&state.eta, t, &state.weights, lambda);
    let mut last_max_delta = f64::INFINITY;

    let mut w = vec![F::zero(); n];
    let mut r = vec![F::zero(); n];
    let mut z = vec![F::zero(); n];
    let mut active: Vec<usize> = Vec::new();
    // Full passes discover violations; cheap passes over the active set do
    // most of the work in between.
    let mut full_pass = true;

    for sweep in 1..=MAX_SWEEPS {
        let prev_weights = state.weights.clone();
        let prev_intercept = state.intercept;

        // IRLS quadratic at the current iterate. Probabilities near 0 or 1
        // get a floor weight so quasi-separated fits stay finite.
        for i in 0..n {
            let p_i = sigmoid(state.eta[i]);
            let (p_eff, w_i) = if p_i < weight_eps {
                (F::zero(), weight_eps)
            } else if p_i > F::one() - weight_eps {
                (F::one(), weight_eps)
            } else {
                (p_i, p_i * (F::one() - p_i))
            };
            w[i] = w_i;
            r[i] = (F::from_u8(t[i]).unwrap() - p_eff) / w_i;
            // Working response; the linear predictor is z - r throughout
            // the sweep.
            z[i] = state.eta[i] + r[i];
        }

        // Intercept (unpenalized).
        let w_sum: F = w.iter().copied().sum();
        let wr_sum: F = w.iter().zip(&r).map(|(wi, ri)| *wi * *ri).sum();
        let delta0 = wr_sum / w_sum;
        state.intercept = state.intercept + delta0;
        for ri in r.iter_mut() {
            *ri = *ri - delta0;
        }

        // Cyclic pass over the chosen coordinate set.
        let full_this_sweep = full_pass;
        let update = |j: usize, state: &mut FitState<F>, r: &mut [F], w: &[F]| {
            let col = m.column(j);
            let mut s_j = F::zero();
            let mut g_j = F::zero();
            for i in 0..n {
                s_j = s_j + w[i] * col[i] * col[i];
                g_j = g_j + w[i] * col[i] * r[i];
            }
            let s_j = s_j / nf;
            if s_j <= F::zero() {
                return;
            }
            let num = g_j / nf + s_j * state.weights[j];
            let new_w = soft_threshold(num, lambda) / s_j;
            let delta = new_w - state.weights[j];
            if delta != F::zero() {
                for i in 0..n {
                    r[i] = r[i] - delta * col[i];
                }
                state.weights[j] = new_w;
            }
        };
        if full_this_sweep {
            for j in 0..p {
                update(j, &mut state, &mut r, &w);
            }
            active = (0..p).filter(|&j| state.weights[j] != F::zero()).collect();
        } else {
            for &j in &active {
                update(j, &mut state, &mut r, &w);
            }
        }

        for i in 0..n {
            state.eta[i] = z[i] - r[i];
        }

        let mut new_objective = penalized_objective(&state.eta, t, &state.weights, lambda);
        if new_objective > objective {
            // Back off toward the previous iterate until the true objective
            // stops increasing (proximal step-halving).
            let target_weights = state.weights.clone();
            let target_intercept = state.intercept;
            let mut step = F::from_f64c(0.5);
            let mut accepted = false;
            for _ in 0..60 {
                for j in 0..p {
                    state.weights[j] =
                        prev_weights[j] + step * (target_weights[j] - prev_weights[j]);
                }
                state.intercept = prev_intercept + step * (target_intercept - prev_intercept);
                recompute_eta(m, &mut state);
                new_objective = penalized_objective(&state.eta, t, &state.weights, lambda);
                if new_objective <= objective {
                    accepted = true;
                    break;
                }
                step = step * F::from_f64c(0.5);
            }
            if !accepted {
                // No descent direction left at floating-point resolution.
                state.weights = prev_weights;
                state.intercept = prev_intercept;
                recompute_eta(m, &mut state);
                trace.push(objective);
                return Ok((
                    state.weights.clone(),
                    state.intercept,
                    FitDiagnostics {
                        sweeps: sweep,
                        objective_trace: trace,
                    },
                ));
            }
        }
        objective = new_objective;
        trace.push(objective);

        let mut max_delta = (state.intercept - prev_intercept).abs();
        for (new_w, old_w) in state.weights.iter().zip(&prev_weights) {
            max_delta = max_delta.max((*new_w - *old_w).abs());
        }
        if max_delta < coef_tol {
            if full_this_sweep {
                // A converged full pass certifies every coordinate.
                return Ok((
                    state.weights.clone(),
                    state.intercept,
                    FitDiagnostics {
                        sweeps: sweep,
                        objective_trace: trace,
                    },
                ));
            }
            // The active set is stable; check the rest with a full pass.
            full_pass = true;
        } else {
            full_pass = active.is_empty();
        }
        last_max_delta = max_delta.to_f64c();
    }

    Err(Error::NotConverged {
        sweeps: MAX_SWEEPS,
        max_delta: last_max_delta,
        last_weights: state.weights.iter().map(|w| w.to_f64c()).collect(),
        last_intercept: state.intercept.to_f64c(),
    })
}

/// Fit at a fixed penalty, returning per-sweep diagnostics.
pub fn fit_l1_logistic_with_diagnostics<F: Scalar>(
    features: &FeatureMatrix<F>,
    t: &[u8],
    lambda: F,
    warm: Option<(&[F], F)>,
) -> Result<(PropensityModel<F>, FitDiagnostics<F>)> {
    let (weights, intercept, diagnostics) = fit_core(features.matrix(), t, lambda, warm)?;
    Ok((
        PropensityModel {
            weights,
            intercept,
            lambda,
            cv_curve: Vec::new(),
            column_names: features.column_names.clone(),
        },
        diagnostics,
    ))
}

/// Fit at a fixed penalty.
pub fn fit_l1_logistic<F: Scalar>(
    features: &FeatureMatrix<F>,
    t: &[u8],
    lambda: F,
) -> Result<PropensityModel<F>> {
    fit_l1_logistic_with_diagnostics(features, t, lambda, None).map(|(m, _)| m)
}

/// Maximum KKT violation of a fitted model: for non-zero weights the
/// unpenalized gradient must sit at `±lambda`; for zero weights it must not
/// exceed `lambda`.
pub fn kkt_max_violation<F: Scalar>(
    model: &PropensityModel<F>,
    features: &FeatureMatrix<F>,
    t: &[u8],
) -> F {
    let m = features.matrix();
    let n = F::from_usize(m.rows()).unwrap();
    let probs: Vec<F> = (0..m.rows())
        .map(|r| sigmoid(model.intercept + m.row_dot(r, &model.weights)))
        .collect();
    let mut worst = F::zero();
    for j in 0..m.cols() {
        let col = m.column(j);
        let mut g = F::zero();
        for i in 0..m.rows() {
            g = g + col[i] * (probs[i] - F::from_u8(t[i]).unwrap());
        }
        g = g / n;
        let violation = if model.weights[j] != F::zero() {
            (g.abs() - model.lambda).abs()
        } else {
            (g.abs() - model.lambda).max(F::zero())
        };
        worst = worst.max(violation);
    }
    worst
}

/// Mean binomial deviance of predictions against labels, with probabilities
/// clamped to `[1e-12, 1-1e-12]` so quasi-separated folds stay finite.
pub fn mean_binomial_deviance<F: Scalar>(probs: &[F], t: &[u8]) -> F {
    let clamp_lo = F::from_f64c(1e-12);
    let clamp_hi = F::one() - clamp_lo;
    let two = F::one() + F::one();
    let n = F::from_usize(probs.len()).unwrap();
    let mut acc = F::zero();
    for (p, ti) in probs.iter().zip(t) {
        let p = p.max(clamp_lo).min(clamp_hi);
        let ll = if *ti == 1 { p.ln() } else { (F::one() - p).ln() };
        acc = acc - two * ll;
    }
    acc / n
}

/// Result of cross-validated penalty selection.
#[derive(Debug, Clone)]
pub struct CvSelection<F> {
    pub lambda: F,
    pub cv_curve: Vec<(F, F)>,
}

/// Select the penalty minimizing mean held-out deviance across `folds`
/// seeded-shuffle folds (sizes differing by at most one). Ties go to the
/// largest penalty. `stream_index` keys the shuffle substream.
pub fn cv_select_lambda<F: Scalar>(
    features: &FeatureMatrix<F>,
    t: &[u8],
    folds: usize,
    path: &[F],
    master_seed: u64,
    stream_index: u64,
) -> Result<CvSelection<F>> {
    let n = features.rows();
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    if n < folds {
        return Err(Error::InvalidArgument(format!(
            "cannot make {folds} folds from {n} rows"
        )));
    }
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty lambda path".into()));
    }
    if path.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "lambda path must be descending".into(),
        ));
    }

    // Seeded shuffle, then contiguous folds with sizes differing by <= 1.
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = substream(master_seed, DOMAIN_CV, stream_index);
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut fold_ranges = Vec::with_capacity(folds);
    let mut start = 0usize;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        fold_ranges.push(start..start + size);
        start += size;
    }

    let m = features.matrix();
    let per_fold: Vec<Vec<F>> = fold_ranges
        .par_iter()
        .map(|range| -> Result<Vec<F>> {
            let held: Vec<usize> = order[range.clone()].to_vec();
            let train: Vec<usize> = order[..range.start]
                .iter()
                .chain(&order[range.end..])
                .copied()
                .collect();
            let train_m = select_rows(m, &train);
            let train_t: Vec<u8> = train.iter().map(|i| t[*i]).collect();
            let held_t: Vec<u8> = held.iter().map(|i| t[*i]).collect();

            let mut deviances = Vec::with_capacity(path.len());
            let mut warm: Option<(Vec<F>, F)> = None;
            for &lambda in path {
                let warm_ref = warm.as_ref().map(|(w, b)| (w.as_slice(), *b));
                let (weights, intercept, _) = fit_core(&train_m, &train_t, lambda, warm_ref)?;
                let probs: Vec<F> = held
                    .iter()
                    .map(|&i| sigmoid(intercept + m.row_dot(i, &weights)))
                    .collect();
                deviances.push(mean_binomial_deviance(&probs, &held_t));
                warm = Some((weights, intercept));
            }
            Ok(deviances)
        })
        .collect::<Result<Vec<_>>>()?;

    let folds_f = F::from_usize(folds).unwrap();
    let cv_curve: Vec<(F, F)> = path
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let mean = per_fold.iter().map(|d| d[k]).sum::<F>() / folds_f;
            (lambda, mean)
        })
        .collect();

    let mut best = 0usize;
    for (k, (_, dev)) in cv_curve.iter().enumerate() {
        if *dev < cv_curve[best].1 {
            best = k;
        }
    }
    Ok(CvSelection {
        lambda: cv_curve[best].0,
        cv_curve,
    })
}

/// Gather a row subset into a new column-major matrix.
fn select_rows<F: Scalar>(m: &Matrix<F>, rows: &[usize]) -> Matrix<F> {
    let mut out = Matrix::zeros(rows.len(), m.cols());
    for c in 0..m.cols() {
        let src = m.column(c);
        let dst = out.column_mut(c);
        for (k, &r) in rows.iter().enumerate() {
            dst[k] = src[r];
        }
    }
    out
}

/// Fitted probabilities for each row of a feature matrix.
pub fn predict_propensity<F: Scalar>(
    model: &PropensityModel<F>,
    features: &FeatureMatrix<F>,
) -> Result<Vec<F>> {
    if features.cols() != model.weights.len() {
        return Err(Error::WidthMismatch {
            expected: model.weights.len(),
            got: features.cols(),
        });
    }
    let m = features.matrix();
    Ok((0..m.rows())
        .map(|r| sigmoid(model.intercept + m.row_dot(r, &model.weights)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureMatrix, Standardization};
    use rand::Rng;

    /// Test-only feature matrix built from raw columns.
    fn fm_from_columns(columns: Vec<Vec<f64>>) -> FeatureMatrix<f64> {
        let names: Vec<String> = (0..columns.len()).map(|j| format!("c{j}")).collect();
        fm_named(columns, names)
    }

    fn fm_named(columns: Vec<Vec<f64>>, names: Vec<String>) -> FeatureMatrix<f64> {
        FeatureMatrix::from_parts(
            names,
            0,
            Standardization {
                means: vec![],
                sds: vec![],
            },
            Matrix::from_columns(columns).unwrap(),
        )
    }

    /// Random non-separable binary instance.
    fn random_instance(n: usize, p: usize, seed: u64) -> (FeatureMatrix<f64>, Vec<u8>) {
        let mut rng = crate::rng::substream(seed, 11, 0);
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| {
                (0..n)
                    .map(|_| crate::scalar::Scalar::standard_normal(&mut rng))
                    .collect()
            })
            .collect();
        let betas: Vec<f64> = (0..p).map(|j| 0.4 * (j as f64 - p as f64 / 2.0) / p as f64).collect();
        let t: Vec<u8> = (0..n)
            .map(|i| {
                let eta: f64 = cols.iter().zip(&betas).map(|(c, b)| c[i] * b).sum();
                u8::from(rng.gen::<f64>() < sigmoid(eta))
            })
            .collect();
        (fm_from_columns(cols), t)
    }

    #[test]
    fn soft_threshold_definition() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(1.25, 0.0), 1.25);
    }

    #[test]
    fn full_shrinkage_gives_the_null_model() {
        let (fm, t) = random_instance(80, 4, 3);
        let lmax = lambda_max(&fm, &t);
        let model = fit_l1_logistic(&fm, &t, lmax * 1.0001).unwrap();
        assert!(model.weights.iter().all(|w| *w == 0.0));
        let t_bar = t.iter().map(|v| *v as f64).sum::<f64>() / t.len() as f64;
        assert!((model.intercept - logit(t_bar)).abs() < 1e-9);
    }

    #[test]
    fn single_class_labels_are_rejected() {
        let (fm, _) = random_instance(20, 2, 4);
        let t = vec![1u8; 20];
        assert!(matches!(
            fit_l1_logistic(&fm, &t, 0.1),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn objective_is_non_increasing_across_sweeps() {
        let (fm, t) = random_instance(150, 8, 5);
        for lambda in [0.0, 0.01, 0.05] {
            let (_, diag) = fit_l1_logistic_with_diagnostics(&fm, &t, lambda, None).unwrap();
            for pair in diag.objective_trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-12,
                    "objective rose: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn kkt_conditions_hold_at_convergence() {
        let (fm, t) = random_instance(150, 8, 6);
        let lmax = lambda_max(&fm, &t);
        for ratio in [0.5, 0.1, 0.01] {
            let model = fit_l1_logistic(&fm, &t, lmax * ratio).unwrap();
            let violation = kkt_max_violation(&model, &fm, &t);
            assert!(violation < 1e-4, "KKT violation {violation} at ratio {ratio}");
        }
    }

    #[test]
    fn sparsity_is_monotone_along_the_path() {
        let (fm, t) = random_instance(200, 10, 42);
        let lmax = lambda_max(&fm, &t);
        let path = lambda_path(lmax, 30, 1e-3);
        let mut previous = 0usize;
        let mut warm: Option<(Vec<f64>, f64)> = None;
        for &lambda in &path {
            let warm_ref = warm.as_ref().map(|(w, b)| (w.as_slice(), *b));
            let (model, _) =
                fit_l1_logistic_with_diagnostics(&fm, &t, lambda, warm_ref).unwrap();
            let nz = model.n_nonzero();
            assert!(nz >= previous, "sparsity not monotone: {previous} -> {nz}");
            previous = nz;
            warm = Some((model.weights, model.intercept));
        }
    }

    #[test]
    fn lambda_path_shape() {
        let path = lambda_path(2.0f64, 5, 1e-2);
        assert_eq!(path.len(), 5);
        assert!((path[0] - 2.0).abs() < 1e-12);
        assert!((path[4] - 0.02).abs() < 1e-12);
        assert!(path.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(lambda_path(2.0f64, 1, 1e-2), vec![2.0]);
    }

    #[test]
    fn cv_with_single_lambda_returns_it() {
        let (fm, t) = random_instance(60, 3, 7);
        let sel = cv_select_lambda(&fm, &t, 5, &[0.017], 1, 0).unwrap();
        assert_eq!(sel.lambda, 0.017);
        assert_eq!(sel.cv_curve.len(), 1);
    }

    #[test]
    fn pure_noise_selects_a_large_penalty() {
        // Labels independent of features: the null model wins, so the
        // selected lambda sits at or near the top of the path.
        let mut rng = crate::rng::substream(42, 11, 1);
        let n = 200;
        let cols: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                (0..n)
                    .map(|_| crate::scalar::Scalar::standard_normal(&mut rng))
                    .collect()
            })
            .collect();
        let t: Vec<u8> = (0..n).map(|_| u8::from(rng.gen::<f64>() < 0.5)).collect();
        let fm = fm_from_columns(cols);
        let lmax = lambda_max(&fm, &t);
        let path = lambda_path(lmax, 40, 1e-3);
        let sel = cv_select_lambda(&fm, &t, 10, &path, 42, 0).unwrap();
        let rank = path.iter().position(|l| *l == sel.lambda).unwrap();
        assert!(rank < 10, "noise run selected rank {rank} of 40");
        assert!(sel
            .cv_curve
            .iter()
            .all(|(l, d)| l.is_finite() && d.is_finite()));
    }

    #[test]
    fn cv_is_deterministic_for_a_fixed_seed() {
        let (fm, t) = random_instance(120, 5, 8);
        let lmax = lambda_max(&fm, &t);
        let path = lambda_path(lmax, 25, 1e-3);
        let a = cv_select_lambda(&fm, &t, 6, &path, 42, 3).unwrap();
        let b = cv_select_lambda(&fm, &t, 6, &path, 42, 3).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.cv_curve, b.cv_curve);
        let model_a = fit_l1_logistic(&fm, &t, a.lambda).unwrap();
        let model_b = fit_l1_logistic(&fm, &t, b.lambda).unwrap();
        assert_eq!(model_a.weights, model_b.weights);
    }

    #[test]
    fn cv_rejects_bad_arguments() {
        let (fm, t) = random_instance(20, 2, 9);
        assert!(cv_select_lambda(&fm, &t, 30, &[0.1], 1, 0).is_err());
        assert!(cv_select_lambda(&fm, &t, 5, &[], 1, 0).is_err());
        assert!(cv_select_lambda(&fm, &t, 5, &[0.1, 0.2], 1, 0).is_err());
    }

    #[test]
    fn predict_null_model_is_half() {
        let (fm, _) = random_instance(10, 3, 10);
        let model = PropensityModel {
            weights: vec![0.0; 3],
            intercept: 0.0,
            lambda: 0.0,
            cv_curve: vec![],
            column_names: fm.column_names.clone(),
        };
        let probs = predict_propensity(&model, &fm).unwrap();
        assert!(probs.iter().all(|p| *p == 0.5));
    }

    #[test]
    fn predict_checks_width() {
        let (fm, _) = random_instance(10, 3, 11);
        let model = PropensityModel {
            weights: vec![0.0; 5],
            intercept: 0.0,
            lambda: 0.0,
            cv_curve: vec![],
            column_names: vec![],
        };
        assert!(matches!(
            predict_propensity(&model, &fm),
            Err(Error::WidthMismatch { expected: 5, got: 3 })
        ));
    }

    #[test]
    fn json_serialization_keys_weights_by_column() {
        let (fm, t) = random_instance(60, 3, 12);
        let model = fit_l1_logistic(&fm, &t, 0.01).unwrap();
        let json = model.to_json().unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(value["weights"].as_object().unwrap().contains_key("c0"));
        assert!(value["intercept"].is_number());
        assert!(value["lambda"].is_number());
    }
}
