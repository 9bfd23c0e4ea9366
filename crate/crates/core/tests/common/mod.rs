//! Shared test utilities: an independent dense maximum-likelihood oracle
//! for the logistic objective, and random instance builders.
//!
//! The oracle is deliberately a different algorithm (full-gradient descent
//! with backtracking) from the coordinate-descent path it checks.

use leaksim::features::{FeatureMatrix, Standardization};
use leaksim::linalg::Matrix;
use leaksim::rng::substream;
use leaksim::scalar::{sigmoid, Scalar};
use rand::Rng;

pub fn feature_matrix_from_columns(columns: Vec<Vec<f64>>) -> FeatureMatrix<f64> {
    let names: Vec<String> = (0..columns.len()).map(|j| format!("c{j}")).collect();
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

/// Random non-separable logistic instance with standard-normal features.
pub fn random_logistic_instance(
    n: usize,
    p: usize,
    seed: u64,
) -> (FeatureMatrix<f64>, Vec<u8>) {
    let mut rng = substream(seed, 90, 0);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| f64::standard_normal(&mut rng)).collect())
        .collect();
    let betas: Vec<f64> = (0..p)
        .map(|j| 0.6 * ((j % 3) as f64 - 1.0) + 0.1)
        .collect();
    let t: Vec<u8> = (0..n)
        .map(|i| {
            let eta: f64 = cols.iter().zip(&betas).map(|(c, b)| c[i] * b).sum();
            u8::from(rng.gen::<f64>() < sigmoid(0.2 + eta))
        })
        .collect();
    (feature_matrix_from_columns(cols), t)
}

/// Unpenalized logistic MLE by dense gradient descent with Armijo
/// backtracking. Returns `(weights, intercept)`.
pub fn dense_mle_oracle(features: &FeatureMatrix<f64>, t: &[u8]) -> (Vec<f64>, f64) {
    let m = features.matrix();
    let n = m.rows();
    let p = m.cols();
    let nf = n as f64;

    let objective = |w: &[f64], b0: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            let eta = b0 + m.row_dot(i, w);
            let log1pe = if eta > 0.0 {
                eta + (-eta).exp().ln_1p()
            } else {
                eta.exp().ln_1p()
            };
            acc += log1pe - f64::from(t[i]) * eta;
        }
        acc / nf
    };
    let gradient = |w: &[f64], b0: f64| -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; p];
        let mut gb = 0.0;
        for i in 0..n {
            let resid = sigmoid(b0 + m.row_dot(i, w)) - f64::from(t[i]);
            gb += resid;
            for j in 0..p {
                gw[j] += resid * m.get(i, j);
            }
        }
        for g in &mut gw {
            *g /= nf;
        }
        (gw, gb / nf)
    };

    // Gradient descent with Barzilai-Borwein step lengths and a
    // non-monotone Armijo safeguard.
    let mut w = vec![0.0; p];
    let mut b0 = 0.0;
    let mut obj = objective(&w, b0);
    let (mut gw, mut gb) = gradient(&w, b0);
    let mut prev_w: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
    let mut recent = vec![obj];
    for _ in 0..200_000 {
        let grad_inf = gw.iter().map(|g| g.abs()).fold(gb.abs(), f64::max);
        if grad_inf < 1e-10 {
            break;
        }
        let mut step = match &prev_w {
            Some((pw, pb, pgw, pgb)) => {
                let mut s_dot_y = (b0 - pb) * (gb - pgb);
                let mut s_dot_s = (b0 - pb) * (b0 - pb);
                for j in 0..p {
                    let s = w[j] - pw[j];
                    let y = gw[j] - pgw[j];
                    s_dot_y += s * y;
                    s_dot_s += s * s;
                }
                if s_dot_y > 0.0 && s_dot_s.is_finite() {
                    (s_dot_s / s_dot_y).clamp(1e-8, 1e6)
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let grad_sq: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        let (cand_w, cand_b, cand_obj) = loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, gi)| wi - step * gi).collect();
            let cand_b = b0 - step * gb;
            let cand_obj = objective(&cand_w, cand_b);
            if cand_obj <= reference - 1e-4 * step * grad_sq || step < 1e-14 {
                break (cand_w, cand_b, cand_obj);
            }
            step *= 0.5;
        };
        prev_w = Some((w.clone(), b0, gw.clone(), gb));
        w = cand_w;
        b0 = cand_b;
        obj = cand_obj;
        recent.push(obj);
        if recent.len() > 10 {
            recent.remove(0);
        }
        let (ngw, ngb) = gradient(&w, b0);
        gw = ngw;
        gb = ngb;
    }
    let _ = obj;
    (w, b0)
}
