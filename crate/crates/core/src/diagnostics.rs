//! Distribution diagnostics for propensity overlap: AUC against the
//! treatment labels, two-sample Kolmogorov-Smirnov distance against the
//! true propensities, and the share of extreme predictions.

use crate::scalar::Scalar;

/// Rank-based AUC of a score against binary labels, counting ties as 1/2.
/// Returns 0.5 when either class is empty.
pub fn auc<F: Scalar>(scores: &[F], labels: &[u8]) -> F {
    debug_assert_eq!(scores.len(), labels.len());
    let half = F::from_f64c(0.5);
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return half;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Sum of positive-class ranks with mid-ranks for ties.
    let mut rank_sum_pos = F::zero();
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = F::from_usize(i + j + 2).unwrap() * half;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos = rank_sum_pos + mid_rank;
            }
        }
        i = j + 1;
    }
    let np = F::from_usize(n_pos).unwrap();
    let nn = F::from_usize(n_neg).unwrap();
    (rank_sum_pos - np * (np + F::one()) * half) / (np * nn)
}

/// Two-sample Kolmogorov-Smirnov distance: the largest gap between the
/// empirical CDFs of the two samples.
pub fn ks_distance<F: Scalar>(a: &[F], b: &[F]) -> F {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let na = F::from_usize(xs.len()).unwrap();
    let nb = F::from_usize(ys.len()).unwrap();
    let (mut i, mut j) = (0usize, 0usize);
    let mut best = F::zero();
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        let fa = F::from_usize(i).unwrap() / na;
        let fb = F::from_usize(j).unwrap() / nb;
        best = best.max((fa - fb).abs());
    }
    best
}

/// Share of values outside `[lo, hi]`.
pub fn share_outside<F: Scalar>(values: &[F], lo: F, hi: F) -> F {
    if values.is_empty() {
        return F::zero();
    }
    let outside = values.iter().filter(|v| **v < lo || **v > hi).count();
    F::from_usize(outside).unwrap() / F::from_usize(values.len()).unwrap()
}
