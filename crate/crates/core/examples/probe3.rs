// Temporary probe: stage timing for the estimation pipeline.
use std::time::Instant;

use leaksim::config::{Preset, SimConfig};
use leaksim::distill::{distill, DistillRegime};
use leaksim::features::{assemble_from_counts, build_vocabulary_from_counts, count_terms};
use leaksim::harness::simulate_dataset;
use leaksim::propensity::{cv_select_lambda, fit_l1_logistic_with_diagnostics, lambda_max, lambda_path};
use rayon::prelude::*;

fn main() {
    let mut config = SimConfig::default();
    config.apply_preset(Preset::Desk);
    config.seed = 42;

    let t0 = Instant::now();
    let units = simulate_dataset(&config).unwrap();
    println!("simulate: {:?}", t0.elapsed());
    let t: Vec<u8> = units.iter().map(|u| u.t).collect();
    let x_rows: Vec<[f64; 3]> = units.iter().map(|u| u.x).collect();

    for regime in DistillRegime::ALL {
        let t1 = Instant::now();
        let counts: Vec<_> = units
            .par_iter()
            .map(|u| count_terms(&distill(&u.document, regime)))
            .collect();
        let vocab =
            build_vocabulary_from_counts(counts.iter().map(|c| (c, 1)), config.vocab_size)
                .unwrap();
        let refs: Vec<_> = counts.iter().collect();
        let fm = assemble_from_counts(&x_rows, &refs, &vocab).unwrap();
        println!("{regime:?}: features {:?}", t1.elapsed());

        let t2 = Instant::now();
        let lmax = lambda_max(&fm, &t);
        let path = lambda_path(lmax, config.lambda_path.count, config.lambda_path.min_ratio);
        let sel = cv_select_lambda(&fm, &t, config.cv_folds, &path, 42, 0).unwrap();
        println!("{regime:?}: cv {:?} lambda*={}", t2.elapsed(), sel.lambda);

        let t3 = Instant::now();
        let (model, diag) =
            fit_l1_logistic_with_diagnostics(&fm, &t, sel.lambda, None).unwrap();
        println!(
            "{regime:?}: final fit {:?} sweeps={} nnz={}",
            t3.elapsed(),
            diag.sweeps,
            model.n_nonzero()
        );

        // one cold bootstrap-style refit for cost estimate
        let t4 = Instant::now();
        let (_m2, d2) = fit_l1_logistic_with_diagnostics(&fm, &t, sel.lambda, None).unwrap();
        println!("{regime:?}: refit {:?} sweeps={}", t4.elapsed(), d2.sweeps);
    }
}
