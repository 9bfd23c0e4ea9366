// Temporary probe: tau1 realization when outcome noise has its own
// per-unit substream (domain 6).
use leaksim::config::{Preset, SimConfig};
use leaksim::dgp::{draw_confounders, draw_unobserved, outcome_mean, true_propensity};
use leaksim::estimators::ols_ate;
use leaksim::rng::substream;
use leaksim::scalar::Scalar;
use leaksim::Unit;

fn gen(config: &SimConfig, seed: u64) -> Vec<Unit> {
    (0..config.n as u64)
        .map(|id| {
            let mut rng = substream(seed, 1, id);
            let x = draw_confounders::<f64, _>(&mut rng);
            let u = draw_unobserved(&mut rng);
            let pi = true_propensity(&x, u, &config.dgp);
            let t = if f64::unit_uniform(&mut rng) < pi { 1 } else { 0 };
            let mut yrng = substream(seed, 6, id);
            let z: f64 = Scalar::standard_normal(&mut yrng);
            let y = outcome_mean(&x, u, t, &config.dgp) + config.dgp.outcome_sigma * z;
            Unit {
                id,
                x,
                u,
                t,
                y,
                pi_true: pi,
                document: Default::default(),
            }
        })
        .collect()
}

fn main() {
    for (b, t_int) in [(1.8f64, -0.7f64), (1.7, -0.6), (1.75, -0.65), (1.85, -0.75)] {
        let mut config = SimConfig::default();
        config.apply_preset(Preset::Desk);
        let d = &mut config.dgp;
        d.treat_weight_u = b;
        d.treat_intercept = t_int;
        d.outcome_weight_u = -5.0;
        d.outcome_intercept = 14.0;

        let t1_42 = ols_ate(&gen(&config, 42), true).unwrap();
        let t2_42 = ols_ate(&gen(&config, 42), false).unwrap();
        let reps: Vec<f64> = (100..250)
            .map(|s| ols_ate(&gen(&config, s), true).unwrap())
            .collect();
        let mean = reps.iter().sum::<f64>() / reps.len() as f64;
        let sd = (reps.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (reps.len() - 1) as f64)
            .sqrt();
        println!(
            "b={b:.2} t_int={t_int:.2}: tau1@42={t1_42:.3} z42={:+.2} tau2@42={t2_42:.3}",
            (t1_42 - mean) / sd
        );
    }
}
