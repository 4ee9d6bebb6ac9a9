use proptest::prelude::*;
use spikesel::l0solver::{brute_force_fit, calibrate_lambda, fit_with, fit_with_intercept, CostPath, Pruning};
use spikesel::sim::{generate, SimConfig};
use spikesel::{fit, Trace};

fn trace(max_t: usize) -> impl Strategy<Value = Trace> {
    (2usize..=max_t, prop::sample::select(vec![0.5, 0.8, 0.9, 0.95, 0.98]))
        .prop_flat_map(|(t, g)| (prop::collection::vec(-1.0..6.0f64, t), Just(g)))
        .prop_map(|(y, g)| Trace::new(y, g).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dp_matches_exhaustive_search(tr in trace(12), lambda in 0.01..5.0f64) {
        let dp = fit(&tr, lambda).unwrap();
        let bf = brute_force_fit(&tr, lambda).unwrap();
        prop_assert!(close(dp.objective, bf.objective, 1e-9), "{} vs {}", dp.objective, bf.objective);
        prop_assert!(close(dp.recompute_objective(tr.y()), dp.objective, 1e-9));
    }

    #[test]
    fn pruning_does_not_change_the_answer(tr in trace(60), lambda in 0.01..5.0f64) {
        let a = fit_with(&tr, lambda, Pruning::Functional).unwrap();
        let b = fit_with(&tr, lambda, Pruning::None).unwrap();
        prop_assert!(close(a.objective, b.objective, 1e-9));
    }

    #[test]
    fn reversed_recursion_reaches_same_optimum(tr in trace(40), lambda in 0.01..5.0f64) {
        let fwd = CostPath::run(tr.y(), tr.gamma(), lambda, Pruning::Functional, &[]);
        let rev: Vec<f64> = tr.y().iter().rev().copied().collect();
        let bwd = CostPath::run(&rev, 1.0 / tr.gamma(), lambda, Pruning::Functional, &[]);
        let t = tr.len();
        prop_assert!(close(fwd.optimal[t], bwd.optimal[t], 1e-8), "{} vs {}", fwd.optimal[t], bwd.optimal[t]);
    }

    #[test]
    fn optimum_is_monotone_in_lambda(tr in trace(40), l1 in 0.01..5.0f64, l2 in 0.01..5.0f64) {
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let a = fit(&tr, lo).unwrap();
        let b = fit(&tr, hi).unwrap();
        prop_assert!(a.objective <= b.objective + 1e-9 * (1.0 + b.objective.abs()));
        prop_assert!(a.spikes.len() >= b.spikes.len());
    }

    #[test]
    fn spikes_are_strictly_increasing_interior(tr in trace(60), lambda in 0.01..5.0f64) {
        let f = fit(&tr, lambda).unwrap();
        prop_assert!(f.spikes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(f.spikes.iter().all(|&s| s >= 1 && s < tr.len()));
        prop_assert!(f.calcium.iter().all(|&c| c >= -1e-12));
    }
}

#[test]
fn calibration_hits_the_target_count() {
    for seed in 0..5 {
        let cfg = SimConfig { t: 1500, spike_rate: 0.01, seed, ..SimConfig::default() };
        let d = generate(&cfg).unwrap();
        let tr = Trace::new(d.y, cfg.gamma).unwrap();
        let cal = calibrate_lambda(&tr, 15).unwrap();
        assert!(cal.count.abs_diff(15) <= 1, "seed {seed}: {} spikes", cal.count);
        assert_eq!(fit(&tr, cal.lambda).unwrap().spikes.len(), cal.count);
        assert_eq!(cal.warning, cal.count != 15);
    }
}

#[test]
fn intercept_grid_recovers_baseline() {
    let cfg = SimConfig { t: 800, spike_rate: 0.01, seed: 3, sigma: 0.05, ..SimConfig::default() };
    let d = generate(&cfg).unwrap();
    let y: Vec<f64> = d.y.iter().map(|v| v + 2.0).collect();
    let tr = Trace::new(y, cfg.gamma).unwrap();
    let betas: Vec<f64> = (0..=8).map(|i| 1.0 + 0.25 * i as f64).collect();
    let lambdas = [0.05, 0.1, 0.2, 0.5];
    let f = fit_with_intercept(&tr, &lambdas, &betas, d.spikes.len(), d.spikes.len()).unwrap();
    let b = f.beta0.unwrap();
    assert!((b - 2.0).abs() <= 0.25 + 1e-12, "beta0 = {b}");
    // the selected cell is the best among the admissible ones
    for &bb in &betas {
        for &l in &lambdas {
            let g = fit(&tr.shifted(bb), l).unwrap();
            if g.spikes.len().abs_diff(d.spikes.len()) <= d.spikes.len() {
                assert!(f.objective <= g.objective + 1e-9);
            }
        }
    }
}

// long decaying segments drive the curvature of old candidates to 1e20 and
// beyond, with their minimisers squeezed towards α = 0
#[test]
fn pruning_survives_long_fast_decays() {
    for seed in 0..40 {
        let gamma = [0.5, 0.7, 0.8][seed as usize % 3];
        let cfg = SimConfig { t: 300, gamma, sigma: 0.3, spike_rate: 0.03, seed, ..SimConfig::default() };
        let tr = Trace::new(generate(&cfg).unwrap().y, gamma).unwrap();
        for lambda in [0.1, 0.3, 1.0] {
            let a = fit_with(&tr, lambda, Pruning::Functional).unwrap();
            let b = fit_with(&tr, lambda, Pruning::None).unwrap();
            assert!(close(a.objective, b.objective, 1e-9), "seed {seed} λ {lambda}: {} vs {}", a.objective, b.objective);
        }
    }
}
