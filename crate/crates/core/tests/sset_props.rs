use proptest::prelude::*;
use spikesel::l0solver::{fit_with, CostPath, Pruning};
use spikesel::sset::{backward_collection, compute_s_cached, cost_with_spike, cost_without_spike, forward_collection, PrefixCosts};
use spikesel::{Contrast, Trace};

#[derive(Debug)]
struct Case {
    tr: Trace,
    c: Contrast,
    lambda: f64,
}

fn case() -> impl Strategy<Value = Case> {
    (
        prop::collection::vec(-1.0..5.0f64, 6..40),
        prop::sample::select(vec![0.6, 0.8, 0.9, 0.95]),
        0.0..1.0f64,
        1usize..8,
        0.05..3.0f64,
    )
        .prop_map(|(y, g, frac, h, lambda)| {
            let tau = 1 + ((y.len() - 2) as f64 * frac) as usize;
            let tr = Trace::new(y, g).unwrap();
            let c = Contrast::build(tr.y(), tau, h, g).unwrap();
            Case { tr, c, lambda }
        })
}

/// `min_q q(α)` over the unpruned candidates at the end of `ys`.
fn direct_cost(ys: &[f64], decay: f64, lambda: f64, alpha: f64) -> f64 {
    let n = ys.len();
    let p = CostPath::run(ys, decay, lambda, Pruning::None, &[n]);
    p.snapshots[&n].iter().map(|c| c.q.eval(alpha)).fold(f64::INFINITY, f64::min)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

const PHIS: [f64; 7] = [-6.0, -2.0, -0.3, 0.0, 0.7, 3.0, 9.0];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn collections_match_direct_recursion(k in case(), alphas in prop::collection::vec(0.0..8.0f64, 4)) {
        let Case { tr, c, lambda } = k;
        let prefix = PrefixCosts::new(&tr, lambda, &[c.tau], c.h);
        let fwd = forward_collection(&tr, &c, lambda, &prefix).unwrap();
        let bwd = backward_collection(&tr, &c, lambda, &prefix).unwrap();
        for phi in PHIS {
            let yp = c.perturb(tr.y(), phi);
            let rev: Vec<f64> = yp[c.tau..].iter().rev().copied().collect();
            for &a in &alphas {
                let want = direct_cost(&yp[..c.tau], tr.gamma(), lambda, a);
                prop_assert!(close(fwd.eval(a, phi), want, 1e-8), "fwd φ={} α={}: {} vs {}", phi, a, fwd.eval(a, phi), want);
                let want = direct_cost(&rev, 1.0 / tr.gamma(), lambda, a);
                prop_assert!(close(bwd.eval(a, phi), want, 1e-8), "bwd φ={} α={}: {} vs {}", phi, a, bwd.eval(a, phi), want);
            }
        }
    }

    #[test]
    fn smaller_cost_is_the_optimum(k in case()) {
        let Case { tr, c, lambda } = k;
        let prefix = PrefixCosts::new(&tr, lambda, &[c.tau], c.h);
        let fwd = forward_collection(&tr, &c, lambda, &prefix).unwrap();
        let bwd = backward_collection(&tr, &c, lambda, &prefix).unwrap();
        let with = cost_with_spike(&fwd, &bwd, lambda).unwrap();
        let without = cost_without_spike(&fwd, &bwd, tr.gamma()).unwrap();
        for phi in PHIS {
            let yp = c.perturb(tr.y(), phi);
            let opt = fit_with(&Trace::new(yp, tr.gamma()).unwrap(), lambda, Pruning::None).unwrap().objective;
            let got = with.eval(phi).min(without.eval(phi));
            prop_assert!(close(got, opt, 1e-8), "φ={}: {} vs {}", phi, got, opt);
        }
    }

    #[test]
    fn logical_counts_follow_the_window(k in case()) {
        let Case { tr, c, lambda } = k;
        let prefix = PrefixCosts::new(&tr, lambda, &[c.tau], c.h);
        let fwd = forward_collection(&tr, &c, lambda, &prefix).unwrap();
        let bwd = backward_collection(&tr, &c, lambda, &prefix).unwrap();
        prop_assert_eq!(fwd.frontier, c.tau);
        prop_assert_eq!(bwd.frontier, c.tau + 1);
        prop_assert_eq!(fwd.logical_count, if c.tau > c.h { c.h + 1 } else { c.tau });
        prop_assert_eq!(bwd.logical_count, if c.tau + c.h < tr.len() { c.h + 1 } else { tr.len() - c.tau });
    }
}

#[test]
fn zero_penalty_keeps_every_spike() {
    let tr = Trace::new(vec![1.0, 3.0, 0.5, 2.0, 4.0, 1.0, 0.2, 0.1], 0.8).unwrap();
    for tau in 1..tr.len() {
        let c = Contrast::build(tr.y(), tau, 3, tr.gamma()).unwrap();
        let prefix = PrefixCosts::new(&tr, 0.0, &[tau], 3);
        let s = compute_s_cached(&tr, &c, 0.0, &prefix).unwrap().set;
        assert_eq!(s.intervals().len(), 1, "τ={tau}: {:?}", s.to_pairs());
        assert!(s.contains(-1e6) && s.contains(1e6));
    }
}

#[test]
fn worked_example_cost_pieces() {
    // y = (8, 4, 6, 3), γ = 0.5, λ = 1, τ = 2, h = 1
    let tr = Trace::new(vec![8.0, 4.0, 6.0, 3.0], 0.5).unwrap();
    let c = Contrast::build(tr.y(), 2, 1, 0.5).unwrap();
    let prefix = PrefixCosts::new(&tr, 1.0, &[2], 1);
    let fwd = forward_collection(&tr, &c, 1.0, &prefix).unwrap();
    let bwd = backward_collection(&tr, &c, 1.0, &prefix).unwrap();
    let with = cost_with_spike(&fwd, &bwd, 1.0).unwrap();
    // independent evaluation of C(φ) from its pieces
    let c_direct = |phi: f64| {
        let fwd_min = (0.064 * phi * phi - 0.512 * phi + 1.024).min(1.0);
        let u3 = 2.8 + 0.8 * phi;
        let bwd_min = {
            // ½(u3 − α)² + ½(3 − α/2)², or a fresh changepoint at 3
            let a = ((u3 + 1.5) / 1.25).max(0.0);
            let keep = 0.5 * (u3 - a).powi(2) + 0.5 * (3.0 - 0.5 * a).powi(2);
            keep.min(1.0 + 0.5 * (u3 - u3.max(0.0)).powi(2))
        };
        fwd_min + bwd_min + 1.0
    };
    for i in 0..400 {
        let phi = -10.0 + 0.05 * i as f64;
        assert!((with.eval(phi) - c_direct(phi)).abs() < 1e-9, "φ={phi}: {} vs {}", with.eval(phi), c_direct(phi));
    }
}
