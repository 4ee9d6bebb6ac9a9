use proptest::prelude::*;
use spikesel::pwq::{BivarQuad, Candidate, PiecewiseQuadratic, Quad1};

fn quad() -> impl Strategy<Value = Quad1> {
    (0.0..3.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(a, b, c)| Quad1::new(a, b, c))
}

/// Piecewise quadratic on ℝ with 1..=4 pieces (not necessarily continuous).
fn pwq() -> impl Strategy<Value = PiecewiseQuadratic> {
    (1usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0..10.0f64, n - 1),
            prop::collection::vec(quad(), n),
        )
            .prop_filter_map("distinct breakpoints", |(mut b, q)| {
                b.sort_by(f64::total_cmp);
                if b.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                    return None;
                }
                let mut breaks = vec![f64::NEG_INFINITY];
                breaks.extend(b);
                breaks.push(f64::INFINITY);
                PiecewiseQuadratic::from_breaks(&breaks, &q).ok()
            })
    })
}

fn bivar() -> impl Strategy<Value = BivarQuad> {
    (0.1..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(
        |(aa, u, v, w, p, c)| {
            // aa α² + ap αφ + pp φ² with pp ≥ ap²/(4aa) keeps it bounded below in α for fixed φ
            let ap = u;
            let pp = ap * ap / (4.0 * aa) + v.abs();
            BivarQuad { aa, ap, pp, a: w, p, c }
        },
    )
}

fn grid() -> impl Iterator<Item = f64> {
    (0..1000).map(|i| -25.0 + 50.0 * i as f64 / 999.0)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn add_matches_pointwise_sum(p in pwq(), q in pwq()) {
        let s = p.add(&q).unwrap();
        for x in grid() {
            prop_assert!(close(s.eval(x), p.eval(x) + q.eval(x), 1e-8), "x={}", x);
        }
    }

    #[test]
    fn min_is_lower_envelope(p in pwq(), q in pwq()) {
        let (m, sides) = p.pointwise_min(&q).unwrap();
        prop_assert_eq!(sides.len(), m.len());
        prop_assert!(m.len() <= 2 * (p.len() + q.len()), "{} pieces from {} and {}", m.len(), p.len(), q.len());
        for x in grid() {
            prop_assert!((m.eval(x) - p.eval(x).min(q.eval(x))).abs() <= 1e-9 * (1.0 + m.eval(x).abs()), "x={}", x);
        }
    }

    #[test]
    fn envelope_of_many(fs in prop::collection::vec(pwq(), 1..8)) {
        let env = PiecewiseQuadratic::lower_envelope(&fs).unwrap();
        for x in grid() {
            let want = fs.iter().map(|f| f.eval(x)).fold(f64::INFINITY, f64::min);
            prop_assert!((env.function.eval(x) - want).abs() <= 1e-9 * (1.0 + want.abs()));
            let lab = env.labels[env.function.pieces().iter().position(|pc| x < pc.hi).unwrap_or(env.labels.len() - 1)];
            prop_assert!(close(fs[lab].eval(x), want, 1e-8));
        }
    }

    #[test]
    fn min_over_alpha_matches_clamped_minimiser(q in bivar(), off in pwq()) {
        let c = Candidate::new(q, off, 0);
        let m = c.min_over_alpha_nonneg().unwrap();
        for phi in grid() {
            let a = q.argmin_alpha_nonneg(phi);
            let direct = c.eval(a, phi);
            prop_assert!(close(m.eval(phi), direct, 1e-8), "phi={}", phi);
            // no α ≥ 0 on a coarse grid does better
            for k in 0..50 {
                let alpha = k as f64 * 0.5;
                prop_assert!(c.eval(alpha, phi) >= m.eval(phi) - 1e-8 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn scale_arg_evaluates_at_scaled_alpha(q in bivar(), k in 0.1..5.0f64) {
        let c = Candidate::new(q, PiecewiseQuadratic::constant(0.0), 0);
        let s = c.scale_arg(k).unwrap();
        for (alpha, phi) in [(0.0, 1.0), (1.5, -2.0), (4.0, 3.0), (0.3, 0.0)] {
            prop_assert!(close(s.eval(alpha, phi), c.eval(alpha * k, phi), 1e-12));
        }
        let back = s.scale_arg(1.0 / k).unwrap().quad;
        for (x, y) in [(back.aa, q.aa), (back.ap, q.ap), (back.a, q.a), (back.pp, q.pp), (back.p, q.p), (back.c, q.c)] {
            prop_assert!(close(x, y, 1e-12));
        }
    }

    #[test]
    fn below_sets_cover_the_line(p in pwq(), q in pwq()) {
        let pq = p.below_set(&q).unwrap();
        let qp = q.below_set(&p).unwrap();
        for x in grid() {
            let (a, b) = (p.eval(x), q.eval(x));
            let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
            prop_assert!(pq.contains(x) || qp.contains(x), "x={} uncovered", x);
            if a < b - tol {
                prop_assert!(pq.contains(x) && !qp.contains(x) || qp.distance_to_boundary(x) < 1e-6);
            }
            if b < a - tol {
                prop_assert!(qp.contains(x) && !pq.contains(x) || pq.distance_to_boundary(x) < 1e-6);
            }
        }
    }
}

#[test]
fn below_set_of_self_is_everything() {
    let p = PiecewiseQuadratic::from_breaks(
        &[f64::NEG_INFINITY, 0.0, f64::INFINITY],
        &[Quad1::new(1.0, 0.0, 0.0), Quad1::new(0.0, 1.0, 0.0)],
    )
    .unwrap();
    let s = p.below_set(&p).unwrap();
    assert_eq!(s.intervals().len(), 1);
    assert!(s.contains(-1e9) && s.contains(0.0) && s.contains(1e9));
}

#[test]
fn worked_example_forward_minimum() {
    // min over α of ½(8 − 2α)² + ½(5.6 − 0.4φ − α)² and ½(5.6 − 0.4φ − α)² + 1
    let d = BivarQuad::data_term(5.6, -0.4);
    let f1 = Candidate::new(BivarQuad::data_term(8.0, 0.0).scale_alpha(2.0).add(&d), PiecewiseQuadratic::constant(0.0), 0);
    let f2 = Candidate::new(d, PiecewiseQuadratic::constant(1.0), 1);
    let (m, _) = f1
        .min_over_alpha_nonneg()
        .unwrap()
        .pointwise_min(&f2.min_over_alpha_nonneg().unwrap())
        .unwrap();
    let b = m.breakpoints();
    assert_eq!(b.len(), 3, "{m:?}");
    for (got, want) in b.iter().zip([0.047, 7.953, 14.0]) {
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
    let q = Quad1::new(0.064, -0.512, 1.024);
    assert!(m.pieces()[0].q.approx_eq(&Quad1::constant(1.0), 1e-12));
    assert!(m.pieces()[1].q.approx_eq(&q, 1e-12));
    assert!(m.pieces()[2].q.approx_eq(&Quad1::constant(1.0), 1e-12));
}
