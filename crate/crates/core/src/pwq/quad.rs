use serde::{Deserialize, Serialize};

/// Roots closer than this, relative to their size, are treated as one root.
pub const ROOT_MERGE_REL: f64 = 1e-10;

/// Relative size under which a coefficient of a difference is cancellation
/// noise.
const CANCEL_REL: f64 = 1e-13;

/// `a·x² + b·x + c`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quad1 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quad1 {
    pub const ZERO: Quad1 = Quad1 { a: 0.0, b: 0.0, c: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub const fn constant(c: f64) -> Self {
        Self { a: 0.0, b: 0.0, c }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }

    pub fn add(&self, o: &Quad1) -> Quad1 {
        Quad1::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }

    pub fn sub(&self, o: &Quad1) -> Quad1 {
        Quad1::new(self.a - o.a, self.b - o.b, self.c - o.c)
    }

    pub fn magnitude(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }

    /// Coefficient-wise comparison, each coefficient relative to its own size.
    pub fn approx_eq(&self, o: &Quad1, rel: f64) -> bool {
        let close = |x: f64, y: f64| (x - y).abs() <= rel * (1.0 + x.abs().max(y.abs()));
        close(self.a, o.a) && close(self.b, o.b) && close(self.c, o.c)
    }

    /// `self − o` with every coefficient that is cancellation noise relative to
    /// the same coefficient of the operands set to zero. Coefficients are
    /// compared one by one because they carry different units of x.
    pub fn sub_clean(&self, o: &Quad1) -> Quad1 {
        let f = |x: f64, y: f64| {
            let d = x - y;
            if d.abs() <= CANCEL_REL * x.abs().max(y.abs()) {
                0.0
            } else {
                d
            }
        };
        Quad1::new(f(self.a, o.a), f(self.b, o.b), f(self.c, o.c))
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0
    }

    /// Real roots in ascending order, with near-duplicates coalesced. For a
    /// difference of two quadratics, build it with [`Quad1::sub_clean`] so
    /// cancellation noise does not manufacture spurious roots.
    pub fn roots(&self) -> Vec<f64> {
        let (a, b, c) = (self.a, self.b, self.c);
        if a == 0.0 {
            if b == 0.0 {
                return Vec::new();
            }
            return vec![-c / b];
        }
        let disc = b * b - 4.0 * a * c;
        let disc_tol = 1e-12 * (b * b + (4.0 * a * c).abs());
        if disc < -disc_tol {
            return Vec::new();
        }
        if disc <= disc_tol {
            return vec![-b / (2.0 * a)];
        }
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        let (mut r1, mut r2) = if q == 0.0 {
            // b == 0 and c == 0
            (0.0, 0.0)
        } else {
            (q / a, c / q)
        };
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        if r2 - r1 <= ROOT_MERGE_REL * r1.abs().max(r2.abs()) {
            vec![0.5 * (r1 + r2)]
        } else {
            vec![r1, r2]
        }
    }

    /// Minimum of the quadratic over `[lo, hi]` (either end may be infinite).
    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = f64::INFINITY;
        for x in [lo, hi] {
            if x.is_finite() {
                best = best.min(self.eval(x));
            }
        }
        if self.a > 0.0 {
            let v = -self.b / (2.0 * self.a);
            if v > lo && v < hi {
                best = best.min(self.eval(v));
            }
        } else if self.a < 0.0 || self.b != 0.0 {
            if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
                let left = lo == f64::NEG_INFINITY && (self.a < 0.0 || self.b > 0.0);
                let right = hi == f64::INFINITY && (self.a < 0.0 || self.b < 0.0);
                if left || right {
                    return f64::NEG_INFINITY;
                }
            }
        } else if !lo.is_finite() && !hi.is_finite() {
            best = self.c;
        }
        best
    }
}

/// A point strictly inside `(lo, hi)`, finite even when an end is infinite.
pub(crate) fn interior_point(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + lo.abs().max(1.0),
        (false, true) => hi - hi.abs().max(1.0),
        (false, false) => 0.0,
    }
}
