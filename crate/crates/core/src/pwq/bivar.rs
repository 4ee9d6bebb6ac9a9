use super::piecewise::PiecewiseQuadratic;
use super::quad::Quad1;
use crate::error::{Error, Result};

/// `aa·α² + ap·α·φ + pp·φ² + a·α + p·φ + c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BivarQuad {
    pub aa: f64,
    pub ap: f64,
    pub pp: f64,
    pub a: f64,
    pub p: f64,
    pub c: f64,
}

impl BivarQuad {
    /// A quadratic in α alone.
    pub fn in_alpha(q: Quad1) -> Self {
        Self { aa: q.a, a: q.b, c: q.c, ..Default::default() }
    }

    /// `½(u + v·φ − α)²`, the residual of one observation on the perturbed path.
    pub fn data_term(u: f64, v: f64) -> Self {
        Self {
            aa: 0.5,
            ap: -v,
            pp: 0.5 * v * v,
            a: -u,
            p: u * v,
            c: 0.5 * u * u,
        }
    }

    #[inline]
    pub fn eval(&self, alpha: f64, phi: f64) -> f64 {
        self.aa * alpha * alpha
            + self.ap * alpha * phi
            + self.pp * phi * phi
            + self.a * alpha
            + self.p * phi
            + self.c
    }

    pub fn add(&self, o: &BivarQuad) -> BivarQuad {
        BivarQuad {
            aa: self.aa + o.aa,
            ap: self.ap + o.ap,
            pp: self.pp + o.pp,
            a: self.a + o.a,
            p: self.p + o.p,
            c: self.c + o.c,
        }
    }

    /// Coefficients of `(α, φ) ↦ self(k·α, φ)`.
    pub fn scale_alpha(&self, k: f64) -> BivarQuad {
        BivarQuad {
            aa: self.aa * k * k,
            ap: self.ap * k,
            a: self.a * k,
            ..*self
        }
    }

    /// `φ ↦ min_{α ≥ 0} self(α, φ)`.
    ///
    /// The unconstrained minimiser `α*(φ) = −(ap·φ + a) / (2·aa)` is clamped at
    /// zero, which adds a breakpoint where `ap·φ + a = 0`.
    pub fn min_over_alpha_nonneg(&self) -> Result<PiecewiseQuadratic> {
        let at_zero = Quad1::new(self.pp, self.p, self.c);
        if self.aa <= 0.0 {
            if self.aa < 0.0 || self.ap != 0.0 || self.a < 0.0 {
                return Err(Error::Unbounded);
            }
            return Ok(PiecewiseQuadratic::quadratic(at_zero));
        }
        // value at α*: subtract (ap·φ + a)² / (4·aa)
        let k = 0.25 / self.aa;
        let interior = Quad1::new(
            self.pp - self.ap * self.ap * k,
            self.p - 2.0 * self.ap * self.a * k,
            self.c - self.a * self.a * k,
        );
        if self.ap == 0.0 {
            let q = if self.a <= 0.0 { interior } else { at_zero };
            return Ok(PiecewiseQuadratic::quadratic(q));
        }
        let root = -self.a / self.ap;
        if !root.is_finite() {
            let q = if self.a <= 0.0 { interior } else { at_zero };
            return Ok(PiecewiseQuadratic::quadratic(q));
        }
        // α* ≥ 0 ⇔ ap·φ + a ≤ 0
        let (left, right) = if self.ap > 0.0 { (interior, at_zero) } else { (at_zero, interior) };
        PiecewiseQuadratic::from_breaks(&[f64::NEG_INFINITY, root, f64::INFINITY], &[left, right])
    }

    /// The clamped minimiser `max(0, α*(φ))`.
    pub fn argmin_alpha_nonneg(&self, phi: f64) -> f64 {
        if self.aa <= 0.0 {
            return 0.0;
        }
        (-(self.ap * phi + self.a) / (2.0 * self.aa)).max(0.0)
    }
}

/// One member of a cost collection: a bivariate quadratic plus an offset
/// depending on φ only.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub quad: BivarQuad,
    pub offset: PiecewiseQuadratic,
    /// Most recent changepoint this candidate encodes; diagnostic only.
    pub anchor: usize,
}

impl Candidate {
    pub fn new(quad: BivarQuad, offset: PiecewiseQuadratic, anchor: usize) -> Self {
        Self { quad, offset, anchor }
    }

    pub fn eval(&self, alpha: f64, phi: f64) -> f64 {
        self.quad.eval(alpha, phi) + self.offset.eval(phi)
    }

    /// `φ ↦ min_{α ≥ 0} (quad(α, φ) + offset(φ))`.
    pub fn min_over_alpha_nonneg(&self) -> Result<PiecewiseQuadratic> {
        self.quad.min_over_alpha_nonneg()?.add(&self.offset)
    }

    /// `(α, φ) ↦ self(k·α, φ)`.
    pub fn scale_arg(&self, k: f64) -> Result<Candidate> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::invalid(format!("scale factor must be positive, got {k}")));
        }
        Ok(Candidate { quad: self.quad.scale_alpha(k), offset: self.offset.clone(), anchor: self.anchor })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_sq(y: f64) -> BivarQuad {
        // ½(y − α)²
        BivarQuad::data_term(y, 0.0)
    }

    #[test]
    fn single_point_cost_has_zero_minimum() {
        let c = Candidate::new(half_sq(8.0), PiecewiseQuadratic::constant(0.0), 0);
        let m = c.min_over_alpha_nonneg().unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.eval(3.0).abs() < 1e-12);
        assert_eq!(c.quad.argmin_alpha_nonneg(0.0), 8.0);
    }

    #[test]
    fn pure_alpha_square_returns_offset() {
        let offset = PiecewiseQuadratic::from_breaks(
            &[f64::NEG_INFINITY, 1.0, f64::INFINITY],
            &[Quad1::new(1.0, 0.0, 0.0), Quad1::new(0.0, 2.0, -1.0)],
        )
        .unwrap();
        let c = Candidate::new(BivarQuad { aa: 1.0, ..Default::default() }, offset.clone(), 0);
        let m = c.min_over_alpha_nonneg().unwrap();
        for x in [-3.0, 0.0, 0.999, 1.0, 7.5] {
            assert_eq!(m.eval(x), offset.eval(x));
        }
    }

    #[test]
    fn reverse_example_minimum() {
        // ½(3 − α/2)² + ½(2.8 + 0.8φ − α)²
        let f = half_sq(3.0).scale_alpha(0.5).add(&BivarQuad::data_term(2.8, 0.8));
        let m = f.min_over_alpha_nonneg().unwrap();
        assert_eq!(m.len(), 2);
        assert!((m.breakpoints()[0] + 5.375).abs() < 1e-12);
        let (l, r) = (m.pieces()[0].q, m.pieces()[1].q);
        assert!(l.approx_eq(&Quad1::new(0.32, 2.24, 8.42), 1e-12));
        assert!(r.approx_eq(&Quad1::new(0.064, -0.512, 1.024), 1e-12));
    }

    #[test]
    fn scale_example() {
        // ½(8 − α)² scaled by 1/γ = 2 → ½(8 − 2α)²
        let c = Candidate::new(half_sq(8.0), PiecewiseQuadratic::constant(0.0), 0);
        let s = c.scale_arg(2.0).unwrap();
        assert_eq!(s.quad, BivarQuad { aa: 2.0, a: -16.0, c: 32.0, ..Default::default() });
        assert_eq!(c.scale_arg(1.0).unwrap().quad, c.quad);
        assert!(c.scale_arg(0.0).is_err());
        assert!(c.scale_arg(-1.0).is_err());
    }

    #[test]
    fn unbounded_below_is_reported() {
        let q = BivarQuad { a: -1.0, ..Default::default() };
        assert_eq!(q.min_over_alpha_nonneg().unwrap_err(), Error::Unbounded);
        let q = BivarQuad { ap: 1.0, ..Default::default() };
        assert_eq!(q.min_over_alpha_nonneg().unwrap_err(), Error::Unbounded);
        let q = BivarQuad { a: 2.0, pp: 1.0, ..Default::default() };
        assert_eq!(q.min_over_alpha_nonneg().unwrap().eval(2.0), 4.0);
    }
}
