//! Gaussian distributions truncated to a finite union of intervals.
//!
//! All masses are carried as logarithms. Upper-tail probabilities use the
//! complementary error function up to `z = 5` and the continued fraction for
//! the Mills ratio beyond, so ratios of far-tail masses keep full precision.

use libm::erfc;

use crate::error::{Error, Result};
use crate::pwq::IntervalSet;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Intervals holding less than this fraction of the total mass are ignored.
const RELATIVE_MASS_FLOOR: f64 = 1e-300;

/// Bisection stops when the bracket is narrower than this times the scale.
const ROOT_TOL: f64 = 1e-8;
const MAX_BISECTIONS: usize = 200;
const INITIAL_BRACKET: f64 = 4.0;
const MAX_BRACKET: f64 = 1e6;

/// `ln P(Z > z)` for standard normal Z.
pub fn log_sf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    if z < 5.0 {
        return (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln();
    }
    // Mills ratio R(z) = 1/(z + 1/(z + 2/(z + 3/(z + …)))), modified Lentz
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    -0.5 * z * z - LN_SQRT_2PI - f.ln()
}

/// `P(Z > z)` for standard normal Z.
pub fn normal_sf(z: f64) -> f64 {
    log_sf(z).exp()
}

pub fn normal_cdf(z: f64) -> f64 {
    log_sf(-z).exp()
}

/// `ln(e^a − e^b)` for `a ≥ b`.
fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = b - a;
    if d > -std::f64::consts::LN_2 {
        a + (-d.exp_m1()).ln()
    } else {
        a + (-d.exp()).ln_1p()
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln P(a < Z < b)` for standard normal Z.
pub fn log_interval_mass(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        log_diff_exp(log_sf(a), log_sf(b))
    } else if b <= 0.0 {
        log_diff_exp(log_sf(-b), log_sf(-a))
    } else {
        // both tails are at most ½
        (-(normal_sf(b) + normal_sf(-a))).ln_1p()
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedGaussian {
    mu: f64,
    scale: f64,
    region: IntervalSet,
    log_total: f64,
}

impl TruncatedGaussian {
    pub fn new(mu: f64, scale: f64, region: &IntervalSet) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("scale must be positive and finite, got {scale}")));
        }
        if !mu.is_finite() {
            return Err(Error::invalid(format!("mean must be finite, got {mu}")));
        }
        let logs: Vec<f64> = region
            .intervals()
            .iter()
            .map(|i| log_interval_mass((i.lo - mu) / scale, (i.hi - mu) / scale))
            .collect();
        let total = log_sum_exp(&logs);
        if !total.is_finite() {
            return Err(Error::EmptyRegion);
        }
        let floor = total + RELATIVE_MASS_FLOOR.ln();
        let kept: Vec<_> = region
            .intervals()
            .iter()
            .zip(&logs)
            .filter(|(_, l)| **l >= floor)
            .map(|(i, _)| *i)
            .collect();
        if kept.len() < region.intervals().len() {
            log::debug!("dropped {} negligible intervals", region.intervals().len() - kept.len());
        }
        Ok(Self { mu, scale, region: IntervalSet::from_intervals(kept), log_total: total })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn region(&self) -> &IntervalSet {
        &self.region
    }

    fn log_mass_between(&self, lo: f64, hi: f64) -> f64 {
        let parts: Vec<f64> = self
            .region
            .intervals()
            .iter()
            .filter_map(|i| {
                let (a, b) = (i.lo.max(lo), i.hi.min(hi));
                (a < b).then(|| log_interval_mass((a - self.mu) / self.scale, (b - self.mu) / self.scale))
            })
            .collect();
        log_sum_exp(&parts)
    }

    pub fn log_cdf(&self, x: f64) -> f64 {
        (self.log_mass_between(f64::NEG_INFINITY, x) - self.log_total).min(0.0)
    }

    pub fn log_sf(&self, x: f64) -> f64 {
        (self.log_mass_between(x, f64::INFINITY) - self.log_total).min(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.log_cdf(x).exp()
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.log_sf(x).exp()
    }

    /// Smallest x with `sf(x) ≤ p`, to `1e−8·scale`.
    pub fn upper_quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
        }
        let target = p.ln();
        let g = |x: f64| self.log_sf(x) - target;
        let lo = self.region.infimum().unwrap();
        let hi = self.region.supremum().unwrap();
        let (lo, hi) = (
            if lo.is_finite() { lo } else { self.mu - 40.0 * self.scale },
            if hi.is_finite() { hi } else { self.mu + 40.0 * self.scale },
        );
        // a region much narrower than σ needs a finer tolerance
        bisect_decreasing(g, lo, hi, self.scale.min(hi - lo))
    }
}

/// Root of a decreasing function on `[lo, hi]`; the bracket must straddle it.
fn bisect_decreasing(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, scale: f64) -> Result<f64> {
    let tol = ROOT_TOL * scale;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Finds `θ` with `g(θ) = 0` for `g` decreasing in θ, expanding a bracket
/// around `center` by doubling.
fn solve_in_mean(g: impl Fn(f64) -> f64, center: f64, scale: f64, what: &str) -> Result<f64> {
    let mut w = INITIAL_BRACKET * scale;
    let mut lo = center - w;
    while !(g(lo) > 0.0) {
        if w > MAX_BRACKET * scale {
            return Err(Error::NoConvergence(format!("{what}: no lower bracket within {w:e} of {center}")));
        }
        w *= 2.0;
        lo = center - w;
    }
    let mut w = INITIAL_BRACKET * scale;
    let mut hi = center + w;
    while !(g(hi) < 0.0) {
        if w > MAX_BRACKET * scale {
            return Err(Error::NoConvergence(format!("{what}: no upper bracket within {w:e} of {center}")));
        }
        w *= 2.0;
        hi = center + w;
    }
    bisect_decreasing(g, lo, hi, scale)
}

fn tested_region(phi_obs: f64, s: &IntervalSet) -> Result<IntervalSet> {
    if !(phi_obs > 0.0) {
        return Err(Error::invalid(format!("observed statistic must be positive, got {phi_obs}")));
    }
    let region = s.positive_part();
    if !region.contains(phi_obs) {
        return Err(Error::invalid(format!("observed statistic {phi_obs} is not in the conditioning set")));
    }
    Ok(region)
}

/// Selective p-value: survival at `phi_obs` of N(0, scale²) truncated to
/// `S ∩ (0, ∞)`.
pub fn pvalue(phi_obs: f64, scale: f64, s: &IntervalSet) -> Result<f64> {
    let region = tested_region(phi_obs, s)?;
    Ok(TruncatedGaussian::new(0.0, scale, &region)?.sf(phi_obs).clamp(0.0, 1.0))
}

/// Equal-tailed selective confidence interval for the mean at level `1 − α`.
pub fn ci(phi_obs: f64, scale: f64, s: &IntervalSet, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let region = tested_region(phi_obs, s)?;
    let target = (0.5 * alpha).ln();
    let dist = |theta: f64| TruncatedGaussian::new(theta, scale, &region);
    // sf_θ(φ) increases with θ; cdf_θ(φ) decreases
    let lower = solve_in_mean(
        |t| dist(t).map_or(f64::NAN, |d| target - d.log_sf(phi_obs)),
        phi_obs,
        scale,
        "lower confidence bound",
    )?;
    let upper = solve_in_mean(
        |t| dist(t).map_or(f64::NAN, |d| d.log_cdf(phi_obs) - target),
        phi_obs,
        scale,
        "upper confidence bound",
    )?;
    Ok((lower, upper))
}

/// Probability that the level-α selective test rejects when the true mean of
/// ν⊤Y is `delta`.
pub fn power_curve(delta: f64, scale: f64, s: &IntervalSet, alpha: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be non-negative, got {delta}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let region = s.positive_part();
    let null = TruncatedGaussian::new(0.0, scale, &region)?;
    let q = null.upper_quantile(alpha)?;
    Ok(TruncatedGaussian::new(delta, scale, &region)?.sf(q))
}
