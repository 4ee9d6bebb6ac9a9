//! Exact solver for the ℓ0 exponential-decay spike problem
//!
//! ```text
//! minimise  ½ Σ_t (y_t − c_t)² + λ · #{t : c_{t+1} ≠ γ c_t}   over c ≥ 0
//! ```
//!
//! solved as a changepoint problem. Time indices in this module are 1-based: a
//! spike "at τ" means the calcium jumps between τ and τ + 1, so the first
//! segment is `1..=τ_1`, the next `τ_1+1..=τ_2`, and so on.
//!
//! The forward recursion keeps, for every admissible last changepoint, a
//! quadratic in the current calcium level α. Functional pruning drops
//! candidates that are nowhere minimal on α ≥ 0; it never changes the result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pwq::{PiecewiseQuadratic, Quad1};

/// Largest trace accepted by [`brute_force_fit`].
pub const BRUTE_FORCE_MAX_T: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    y: Vec<f64>,
    gamma: f64,
}

impl Trace {
    pub fn new(y: Vec<f64>, gamma: f64) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::invalid(format!("trace needs at least 2 samples, got {}", y.len())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at t={}", i + 1)));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Self { y, gamma })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `y − β₀`, same decay.
    pub fn shifted(&self, beta0: f64) -> Trace {
        Trace { y: self.y.iter().map(|v| v - beta0).collect(), gamma: self.gamma }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeFit {
    /// Changepoints τ̂_1 < … < τ̂_J, 1-based.
    pub spikes: Vec<usize>,
    /// Fitted ĉ_1..ĉ_T (excluding any baseline).
    pub calcium: Vec<f64>,
    pub objective: f64,
    pub lambda: f64,
    pub beta0: Option<f64>,
}

impl SpikeFit {
    /// Recomputes `½Σ(y − ĉ − β₀)² + λJ` from the stored fields.
    pub fn recompute_objective(&self, y: &[f64]) -> f64 {
        let b = self.beta0.unwrap_or(0.0);
        let rss: f64 = y
            .iter()
            .zip(&self.calcium)
            .map(|(yt, ct)| (yt - ct - b).powi(2))
            .sum();
        0.5 * rss + self.lambda * self.spikes.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pruning {
    None,
    #[default]
    Functional,
}

/// One candidate of the univariate cost: the cost of `y_{1:s}` given the last
/// changepoint `anchor` and calcium `α` at time `s`, as a quadratic in α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCandidate {
    pub anchor: usize,
    pub q: Quad1,
}

/// `α ↦ min_{α' ≥ 0}` of a quadratic with positive leading coefficient.
fn min_nonneg(q: &Quad1) -> (f64, f64) {
    let alpha = if q.a > 0.0 { (-q.b / (2.0 * q.a)).max(0.0) } else { 0.0 };
    (q.eval(alpha), alpha)
}

/// Result of running the cost recursion over one sequence.
#[derive(Debug, Clone)]
pub struct CostPath {
    /// `optimal[s]` = F(s), with F(0) = −λ.
    pub optimal: Vec<f64>,
    /// `best_anchor[s]` = last changepoint of an optimal segmentation of `y_{1:s}`.
    pub best_anchor: Vec<usize>,
    /// Candidate sets recorded at the requested prefix lengths. With pruning
    /// on, a snapshot reproduces `α ↦ Cost(y_{1:s}, α)` wherever it can still
    /// matter after one more step of the recursion.
    pub snapshots: BTreeMap<usize, Vec<AlphaCandidate>>,
    /// Candidates alive after each step (for diagnostics).
    pub active_counts: Vec<usize>,
}

impl CostPath {
    /// Runs the recursion over `ys` with per-step decay `decay` (calcium at
    /// step s equals `decay` times calcium at step s − 1 within a segment).
    pub fn run(ys: &[f64], decay: f64, lambda: f64, pruning: Pruning, record: &[usize]) -> Self {
        let n = ys.len();
        let mut optimal = vec![0.0; n + 1];
        let mut best_anchor = vec![0usize; n + 1];
        let mut snapshots = BTreeMap::new();
        let mut active_counts = Vec::with_capacity(n);
        optimal[0] = -lambda;
        let inv2 = 1.0 / (decay * decay);
        let inv = 1.0 / decay;
        let mut record = record.to_vec();
        record.sort_unstable();
        let mut cands: Vec<AlphaCandidate> = Vec::new();
        for s in 1..=n {
            let y = ys[s - 1];
            let data = Quad1::new(0.5, -y, 0.5 * y * y);
            for c in cands.iter_mut() {
                c.q = Quad1::new(c.q.a * inv2, c.q.b * inv, c.q.c).add(&data);
            }
            cands.push(AlphaCandidate {
                anchor: s - 1,
                q: data.add(&Quad1::constant(optimal[s - 1] + lambda)),
            });
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for c in &cands {
                let (v, _) = min_nonneg(&c.q);
                if v < best {
                    best = v;
                    arg = c.anchor;
                }
            }
            optimal[s] = best;
            best_anchor[s] = arg;
            if pruning == Pruning::Functional {
                // a candidate whose minimum exceeds F(s) + λ is beaten by a
                // fresh changepoint at s forever after
                let bound = best + lambda;
                cands.retain(|c| min_nonneg(&c.q).0 <= bound);
                prune_dominated(&mut cands);
            }
            if record.binary_search(&s).is_ok() {
                snapshots.insert(s, cands.clone());
            }
            active_counts.push(cands.len());
        }
        CostPath { optimal, best_anchor, snapshots, active_counts }
    }

    /// Changepoints of the optimal segmentation of the full sequence, ascending.
    pub fn changepoints(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut s = self.optimal.len() - 1;
        while s > 0 {
            let tau = self.best_anchor[s];
            if tau > 0 {
                out.push(tau);
            }
            s = tau;
        }
        out.reverse();
        out
    }
}

/// Removes candidates that attain the lower envelope nowhere on α ≥ 0.
fn prune_dominated(cands: &mut Vec<AlphaCandidate>) {
    if cands.len() <= 1 {
        return;
    }
    let fns: Vec<PiecewiseQuadratic> = cands
        .iter()
        .map(|c| PiecewiseQuadratic::on(0.0, f64::INFINITY, c.q))
        .collect();
    let env = PiecewiseQuadratic::lower_envelope(&fns).expect("common domain");
    let mut keep = vec![false; cands.len()];
    for &l in &env.labels {
        keep[l] = true;
    }
    let mut i = 0;
    cands.retain(|_| {
        i += 1;
        keep[i - 1]
    });
}

/// Optimal cost and calcium level for one segment `y_{first..=last}`, whose
/// calcium decays as `α γ^{t − last}`.
pub fn segment_cost(segment: &[f64], gamma: f64) -> Result<(f64, f64)> {
    if segment.is_empty() {
        return Err(Error::invalid("empty segment"));
    }
    // weights relative to the first sample: w'_t = γ^{t − first} ≤ 1
    let n = segment.len();
    let mut w = 1.0;
    let (mut sy, mut sw) = (0.0, 0.0);
    let mut weights = Vec::with_capacity(n);
    for &y in segment {
        weights.push(w);
        sy += y * w;
        sw += w * w;
        w *= gamma;
    }
    // α* scales by w_max = γ^{−(n−1)}: α* = (sy / sw) · γ^{n−1}
    let ratio = (sy / sw).max(0.0);
    let cost = 0.5
        * segment
            .iter()
            .zip(&weights)
            .map(|(y, w)| (y - ratio * w).powi(2))
            .sum::<f64>();
    let alpha = ratio * gamma.powi(n as i32 - 1);
    Ok((cost, alpha))
}

/// Builds the fitted calcium path for a given set of changepoints.
pub fn calcium_for(y: &[f64], gamma: f64, spikes: &[usize]) -> (Vec<f64>, f64) {
    let t = y.len();
    let mut calcium = vec![0.0; t];
    let mut total = 0.0;
    let mut start = 0usize;
    for end in spikes.iter().copied().chain(std::iter::once(t)) {
        let seg = &y[start..end];
        let (cost, alpha) = segment_cost(seg, gamma).expect("non-empty segment");
        total += cost;
        let mut level = alpha;
        for k in (start..end).rev() {
            calcium[k] = level;
            level /= gamma;
        }
        start = end;
    }
    (calcium, total)
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || lambda.is_nan() {
        return Err(Error::invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    Ok(())
}

/// Globally optimal spikes for `trace` at penalty `lambda`.
pub fn fit(trace: &Trace, lambda: f64) -> Result<SpikeFit> {
    fit_with(trace, lambda, Pruning::Functional)
}

pub fn fit_with(trace: &Trace, lambda: f64, pruning: Pruning) -> Result<SpikeFit> {
    validate_lambda(lambda)?;
    let path = CostPath::run(trace.y(), trace.gamma(), lambda, pruning, &[]);
    let spikes = path.changepoints();
    let (calcium, _) = calcium_for(trace.y(), trace.gamma(), &spikes);
    Ok(SpikeFit {
        spikes,
        calcium,
        objective: path.optimal[trace.len()],
        lambda,
        beta0: None,
    })
}

/// Exhaustive search over all changepoint subsets; ties go to fewer
/// changepoints, then to the lexicographically earliest set.
pub fn brute_force_fit(trace: &Trace, lambda: f64) -> Result<SpikeFit> {
    validate_lambda(lambda)?;
    let t = trace.len();
    if t > BRUTE_FORCE_MAX_T {
        return Err(Error::invalid(format!(
            "brute force refused for T={t} (limit {BRUTE_FORCE_MAX_T})"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << (t - 1)) {
        let spikes: Vec<usize> = (0..t - 1).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        let (_, rss) = calcium_for(trace.y(), trace.gamma(), &spikes);
        let obj = rss + lambda * spikes.len() as f64;
        let better = match &best {
            None => true,
            Some((b, bs)) => {
                let tol = 1e-12 * (1.0 + b.abs());
                obj < b - tol
                    || ((obj - b).abs() <= tol
                        && (spikes.len(), &spikes) < (bs.len(), bs))
            }
        };
        if better {
            best = Some((obj, spikes));
        }
    }
    let (objective, spikes) = best.expect("at least the empty set");
    let (calcium, _) = calcium_for(trace.y(), trace.gamma(), &spikes);
    Ok(SpikeFit { spikes, calcium, objective, lambda, beta0: None })
}

/// Grid search over `(λ, β₀)`: among cells whose spike count is within
/// `count_slack` of `target_count`, the smallest objective wins; if none
/// qualifies, the cell with count closest to the target (then smallest
/// objective) is returned.
pub fn fit_with_intercept(
    trace: &Trace,
    lambdas: &[f64],
    beta0s: &[f64],
    target_count: usize,
    count_slack: usize,
) -> Result<SpikeFit> {
    if lambdas.is_empty() || beta0s.is_empty() {
        return Err(Error::invalid("lambda and beta0 grids must be non-empty"));
    }
    let mut best: Option<(bool, usize, f64, SpikeFit)> = None;
    for &b in beta0s {
        let shifted = trace.shifted(b);
        for &l in lambdas {
            let mut f = fit(&shifted, l)?;
            f.beta0 = Some(b);
            let gap = f.spikes.len().abs_diff(target_count);
            let ok = gap <= count_slack;
            let better = match &best {
                None => true,
                Some((bok, bgap, bobj, _)) => match (ok, *bok) {
                    (true, false) => true,
                    (false, true) => false,
                    (true, true) => f.objective < *bobj,
                    (false, false) => gap < *bgap || (gap == *bgap && f.objective < *bobj),
                },
            };
            if better {
                best = Some((ok, gap, f.objective, f));
            }
        }
    }
    Ok(best.unwrap().3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub lambda: f64,
    pub count: usize,
    /// Set when no penalty reproduced the target count exactly.
    pub warning: bool,
}

/// Bisection on log λ for a penalty whose fit has `target` spikes.
pub fn calibrate_lambda(trace: &Trace, target: usize) -> Result<Calibration> {
    if target == 0 {
        return Err(Error::invalid("target spike count must be at least 1"));
    }
    let count_at = |l: f64| -> Result<usize> { Ok(fit(trace, l)?.spikes.len()) };
    let ss: f64 = 0.5 * trace.y().iter().map(|v| v * v).sum::<f64>();
    // at λ ≥ ½Σy² no spike can pay for itself
    let mut hi = ss.max(1e-12) * 1.01;
    let mut lo = hi * 1e-10;
    let mut c_lo = count_at(lo)?;
    let c_hi = count_at(hi)?;
    let mut best = Calibration { lambda: hi, count: c_hi, warning: true };
    let consider = |best: &mut Calibration, lambda: f64, count: usize| {
        let d = count.abs_diff(target);
        if d < best.count.abs_diff(target) {
            *best = Calibration { lambda, count, warning: true };
        }
    };
    consider(&mut best, lo, c_lo);
    if c_lo < target {
        log::warn!("target of {target} spikes unreachable; at most {c_lo} at lambda={lo:e}");
        return Ok(Calibration { lambda: lo, count: c_lo, warning: true });
    }
    if c_lo == target {
        return Ok(Calibration { lambda: lo, count: c_lo, warning: false });
    }
    while (hi / lo).ln() >= 1e-4 {
        let mid = (lo * hi).sqrt();
        let c = count_at(mid)?;
        consider(&mut best, mid, c);
        if c == target {
            return Ok(Calibration { lambda: mid, count: c, warning: false });
        }
        if c > target {
            lo = mid;
            c_lo = c;
        } else {
            hi = mid;
        }
    }
    let _ = c_lo;
    log::warn!("spike count {} closest to target {target}", best.count);
    Ok(best)
}
