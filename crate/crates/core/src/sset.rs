//! Exact conditioning set for one estimated spike.
//!
//! Along the line `y′(φ) = y + ((φ − ν⊤y)/‖ν‖²)·ν` only the samples in the
//! contrast window move, so the optimal cost with and without a changepoint
//! at τ can be written as
//!
//! ```text
//! C(φ)  = min_{f ∈ C_τ} min_α f(α, φ) + min_{f̃ ∈ C̃_{τ+1}} min_α f̃(α, φ) + λ
//! C′(φ) = min_{f, f̃} min_α { f(α, φ) + f̃(γα, φ) }
//! ```
//!
//! where `C_τ` runs the bivariate recursion forward from `max(1, τ − h)` and
//! `C̃_{τ+1}` runs it backward from `min(T, τ + h + 1)`. The prefix costs
//! outside the window come from the univariate solver. The spike is kept
//! exactly on `S = {φ : C(φ) ≤ C′(φ)}`.

use crate::contrast::Contrast;
use crate::error::{Error, Result};
use crate::l0solver::{AlphaCandidate, CostPath, Pruning, Trace};
use crate::pwq::{BivarQuad, Candidate, IntervalSet, PiecewiseQuadratic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct CostCollection {
    pub candidates: Vec<Candidate>,
    pub direction: Direction,
    /// Time index the collection describes (1-based).
    pub frontier: usize,
    /// Number of functions in the unexpanded recursion: the solver prefix
    /// counts as one however many quadratics it holds.
    pub logical_count: usize,
}

impl CostCollection {
    /// `φ ↦ min_f min_{α ≥ 0} f(α, φ)`.
    pub fn min_cost(&self) -> Result<PiecewiseQuadratic> {
        let mins = self
            .candidates
            .iter()
            .map(Candidate::min_over_alpha_nonneg)
            .collect::<Result<Vec<_>>>()?;
        Ok(PiecewiseQuadratic::lower_envelope(&mins)?.function)
    }

    /// Pointwise minimum over candidates at `(α, φ)`.
    pub fn eval(&self, alpha: f64, phi: f64) -> f64 {
        self.candidates
            .iter()
            .map(|c| c.eval(alpha, phi))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Univariate prefix costs of one trace, forward and on the reversed trace,
/// snapshotted where the collections for a set of spikes start.
#[derive(Debug, Clone)]
pub struct PrefixCosts {
    t_len: usize,
    h: usize,
    forward: CostPath,
    backward: CostPath,
}

impl PrefixCosts {
    pub fn new(trace: &Trace, lambda: f64, taus: &[usize], h: usize) -> Self {
        let t_len = trace.len();
        let fwd_at: Vec<usize> = taus.iter().filter(|&&t| t > h).map(|&t| t - h).collect();
        // the backward collection starts at τ + h + 1, i.e. after T − τ − h
        // reversed samples
        let bwd_at: Vec<usize> = taus
            .iter()
            .filter(|&&t| t + h < t_len)
            .map(|&t| t_len - t - h)
            .collect();
        let forward = CostPath::run(trace.y(), trace.gamma(), lambda, Pruning::Functional, &fwd_at);
        let rev: Vec<f64> = trace.y().iter().rev().copied().collect();
        let backward = CostPath::run(&rev, 1.0 / trace.gamma(), lambda, Pruning::Functional, &bwd_at);
        Self { t_len, h, forward, backward }
    }

    /// Optimal unconstrained objective of the trace.
    pub fn optimal_cost(&self) -> f64 {
        self.forward.optimal[self.t_len]
    }

    fn snapshot(path: &CostPath, s: usize) -> Result<&Vec<AlphaCandidate>> {
        path.snapshots
            .get(&s)
            .ok_or_else(|| Error::invalid(format!("no prefix snapshot recorded at {s}")))
    }
}

fn from_prefix(cands: &[AlphaCandidate]) -> Vec<Candidate> {
    cands
        .iter()
        .map(|c| Candidate::new(BivarQuad::in_alpha(c.q), PiecewiseQuadratic::constant(0.0), c.anchor))
        .collect()
}

fn data_term(y: &[f64], c: &Contrast, t: usize) -> BivarQuad {
    let (u, v) = c.path_coefficients(y, t);
    BivarQuad::data_term(u, v)
}

/// Advances `cands` by one sample: existing candidates see the calcium
/// rescaled by `k`, a new candidate opens after a changepoint.
fn step(cands: &mut Vec<Candidate>, k: f64, data: BivarQuad, lambda: f64, anchor: usize) -> Result<()> {
    let g = CostCollection {
        candidates: std::mem::take(cands),
        direction: Direction::Forward,
        frontier: 0,
        logical_count: 0,
    };
    let opened = g.min_cost()?.add_constant(lambda);
    *cands = g.candidates;
    for c in cands.iter_mut() {
        c.quad = c.quad.scale_alpha(k).add(&data);
    }
    cands.push(Candidate::new(data, opened, anchor));
    Ok(())
}

/// Collection at τ whose minimum is `Cost(y′_{1:τ}(φ), α; γ)`.
pub fn forward_collection(
    trace: &Trace,
    contrast: &Contrast,
    lambda: f64,
    prefix: &PrefixCosts,
) -> Result<CostCollection> {
    check(trace, contrast, prefix)?;
    let y = trace.y();
    let (tau, h) = (contrast.tau, contrast.h);
    let (s0, mut cands) = if tau > h {
        let s0 = tau - h;
        (s0, from_prefix(PrefixCosts::snapshot(&prefix.forward, s0)?))
    } else {
        (1, vec![Candidate::new(data_term(y, contrast, 1), PiecewiseQuadratic::constant(0.0), 0)])
    };
    let k = 1.0 / trace.gamma();
    for s in s0 + 1..=tau {
        step(&mut cands, k, data_term(y, contrast, s), lambda, s - 1)?;
    }
    Ok(CostCollection {
        candidates: cands,
        direction: Direction::Forward,
        frontier: tau,
        logical_count: tau - s0 + 1,
    })
}

/// Collection at τ + 1 whose minimum is the cost of `y′_{τ+1:T}(φ)` with
/// calcium α at τ + 1.
pub fn backward_collection(
    trace: &Trace,
    contrast: &Contrast,
    lambda: f64,
    prefix: &PrefixCosts,
) -> Result<CostCollection> {
    check(trace, contrast, prefix)?;
    let y = trace.y();
    let t_len = trace.len();
    let (tau, h) = (contrast.tau, contrast.h);
    let (s0, mut cands) = if tau + h < t_len {
        let s0 = tau + h + 1;
        (s0, from_prefix(PrefixCosts::snapshot(&prefix.backward, t_len - s0 + 1)?))
    } else {
        let last = data_term(y, contrast, t_len);
        (t_len, vec![Candidate::new(last, PiecewiseQuadratic::constant(0.0), t_len)])
    };
    let k = trace.gamma();
    for s in (tau + 1..s0).rev() {
        step(&mut cands, k, data_term(y, contrast, s), lambda, s)?;
    }
    Ok(CostCollection {
        candidates: cands,
        direction: Direction::Backward,
        frontier: tau + 1,
        logical_count: s0 - tau,
    })
}

fn check(trace: &Trace, contrast: &Contrast, prefix: &PrefixCosts) -> Result<()> {
    if prefix.t_len != trace.len() || prefix.h != contrast.h {
        return Err(Error::invalid("prefix costs were built for a different trace or window"));
    }
    if contrast.tau_r > trace.len() {
        return Err(Error::invalid("contrast does not fit the trace"));
    }
    Ok(())
}

/// `C(φ)`: optimal cost of `y′(φ)` with a changepoint at τ.
pub fn cost_with_spike(fwd: &CostCollection, bwd: &CostCollection, lambda: f64) -> Result<PiecewiseQuadratic> {
    Ok(fwd.min_cost()?.add(&bwd.min_cost()?)?.add_constant(lambda))
}

/// `C′(φ)`: optimal cost of `y′(φ)` without a changepoint at τ.
pub fn cost_without_spike(fwd: &CostCollection, bwd: &CostCollection, gamma: f64) -> Result<PiecewiseQuadratic> {
    let back: Vec<(BivarQuad, &PiecewiseQuadratic)> = bwd
        .candidates
        .iter()
        .map(|c| (c.quad.scale_alpha(gamma), &c.offset))
        .collect();
    let mut pairs = Vec::with_capacity(fwd.candidates.len() * back.len());
    for f in &fwd.candidates {
        for (q, off) in &back {
            let m = f.quad.add(q).min_over_alpha_nonneg()?;
            pairs.push(m.add(&f.offset)?.add(off)?);
        }
    }
    Ok(PiecewiseQuadratic::lower_envelope(&pairs)?.function)
}

/// Everything computed on the way to S.
#[derive(Debug, Clone)]
pub struct ConditioningSet {
    pub set: IntervalSet,
    pub cost_with: PiecewiseQuadratic,
    pub cost_without: PiecewiseQuadratic,
    pub forward_size: usize,
    pub backward_size: usize,
}

/// `S = {φ : τ ∈ M(y′(φ))}` for the spike tested by `contrast`.
pub fn compute_s(trace: &Trace, contrast: &Contrast, lambda: f64) -> Result<IntervalSet> {
    let prefix = PrefixCosts::new(trace, lambda, &[contrast.tau], contrast.h);
    Ok(compute_s_cached(trace, contrast, lambda, &prefix)?.set)
}

/// As [`compute_s`], reusing prefix costs shared across the spikes of a trace.
pub fn compute_s_cached(
    trace: &Trace,
    contrast: &Contrast,
    lambda: f64,
    prefix: &PrefixCosts,
) -> Result<ConditioningSet> {
    let fwd = forward_collection(trace, contrast, lambda, prefix)?;
    let bwd = backward_collection(trace, contrast, lambda, prefix)?;
    let cost_with = cost_with_spike(&fwd, &bwd, lambda)?;
    let cost_without = cost_without_spike(&fwd, &bwd, trace.gamma())?;
    let set = cost_with.below_set(&cost_without)?;
    let phi = contrast.phi_obs;
    if !set.contains(phi) {
        return Err(Error::Inconsistent(format!(
            "observed phi={phi} not in S for spike at {}: C={} C'={} S={:?}",
            contrast.tau,
            cost_with.eval(phi),
            cost_without.eval(phi),
            set.to_pairs()
        )));
    }
    Ok(ConditioningSet {
        set,
        cost_with,
        cost_without,
        forward_size: fwd.candidates.len(),
        backward_size: bwd.candidates.len(),
    })
}
