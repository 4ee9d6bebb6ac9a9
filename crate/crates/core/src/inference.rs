//! Per-trace inference: noise level, tested spikes, and selective plus naive
//! p-values and confidence intervals for each of them.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contrast::Contrast;
use crate::error::{Error, Result};
use crate::l0solver::{SpikeFit, Trace};
use crate::pwq::IntervalSet;
use crate::sset::{compute_s_cached, PrefixCosts};
use crate::truncgauss::{self, TruncatedGaussian};

pub const DEFAULT_H: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    /// Residuals are all zero; selective inference is impossible.
    pub degenerate: bool,
}

/// `σ̂² = Σ(y − ĉ − β₀)² / (T − 1)`.
pub fn estimate_sigma(y: &[f64], fit: &SpikeFit) -> Result<SigmaEstimate> {
    if y.len() != fit.calcium.len() || y.len() < 2 {
        return Err(Error::invalid("fit does not match the trace"));
    }
    let b = fit.beta0.unwrap_or(0.0);
    let rss: f64 = y.iter().zip(&fit.calcium).map(|(v, c)| (v - c - b).powi(2)).sum();
    let sigma = (rss / (y.len() - 1) as f64).sqrt();
    Ok(SigmaEstimate { sigma, degenerate: sigma == 0.0 })
}

/// The trace the spikes of `fit` were found on (baseline removed).
fn fitted_trace(trace: &Trace, fit: &SpikeFit) -> Trace {
    match fit.beta0 {
        Some(b) => trace.shifted(b),
        None => trace.clone(),
    }
}

/// Spikes of `fit` whose contrast shows an increase, `ν⊤y > 0`.
pub fn tested_spikes(trace: &Trace, fit: &SpikeFit, h: usize) -> Result<Vec<Contrast>> {
    let tr = fitted_trace(trace, fit);
    let mut out = Vec::new();
    for &tau in &fit.spikes {
        let c = Contrast::build(tr.y(), tau, h, tr.gamma())?;
        if c.phi_obs > 0.0 {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub tau: usize,
    pub h: usize,
    pub phi_obs: f64,
    pub nu_norm: f64,
    pub s_set: IntervalSet,
    pub p_selective: f64,
    pub p_naive: f64,
    pub ci_selective: (f64, f64),
    pub ci_naive: (f64, f64),
    pub sigma_used: f64,
    pub timing_ms: f64,
}

/// Outcome for one tested spike; failures are kept rather than aborting the
/// trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeOutcome {
    pub tau: usize,
    pub phi_obs: f64,
    pub result: std::result::Result<InferenceResult, Error>,
}

/// Upper `p` quantile of the standard normal.
pub fn normal_upper_quantile(p: f64) -> Result<f64> {
    TruncatedGaussian::new(0.0, 1.0, &IntervalSet::real_line())?.upper_quantile(p)
}

/// Wald p-value `1 − Φ(φ/(σ‖ν‖))` and interval `φ ± z_{1−α/2}·σ‖ν‖`.
pub fn naive(phi_obs: f64, scale: f64, alpha: f64) -> Result<(f64, (f64, f64))> {
    let z = normal_upper_quantile(0.5 * alpha)?;
    Ok((truncgauss::normal_sf(phi_obs / scale), (phi_obs - z * scale, phi_obs + z * scale)))
}

fn infer_one(
    tr: &Trace,
    contrast: &Contrast,
    lambda: f64,
    prefix: &PrefixCosts,
    sigma: f64,
    alpha: f64,
) -> Result<InferenceResult> {
    let start = Instant::now();
    let s = compute_s_cached(tr, contrast, lambda, prefix)?.set;
    let scale = sigma * contrast.norm();
    let p_selective = truncgauss::pvalue(contrast.phi_obs, scale, &s)?;
    let ci_selective = truncgauss::ci(contrast.phi_obs, scale, &s, alpha)?;
    let (p_naive, ci_naive) = naive(contrast.phi_obs, scale, alpha)?;
    Ok(InferenceResult {
        tau: contrast.tau,
        h: contrast.h,
        phi_obs: contrast.phi_obs,
        nu_norm: contrast.norm(),
        s_set: s,
        p_selective,
        p_naive,
        ci_selective,
        ci_naive,
        sigma_used: sigma,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs selective inference for every tested spike of `fit`, in spike order.
pub fn infer(trace: &Trace, fit: &SpikeFit, h: usize, sigma: f64, alpha: f64) -> Result<Vec<SpikeOutcome>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let tr = fitted_trace(trace, fit);
    let contrasts = tested_spikes(trace, fit, h)?;
    let taus: Vec<usize> = contrasts.iter().map(|c| c.tau).collect();
    let prefix = PrefixCosts::new(&tr, fit.lambda, &taus, h);
    Ok(contrasts
        .par_iter()
        .map(|c| SpikeOutcome {
            tau: c.tau,
            phi_obs: c.phi_obs,
            result: infer_one(&tr, c, fit.lambda, &prefix, sigma, alpha),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaSource {
    Supplied,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub tau: usize,
    pub phi_obs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_selective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_naive: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_selective: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_naive: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_set: Option<Vec<[Option<f64>; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SpikeRecord {
    pub fn from_outcome(o: &SpikeOutcome, emit_s_set: bool) -> Self {
        match &o.result {
            Ok(r) => SpikeRecord {
                tau: o.tau,
                phi_obs: o.phi_obs,
                p_selective: Some(r.p_selective),
                p_naive: Some(r.p_naive),
                ci_selective: Some([r.ci_selective.0, r.ci_selective.1]),
                ci_naive: Some([r.ci_naive.0, r.ci_naive.1]),
                s_set: emit_s_set.then(|| r.s_set.to_pairs()),
                error: None,
            },
            Err(e) => SpikeRecord {
                tau: o.tau,
                phi_obs: o.phi_obs,
                p_selective: None,
                p_naive: None,
                ci_selective: None,
                ci_naive: None,
                s_set: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Serialisable summary of one trace's inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub trace_id: String,
    pub gamma: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub sigma_source: SigmaSource,
    pub h: usize,
    pub alpha: f64,
    pub spikes: Vec<SpikeRecord>,
}
