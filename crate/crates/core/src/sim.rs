//! Simulated calcium traces and the Type I error, power and interval
//! experiments.
//!
//! Traces follow `c_t = γ c_{t−1} + z_t` (`z_t ~ Poisson(rate)` for t ≥ 2,
//! `c_1 = γ c_0`) and `y_t = c_t + ε_t` with `ε_t ~ N(0, σ²)`. A jump
//! `z_t > 0` is recorded as a true spike at `t − 1`, matching the solver's
//! changepoint convention.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{infer, SpikeOutcome};
use crate::l0solver::{calibrate_lambda, fit, Trace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub spike_rate: f64,
    pub seed: u64,
    pub c0: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t: 2000, gamma: 0.98, sigma: 0.2, spike_rate: 0.0, seed: 0, c0: 0.0 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::invalid(format!("T must be at least 2, got {}", self.t)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.spike_rate >= 0.0 && self.spike_rate.is_finite()) {
            return Err(Error::invalid(format!("spike rate must be non-negative, got {}", self.spike_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimData {
    pub y: Vec<f64>,
    pub c: Vec<f64>,
    /// True spike times, 1-based, ascending.
    pub spikes: Vec<usize>,
}

/// Poisson draw by sequential inversion of the CDF.
pub fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

pub fn generate(cfg: &SimConfig) -> Result<SimData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut c = Vec::with_capacity(cfg.t);
    let mut spikes = Vec::new();
    c.push(cfg.gamma * cfg.c0);
    for t in 2..=cfg.t {
        let z = poisson_inversion(&mut rng, cfg.spike_rate);
        if z > 0 {
            spikes.push(t - 1);
        }
        c.push(cfg.gamma * c[t - 2] + z as f64);
    }
    let y = c
        .iter()
        .map(|ct| {
            let e: f64 = StandardNormal.sample(&mut rng);
            ct + cfg.sigma * e
        })
        .collect();
    Ok(SimData { y, c, spikes })
}

/// Kolmogorov–Smirnov distance to Uniform(0, 1) and its asymptotic p-value
/// (with Stephens' small-sample correction).
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / nf - x).max(x - i as f64 / nf))
        .fold(0.0, f64::max);
    let sq = nf.sqrt();
    let lam = (sq + 0.12 + 0.11 / sq) * d;
    (d, kolmogorov_sf(lam))
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_sf(lam: f64) -> f64 {
    if lam < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lam * lam).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One row of a long-format experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub method: String,
    pub h: usize,
    pub sigma: f64,
    pub metric: String,
    pub value: f64,
}

fn row(method: &str, h: usize, sigma: f64, metric: &str, value: f64) -> Row {
    Row { method: method.into(), h, sigma, metric: metric.into(), value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub base: SimConfig,
    pub reps: usize,
    pub hs: Vec<usize>,
    /// Noise levels; ignored by the Type I experiment, which uses `base.sigma`.
    pub sigmas: Vec<f64>,
    pub target_spikes: usize,
    pub alpha: f64,
    /// Matching distance for the power experiment.
    pub n: usize,
    /// Use this penalty instead of calibrating one per trace.
    pub fixed_lambda: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            base: SimConfig::default(),
            reps: 50,
            hs: vec![1, 20],
            sigmas: vec![1.0],
            target_spikes: 20,
            alpha: 0.05,
            n: 2,
            fixed_lambda: None,
        }
    }
}

/// Fit of one simulated trace with λ calibrated to the target count, and the
/// inference outcomes for each window.
struct RepResult {
    data: SimData,
    outcomes: Vec<Vec<SpikeOutcome>>,
    calibration_warning: bool,
}

fn run_rep(cfg: &ExperimentConfig, sim: &SimConfig) -> Result<RepResult> {
    let data = generate(sim)?;
    let trace = Trace::new(data.y.clone(), sim.gamma)?;
    let (lambda, calibration_warning) = match cfg.fixed_lambda {
        Some(l) => (l, false),
        None => {
            let cal = calibrate_lambda(&trace, cfg.target_spikes)?;
            (cal.lambda, cal.warning)
        }
    };
    let f = fit(&trace, lambda)?;
    let outcomes = cfg
        .hs
        .iter()
        .map(|&h| infer(&trace, &f, h, sim.sigma, cfg.alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(RepResult { data, outcomes, calibration_warning })
}

fn rep_config(base: &SimConfig, sigma: f64, rep: usize) -> SimConfig {
    SimConfig { sigma, seed: base.seed.wrapping_add(rep as u64), ..base.clone() }
}

fn run_all(cfg: &ExperimentConfig, sigma: f64, rate: f64) -> Result<Vec<RepResult>> {
    let base = SimConfig { spike_rate: rate, ..cfg.base.clone() };
    (0..cfg.reps)
        .into_par_iter()
        .map(|r| run_rep(cfg, &rep_config(&base, sigma, r)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Type1Report {
    /// `(h, selective p-values, naive p-values)`, pooled over reps.
    pub pvalues: Vec<(usize, Vec<f64>, Vec<f64>)>,
    pub failed_spikes: usize,
    pub calibration_warnings: usize,
}

impl Type1Report {
    pub fn rows(&self, sigma: f64) -> Vec<Row> {
        let mut out = Vec::new();
        for (h, sel, nav) in &self.pvalues {
            for (method, p) in [("selective", sel), ("naive", nav)] {
                let (d, pks) = ks_uniform(p);
                out.push(row(method, *h, sigma, "count", p.len() as f64));
                out.push(row(method, *h, sigma, "ks_stat", d));
                out.push(row(method, *h, sigma, "ks_pvalue", pks));
                out.push(row(method, *h, sigma, "frac_below_0.05", frac_at_most(p, 0.05)));
            }
        }
        out
    }
}

pub fn frac_at_most(p: &[f64], level: f64) -> f64 {
    if p.is_empty() {
        return f64::NAN;
    }
    p.iter().filter(|&&v| v <= level).count() as f64 / p.len() as f64
}

/// Global-null traces: pooled selective and naive p-values per window.
pub fn type1_experiment(cfg: &ExperimentConfig) -> Result<Type1Report> {
    if cfg.reps == 0 {
        return Ok(Type1Report::default());
    }
    let reps = run_all(cfg, cfg.base.sigma, 0.0)?;
    let mut report = Type1Report::default();
    for (k, &h) in cfg.hs.iter().enumerate() {
        let (mut sel, mut nav) = (Vec::new(), Vec::new());
        for r in &reps {
            for o in &r.outcomes[k] {
                match &o.result {
                    Ok(res) => {
                        sel.push(res.p_selective);
                        nav.push(res.p_naive);
                    }
                    Err(_) => report.failed_spikes += 1,
                }
            }
        }
        report.pvalues.push((h, sel, nav));
    }
    report.calibration_warnings = reps.iter().filter(|r| r.calibration_warning).count();
    Ok(report)
}

/// Counts behind conditional power and detection probability.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerCounts {
    pub true_spikes: usize,
    pub detected: usize,
    pub detected_and_rejected: usize,
}

impl PowerCounts {
    pub fn add(&mut self, o: &PowerCounts) {
        self.true_spikes += o.true_spikes;
        self.detected += o.detected;
        self.detected_and_rejected += o.detected_and_rejected;
    }

    pub fn conditional_power(&self) -> f64 {
        self.detected_and_rejected as f64 / self.detected as f64
    }

    pub fn detection_probability(&self) -> f64 {
        self.detected as f64 / self.true_spikes as f64
    }
}

/// Matches every true spike to its nearest tested spike (ties to the
/// earlier) and counts detections within `n` steps and rejections at `alpha`.
pub fn power_counts(truth: &[usize], tested: &[(usize, f64)], n: usize, alpha: f64) -> PowerCounts {
    let mut c = PowerCounts { true_spikes: truth.len(), ..Default::default() };
    for &tau in truth {
        let nearest = tested.iter().min_by_key(|(t, _)| (t.abs_diff(tau), *t));
        if let Some(&(t, p)) = nearest {
            if t.abs_diff(tau) <= n {
                c.detected += 1;
                if p <= alpha {
                    c.detected_and_rejected += 1;
                }
            }
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerReport {
    /// `(σ, h, counts)` pooled over reps.
    pub cells: Vec<(f64, usize, PowerCounts)>,
    pub failed_spikes: usize,
}

impl PowerReport {
    pub fn rows(&self) -> Vec<Row> {
        let mut out = Vec::new();
        for &(sigma, h, c) in &self.cells {
            out.push(row("selective", h, sigma, "conditional_power", c.conditional_power()));
            out.push(row("selective", h, sigma, "detection_probability", c.detection_probability()));
        }
        out
    }
}

pub fn power_experiment(cfg: &ExperimentConfig) -> Result<PowerReport> {
    let mut report = PowerReport::default();
    if cfg.reps == 0 {
        return Ok(report);
    }
    for &sigma in &cfg.sigmas {
        let reps = run_all(cfg, sigma, cfg.base.spike_rate)?;
        for (k, &h) in cfg.hs.iter().enumerate() {
            let mut total = PowerCounts::default();
            for r in &reps {
                let mut tested = Vec::new();
                for o in &r.outcomes[k] {
                    match &o.result {
                        Ok(res) => tested.push((o.tau, res.p_selective)),
                        Err(_) => report.failed_spikes += 1,
                    }
                }
                total.add(&power_counts(&r.data.spikes, &tested, cfg.n, cfg.alpha));
            }
            report.cells.push((sigma, h, total));
        }
    }
    Ok(report)
}

/// Sums behind average coverage, width and midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntervalSums {
    pub count: usize,
    pub covered: usize,
    pub width: f64,
    pub midpoint: f64,
}

impl IntervalSums {
    pub fn push(&mut self, (lo, hi): (f64, f64), phi_obs: f64, target: f64) {
        self.count += 1;
        if lo <= target && target <= hi {
            self.covered += 1;
        }
        self.width += hi - lo;
        self.midpoint += 0.5 * (lo + hi) - phi_obs;
    }

    pub fn coverage(&self) -> f64 {
        self.covered as f64 / self.count as f64
    }

    pub fn mean_width(&self) -> f64 {
        self.width / self.count as f64
    }

    pub fn mean_midpoint(&self) -> f64 {
        self.midpoint / self.count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CiReport {
    /// `(σ, h, selective, naive)` pooled over reps.
    pub cells: Vec<(f64, usize, IntervalSums, IntervalSums)>,
    pub failed_spikes: usize,
}

impl CiReport {
    pub fn rows(&self) -> Vec<Row> {
        let mut out = Vec::new();
        for &(sigma, h, sel, nav) in &self.cells {
            for (method, s) in [("selective", sel), ("naive", nav)] {
                out.push(row(method, h, sigma, "count", s.count as f64));
                out.push(row(method, h, sigma, "coverage", s.coverage()));
                out.push(row(method, h, sigma, "width", s.mean_width()));
                out.push(row(method, h, sigma, "midpoint", s.mean_midpoint()));
            }
        }
        out
    }
}

pub fn ci_experiment(cfg: &ExperimentConfig) -> Result<CiReport> {
    let mut report = CiReport::default();
    if cfg.reps == 0 {
        return Ok(report);
    }
    for &sigma in &cfg.sigmas {
        let reps = run_all(cfg, sigma, cfg.base.spike_rate)?;
        for (k, &h) in cfg.hs.iter().enumerate() {
            let (mut sel, mut nav) = (IntervalSums::default(), IntervalSums::default());
            for r in &reps {
                for o in &r.outcomes[k] {
                    match &o.result {
                        Ok(res) => {
                            let nu = crate::contrast::Contrast::build(&r.data.y, o.tau, h, cfg.base.gamma)?;
                            let target = nu.dot(&r.data.c);
                            sel.push(res.ci_selective, res.phi_obs, target);
                            nav.push(res.ci_naive, res.phi_obs, target);
                        }
                        Err(_) => report.failed_spikes += 1,
                    }
                }
            }
            report.cells.push((sigma, h, sel, nav));
        }
    }
    Ok(report)
}
