//! Spike-train accuracy metrics: Victor–Purpura distance, binned count
//! correlation, and a resampling test for selected subsets.
//!
//! Spike times are sample indices at `rate_hz`. The Victor–Purpura shift cost
//! is `q·|Δt|` with Δt in seconds.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_VP_COST: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    times: Vec<usize>,
    rate_hz: f64,
}

impl SpikeTrain {
    pub fn new(times: Vec<usize>, rate_hz: f64) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {rate_hz}")));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!("spike times must increase strictly ({} then {})", w[0], w[1])));
        }
        Ok(Self { times, rate_hz })
    }

    /// Sorts and deduplicates `times` first.
    pub fn from_unsorted(mut times: Vec<usize>, rate_hz: f64) -> Result<Self> {
        times.sort_unstable();
        times.dedup();
        Self::new(times, rate_hz)
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn seconds(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().map(move |&t| t as f64 / self.rate_hz)
    }

    /// Same rate, only the spikes at `idx`.
    pub fn subset(&self, idx: &[usize]) -> SpikeTrain {
        let mut times: Vec<usize> = idx.iter().map(|&i| self.times[i]).collect();
        times.sort_unstable();
        SpikeTrain { times, rate_hz: self.rate_hz }
    }
}

/// Edit distance with unit insertion/deletion cost and shift cost `q·|Δt|`.
pub fn victor_purpura(a: &SpikeTrain, b: &SpikeTrain, q: f64) -> Result<f64> {
    if !(q >= 0.0) {
        return Err(Error::invalid(format!("cost must be non-negative, got {q}")));
    }
    let ta: Vec<f64> = a.seconds().collect();
    let tb: Vec<f64> = b.seconds().collect();
    let m = tb.len();
    let mut prev: Vec<f64> = (0..=m).map(|j| j as f64).collect();
    let mut cur = vec![0.0; m + 1];
    for (i, &x) in ta.iter().enumerate() {
        cur[0] = (i + 1) as f64;
        for j in 1..=m {
            cur[j] = (prev[j] + 1.0)
                .min(cur[j - 1] + 1.0)
                .min(prev[j - 1] + q * (x - tb[j - 1]).abs());
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Spike counts in consecutive bins of `factor` samples starting at sample 0;
/// a trailing partial bin is dropped.
pub fn bin_counts(train: &SpikeTrain, n_samples: usize, factor: usize) -> Vec<f64> {
    let bins = n_samples / factor.max(1);
    let mut out = vec![0.0; bins];
    for &t in train.times() {
        let b = t / factor.max(1);
        if b < bins {
            out[b] += 1.0;
        }
    }
    out
}

/// Pearson correlation of binned counts, `None` when undefined.
pub fn binned_correlation(a: &SpikeTrain, b: &SpikeTrain, n_samples: usize, factor: usize) -> Result<Option<f64>> {
    if factor == 0 {
        return Err(Error::invalid("bin factor must be at least 1"));
    }
    let x = bin_counts(a, n_samples, factor);
    let y = bin_counts(b, n_samples, factor);
    if x.len() < 2 {
        return Ok(None);
    }
    Ok(pearson(&x, &y))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleReport {
    pub lower: f64,
    pub upper: f64,
    pub observed: f64,
    /// No spikes were selected; quantiles are undefined.
    pub degenerate: bool,
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Compares the metric of `selected` against the 2.5% and 97.5% quantiles of
/// the metric over random subsets of `all` of the same size.
pub fn resample_subset_test<F>(
    all: &SpikeTrain,
    selected: &SpikeTrain,
    truth: &SpikeTrain,
    metric: F,
    reps: usize,
    seed: u64,
) -> Result<ResampleReport>
where
    F: Fn(&SpikeTrain, &SpikeTrain) -> f64 + Sync,
{
    let k = selected.len();
    if k > all.len() {
        return Err(Error::invalid(format!("selected {k} spikes out of only {}", all.len())));
    }
    let observed = metric(selected, truth);
    if k == 0 || reps == 0 {
        return Ok(ResampleReport { lower: f64::NAN, upper: f64::NAN, observed, degenerate: true });
    }
    let mut draws: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let idx = sample(&mut rng, all.len(), k).into_vec();
            metric(&all.subset(&idx), truth)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    Ok(ResampleReport {
        lower: quantile(&draws, 0.025),
        upper: quantile(&draws, 0.975),
        observed,
        degenerate: false,
    })
}
