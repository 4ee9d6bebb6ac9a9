//! Shared fixtures for the benchmarks.

use spikesel::l0solver::calibrate_lambda;
use spikesel::sim::generate;
use spikesel::{fit, SimConfig, SpikeFit, Trace};

/// Simulated trace at spike rate 0.01 with its calibrated fit.
pub fn fixture(t: usize, sigma: f64, seed: u64) -> (Trace, SpikeFit) {
    let cfg = SimConfig { t, sigma, spike_rate: 0.01, seed, ..SimConfig::default() };
    let d = generate(&cfg).expect("valid config");
    let trace = Trace::new(d.y, cfg.gamma).expect("valid trace");
    let target = d.spikes.len().max(1);
    let cal = calibrate_lambda(&trace, target).expect("calibration");
    let f = fit(&trace, cal.lambda).expect("fit");
    (trace, f)
}
