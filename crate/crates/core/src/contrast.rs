//! Contrast vectors for testing one estimated spike.
//!
//! For a spike at τ with window h, ν compares the calcium level just after τ
//! with the level projected forward from the pre-spike window. Weights are
//! negative on `τ_L..=τ`, positive on `τ+1..=τ_R`, where
//! `τ_L = max(1, τ − h + 1)` and `τ_R = min(T, τ + h)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub tau: usize,
    pub h: usize,
    pub tau_l: usize,
    pub tau_r: usize,
    /// Weights on `tau_l..=tau_r` (1-based).
    pub nu: Vec<f64>,
    pub norm_sq: f64,
    /// ν⊤y for the trace the contrast was built on.
    pub phi_obs: f64,
}

/// Support and weights of ν for a trace of length `t_len`.
pub fn weights(t_len: usize, tau: usize, h: usize, gamma: f64) -> Result<(usize, usize, Vec<f64>)> {
    if h == 0 {
        return Err(Error::invalid("window h must be at least 1"));
    }
    if tau == 0 || tau >= t_len {
        return Err(Error::invalid(format!(
            "spike time {tau} outside 1..={} (a spike needs a post-spike sample)",
            t_len.saturating_sub(1)
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let tau_l = if tau > h { tau - h + 1 } else { 1 };
    let tau_r = (tau + h).min(t_len);
    let g2 = gamma * gamma;
    let mut nu = Vec::with_capacity(tau_r - tau_l + 1);
    // pre: −γ(1−γ²)γ^{2m−k}/(1−γ^{2m+2}), m = τ − τ_L, k = τ − t
    let m = (tau - tau_l) as i32;
    let pre_scale = -gamma * (1.0 - g2) / (1.0 - gamma.powi(2 * m + 2));
    for t in tau_l..=tau {
        let k = (tau - t) as i32;
        nu.push(pre_scale * gamma.powi(2 * m - k));
    }
    // post: (1−γ²)/(1−γ^{2n})·γ^{t−τ−1}, n = τ_R − τ
    let n = (tau_r - tau) as i32;
    let post_scale = (1.0 - g2) / (1.0 - gamma.powi(2 * n));
    for t in tau + 1..=tau_r {
        nu.push(post_scale * gamma.powi((t - tau - 1) as i32));
    }
    Ok((tau_l, tau_r, nu))
}

/// ‖ν‖² for an unclipped window, in closed form.
pub fn norm_sq_closed_form(gamma: f64, h: usize) -> f64 {
    // γ²(γ²−1)/(γ²−γ^{−2h+2}) rewritten as γ^{2h}(1−γ²)/(1−γ^{2h})
    let g2h = gamma.powi(2 * h as i32);
    let g2 = gamma * gamma;
    g2h * (1.0 - g2) / (1.0 - g2h) + (1.0 - g2) / (1.0 - g2h)
}

impl Contrast {
    /// Contrast for the spike at `tau` of the trace `y`.
    pub fn build(y: &[f64], tau: usize, h: usize, gamma: f64) -> Result<Self> {
        let (tau_l, tau_r, nu) = weights(y.len(), tau, h, gamma)?;
        let norm_sq = nu.iter().map(|w| w * w).sum();
        let phi_obs = nu.iter().zip(&y[tau_l - 1..tau_r]).map(|(w, v)| w * v).sum();
        Ok(Self { tau, h, tau_l, tau_r, nu, norm_sq, phi_obs })
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    /// True when the window is not clipped by either end of the trace.
    pub fn is_interior(&self) -> bool {
        self.tau_l + self.h == self.tau + 1 && self.tau_r == self.tau + self.h
    }

    /// Weight at time `t` (1-based), zero off the support.
    pub fn weight(&self, t: usize) -> f64 {
        if t < self.tau_l || t > self.tau_r {
            0.0
        } else {
            self.nu[t - self.tau_l]
        }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.nu.iter().zip(&x[self.tau_l - 1..self.tau_r]).map(|(w, v)| w * v).sum()
    }

    /// `y′(φ) = y + ((φ − ν⊤y)/‖ν‖²)·ν`.
    pub fn perturb(&self, y: &[f64], phi: f64) -> Vec<f64> {
        let shift = (phi - self.phi_obs) / self.norm_sq;
        let mut out = y.to_vec();
        for (o, w) in out[self.tau_l - 1..self.tau_r].iter_mut().zip(&self.nu) {
            *o += shift * w;
        }
        out
    }

    /// `(u_t, v_t)` with `y′_t(φ) = u_t + v_t·φ`.
    pub fn path_coefficients(&self, y: &[f64], t: usize) -> (f64, f64) {
        let v = self.weight(t) / self.norm_sq;
        (y[t - 1] - self.phi_obs * v, v)
    }
}
