//! Spike detection in calcium-fluorescence traces with an ℓ0 exponential-decay
//! changepoint model, plus selective p-values and confidence intervals for each
//! detected spike.
//!
//! The pipeline: [`l0solver::fit`] finds spikes, [`contrast::Contrast`] builds
//! the test direction for one spike, [`sset::compute_s`] characterises the
//! conditioning set exactly, and [`truncgauss`] turns it into a p-value and a
//! confidence interval. [`inference::infer`] runs all of it for a whole trace.

pub mod contrast;
pub mod error;
pub mod evalmetrics;
pub mod inference;
pub mod l0solver;
pub mod pwq;
pub mod sim;
pub mod sset;
pub mod truncgauss;

pub use contrast::Contrast;
pub use error::{Error, Result};
pub use evalmetrics::SpikeTrain;
pub use inference::{infer, InferenceReport, InferenceResult};
pub use l0solver::{fit, SpikeFit, Trace};
pub use pwq::{BivarQuad, Candidate, IntervalSet, PiecewiseQuadratic, Quad1};
pub use sim::SimConfig;
pub use sset::compute_s;
pub use truncgauss::TruncatedGaussian;
