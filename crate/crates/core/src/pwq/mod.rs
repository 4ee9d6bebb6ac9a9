//! Piecewise-quadratic algebra in one variable, bivariate quadratic
//! candidates in `(α, φ)`, and interval sets.
//!
//! Everything here is an immutable value; every operation returns a new one.

mod bivar;
mod interval;
mod piecewise;
mod quad;

pub use bivar::{BivarQuad, Candidate};
pub use interval::{Interval, IntervalSet, MERGE_TOL};
pub use piecewise::{Envelope, Piece, PiecewiseQuadratic, Side, MIN_PIECE_REL};
pub use quad::{Quad1, ROOT_MERGE_REL};
