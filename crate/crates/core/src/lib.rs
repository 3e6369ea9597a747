//! Cost-decay machinery for the k-means and k-median objectives.
//!
//! The crate builds the upper-bound point sets (1-D grids, direction fans,
//! metric annuli), generates geometric lower-bound instances, runs D²-sampling
//! past `k` centers, turns geometric coresets into weighted coresets, and
//! checks every guarantee against exact oracles on small instances.

pub mod constructions;
pub mod coreset;
pub mod cost;
pub mod error;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod metricspace;
pub mod nets;
pub mod rng;
pub mod sampling;
pub mod solvers;

pub use cost::{CenterSet, CostReport};
pub use error::{Error, Result};
pub use geometry::{CostKind, Dataset, FiniteMetric, Point, WeightedSet};

/// Crate version, stamped into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative slack used when certifying an inequality that holds exactly in
/// real arithmetic.
pub const REL_TOL: f64 = 1e-9;

/// `lhs <= rhs` up to [`REL_TOL`].
#[inline]
pub fn leq_rel(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_TOL * rhs.abs().max(lhs.abs())
}
