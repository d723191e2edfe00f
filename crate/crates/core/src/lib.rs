//! Numerics for gluing Hermitian Yang-Mills connections onto the blowup of a
//! Kähler surface at a point.
//!
//! The heavy lifting happens on U(n)-invariant data, where every field is a
//! matrix-valued function of `t = log|z|²` (see [`geometry::radial`]). Pointwise
//! chart evaluations in full complex coordinates live alongside for the
//! geometric checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acceptance;
pub mod bundle;
pub mod geometry;
pub mod linalg;
pub mod linear;
pub mod oracle;
pub mod scenario;
pub mod solver;
pub mod stats;
pub mod weighted;

use thiserror::Error;

pub use linalg::{CMat, C64};

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(
        "unsupported complex dimension n = {0}; only n = 2 has an explicit Burns-Simanca potential"
    )]
    UnsupportedDimension(usize),
    #[error("point at |z| = {radius:.3e} lies outside the {expected} region")]
    Region { radius: f64, expected: &'static str },
    #[error("positivity lost: min eigenvalue {min_eig:.3e} at {location}")]
    Positivity { min_eig: f64, location: String },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("insufficient grid support: {0}")]
    InsufficientGrid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (last increment {last:.3e})")]
    NonConvergence { iterations: usize, last: f64 },
    #[error("iterate left the ball: norm {norm:.3e} > radius {radius:.3e}")]
    BallExit { norm: f64, radius: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
