//! Numerical laboratory for the two-dimensional MHD boundary-layer equations.
//!
//! The crate evolves the homogenized boundary-layer system on a periodic-in-x,
//! truncated-in-y grid, solves the Crocco-transformed formulation for
//! cross-checks, and measures the quantities that control its stability:
//! weighted Sobolev norms, the good-unknown transformation with its
//! cancellation, and a difference contraction between two solutions.

pub mod constants;
pub mod convergence;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod good_unknowns;
pub mod grid;
pub mod inequalities;
pub mod io;
pub mod mms;
pub mod norms;
pub mod ops;
pub mod outer;
pub mod runner;
pub mod scenario;
pub mod solver;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
