//! Convex factorization machines.
//!
//! The interaction matrix is optimized directly over the trace-norm ball of
//! PSD matrices with Hazan's Frank-Wolfe algorithm; the linear term is
//! eliminated in closed form. Each iteration needs one leading eigenvector
//! of a matrix-free operator (Lanczos) and a few conjugate-gradient solves.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfm;
pub mod data;
pub mod eigen;
pub mod error;
pub mod factors;
pub mod linsolve;
pub mod metrics;
pub mod sparse;
pub mod vector;

pub use cfm::{hazan_fit, hazan_fit_observed, predict, ridge_fit, CfmModel, StepRule, TrainConfig, TrainTrace};
pub use data::{split, Dataset, FeatureBlock, SplitSpec};
pub use error::{CfmError, Result};
pub use factors::LowRankFactors;
pub use sparse::CsrMatrix;
