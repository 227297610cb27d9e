//! The convex factorization machine: model, objective, gradient and the
//! Frank-Wolfe trainer.

mod gradient;
mod io;
mod model;
mod train;

pub use gradient::{
    gradient_diag, gradient_operator, line_search_step, objective, objective_from_scores, GradientDiag,
    GradientOperator, LineSearchStep,
};
pub use io::{FORMAT_VERSION, MAGIC};
pub use model::{atom_scores, predict, quad_scores, CfmModel};
pub use train::{
    hazan_fit, hazan_fit_observed, ridge_fit, StepRule, StepView, TraceRecord, TrainConfig, TrainTrace,
    MIN_EIGEN_TOL,
};
