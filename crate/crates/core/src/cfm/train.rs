//! Hazan's Frank-Wolfe loop over the unit-trace spectahedron.

use std::time::Instant;

use crate::data::Dataset;
use crate::eigen::leading_eigenvector;
use crate::error::{contract, CfmError, Result};
use crate::factors::LowRankFactors;
use crate::linsolve::{BiasedDesign, CgConfig};
use crate::vector::{dot, rmse};

use super::gradient::{exact_step, GradientDiag, GradientOperator, LinearTerm};
use super::model::{atom_scores, quad_scores, CfmModel};

/// Smallest Ritz-residual tolerance handed to the eigensolver.
pub const MIN_EIGEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `α_t = 2 / (t + 2)`.
    Harmonic,
    /// Exact minimization of the objective along the Frank-Wolfe direction.
    LineSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Trace budget η of the interaction matrix.
    pub eta: f64,
    pub lambda1: f64,
    /// Number of Frank-Wolfe steps T.
    pub max_outer_iters: usize,
    pub step_rule: StepRule,
    /// Curvature constant; step `t` asks the eigensolver for `C_f / (t+1)²`.
    pub cf_constant: f64,
    pub cg: CgConfig,
    /// Operator applications allowed per eigensolve.
    pub eigen_max_iters: usize,
    pub seed: u64,
    /// Record a trace row every `eval_every` steps (the last step is always
    /// recorded).
    pub eval_every: usize,
    /// Stop once the Frank-Wolfe gap falls to this value.
    pub stop_gap: Option<f64>,
    /// When false, `w` is pinned to zero instead of eliminated.
    pub fit_linear: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 2000.0,
            lambda1: 0.0,
            max_outer_iters: 100,
            step_rule: StepRule::LineSearch,
            cf_constant: 1.0,
            cg: CgConfig::default(),
            eigen_max_iters: 1000,
            seed: 0,
            eval_every: 1,
            stop_gap: None,
            fit_linear: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(contract(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite()) {
            return Err(contract(format!("lambda1 must be >= 0, got {}", self.lambda1)));
        }
        if self.max_outer_iters == 0 {
            return Err(contract("max_outer_iters must be at least 1"));
        }
        if !(self.cf_constant > 0.0) {
            return Err(contract(format!("C_f must be positive, got {}", self.cf_constant)));
        }
        if self.eigen_max_iters == 0 {
            return Err(contract("eigen_max_iters must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(contract("eval_every must be at least 1"));
        }
        self.cg.validate()
    }

    /// Eigensolver tolerance for step `t`.
    pub fn eigen_tol(&self, t: usize) -> f64 {
        let k = (t + 1) as f64;
        (self.cf_constant / (k * k)).max(MIN_EIGEN_TOL)
    }
}

/// One row of the convergence trace. Values describe the iterate produced by
/// step `iter` (0-based) unless noted otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `J_η` after the step.
    pub objective: f64,
    pub step_size: f64,
    /// Top eigenvalue of `−∇J_η` before the step.
    pub top_eigenvalue: f64,
    /// Frank-Wolfe gap `⟨−∇J_η, p pᵀ − W⟩` before the step.
    pub gap: f64,
    pub train_rmse: f64,
    pub test_rmse: Option<f64>,
    pub cg_iters: usize,
    pub eig_iters: usize,
    pub eig_residual: f64,
    pub rank: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    /// Set when the run ended on the gap criterion before `max_outer_iters`.
    pub stopped_early: bool,
}

impl TrainTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// State handed to a [`hazan_fit_observed`] callback after every step.
pub struct StepView<'a> {
    pub iter: usize,
    pub factors: &'a LowRankFactors,
    pub objective: f64,
    pub step_size: f64,
    /// Eliminated linear weights for the current iterate.
    pub linear: &'a [f64],
}

/// Fits a model with Hazan's algorithm. See [`hazan_fit_observed`].
pub fn hazan_fit(train: &Dataset, config: &TrainConfig, test: Option<&Dataset>) -> Result<(CfmModel, TrainTrace)> {
    hazan_fit_observed(train, config, test, |_| {})
}

/// Fits a model with Hazan's algorithm, calling `observer` after every step.
///
/// The interaction iterate starts at zero; the first step always moves all
/// the way onto the vertex `p₀ p₀ᵀ`, so every recorded iterate has unit
/// trace. Each step eliminates the linear term by CG (warm-started from the
/// previous solution), computes the top eigenvector of `−∇J_η` by Lanczos and
/// blends it in with the configured step rule.
pub fn hazan_fit_observed<F>(
    train: &Dataset,
    config: &TrainConfig,
    test: Option<&Dataset>,
    mut observer: F,
) -> Result<(CfmModel, TrainTrace)>
where
    F: FnMut(&StepView<'_>),
{
    config.validate()?;
    if train.n_samples() == 0 {
        return Err(CfmError::Input("training set is empty".into()));
    }
    let d = train.dim();
    if let Some(t) = test {
        if t.dim() != d {
            return Err(contract(format!(
                "test set has {} features but the training set has {d}",
                t.dim()
            )));
        }
    }

    let start = Instant::now();
    let (x, xsq, y) = (&train.x, &train.xsq, &train.y);
    let n = train.n_samples();
    let eta = config.eta;
    let term = LinearTerm::new(x, config.lambda1, config.cg, config.fit_linear)?;

    let mut factors = LowRankFactors::empty(d, eta);
    let mut quad = vec![0.0; n];
    let mut test_quad = test.map(|t| vec![0.0; t.n_samples()]);
    let mut state = term.eliminate(y, None)?;
    let mut trace = TrainTrace::default();
    let mut ybar = vec![0.0; n];

    for t in 0..config.max_outer_iters {
        let op = GradientOperator::new(x, xsq, &state.residual, eta)?;
        let eig = leading_eigenvector(&op, config.eigen_tol(t), config.eigen_max_iters, config.seed.wrapping_add(t as u64))?;
        let vertex = atom_scores(x, xsq, &eig.vector, eta)?;
        let direction: Vec<f64> = vertex.iter().zip(&quad).map(|(v, q)| v - q).collect();
        let gap = 2.0 * dot(&state.residual, &direction);

        if let Some(stop) = config.stop_gap {
            if factors.rank() > 0 && gap <= stop {
                log::info!("step {t}: gap {gap:.3e} <= {stop:.3e}, stopping");
                trace.stopped_early = true;
                break;
            }
        }

        let alpha = if factors.rank() == 0 {
            1.0
        } else {
            match config.step_rule {
                StepRule::Harmonic => 2.0 / (t as f64 + 2.0),
                StepRule::LineSearch => {
                    let step = exact_step(&term, &state.residual, &direction)?;
                    if step.degenerate {
                        log::debug!("step {t}: degenerate direction");
                    }
                    step.alpha
                }
            }
        };
        if eig.value <= 0.0 {
            log::debug!("step {t}: top eigenvalue {:.3e} is not positive", eig.value);
        }

        factors.blend_atom(&eig.vector, alpha)?;
        for (q, s) in quad.iter_mut().zip(&direction) {
            *q += alpha * s;
        }
        if let (Some(tq), Some(ts)) = (test_quad.as_mut(), test) {
            let tv = atom_scores(&ts.x, &ts.xsq, &eig.vector, eta)?;
            for (q, v) in tq.iter_mut().zip(tv) {
                *q = (1.0 - alpha) * *q + alpha * v;
            }
        }

        for ((b, yi), q) in ybar.iter_mut().zip(y).zip(&quad) {
            *b = yi - q;
        }
        state = term.eliminate(&ybar, Some(&state.linear))?;
        if !state.objective.is_finite() {
            return Err(CfmError::Numerical(format!(
                "objective became {} at step {t} (alpha = {alpha}, eigenvalue = {})",
                state.objective, eig.value
            )));
        }

        let last = t + 1 == config.max_outer_iters;
        if t % config.eval_every == 0 || last {
            let test_rmse = match (test, test_quad.as_ref()) {
                (Some(ts), Some(tq)) => Some(rmse(&ts.y, &linear_plus(&ts.x, &state.linear, tq))),
                _ => None,
            };
            let record = TraceRecord {
                iter: t,
                objective: state.objective,
                step_size: alpha,
                top_eigenvalue: eig.value,
                gap,
                train_rmse: (dot(&state.residual, &state.residual) / n as f64).sqrt(),
                test_rmse,
                cg_iters: state.cg_iterations,
                eig_iters: eig.iterations,
                eig_residual: eig.residual,
                rank: factors.rank(),
                elapsed_seconds: start.elapsed().as_secs_f64(),
            };
            log::debug!(
                "step {t}: J = {:.6e}, alpha = {alpha:.4}, eig = {:.4e}, train rmse = {:.5}, test rmse = {:?}",
                record.objective,
                record.top_eigenvalue,
                record.train_rmse,
                record.test_rmse
            );
            trace.records.push(record);
        }
        observer(&StepView {
            iter: t,
            factors: &factors,
            objective: state.objective,
            step_size: alpha,
            linear: &state.linear,
        });
    }

    // final linear weights against freshly evaluated scores
    let fresh = quad_scores(x, xsq, &factors)?;
    let ybar: Vec<f64> = y.iter().zip(&fresh).map(|(a, b)| a - b).collect();
    let GradientDiag { linear, .. } = term.eliminate(&ybar, Some(&state.linear))?;
    let model = CfmModel::new(linear, factors, config.lambda1)?;
    Ok((model, trace))
}

fn linear_plus(x: &crate::sparse::CsrMatrix, w: &[f64], quad: &[f64]) -> Vec<f64> {
    let mut out = BiasedDesign::new(x).scores(w);
    for (o, q) in out.iter_mut().zip(quad) {
        *o += q;
    }
    out
}

/// Linear-only baseline: `w = argmin ‖y − Zᵀw‖² + λ₁‖w‖²` with no
/// interaction term. The factors are rank 0 with unit scale.
pub fn ridge_fit(train: &Dataset, lambda1: f64, cg: &CgConfig) -> Result<CfmModel> {
    if train.n_samples() == 0 {
        return Err(CfmError::Input("training set is empty".into()));
    }
    let term = LinearTerm::new(&train.x, lambda1, *cg, true)?;
    let state = term.eliminate(&train.y, None)?;
    CfmModel::new(state.linear, LowRankFactors::empty(train.dim(), 1.0), lambda1)
}
