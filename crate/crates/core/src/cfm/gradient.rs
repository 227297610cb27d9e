//! Objective, gradient and exact step size with the linear term eliminated.
//!
//! For quadratic scores `q = f_Q(X; ηW)` and `ȳ = y − q`, the objective is
//! `J_η(W) = ȳᵀ C ȳ`. `C` simplifies to `R` for every `λ₁ ≥ 0`
//! (`R² = R − λ₁ HᵀH`), so
//!
//! * `D = C ȳ = ȳ − Zᵀ ŵ` is the residual of the full model, with
//!   `ŵ = (Z Zᵀ + λ₁ I)⁻¹ Z ȳ`;
//! * `J_η = ‖ȳ − Zᵀŵ‖² + λ₁ ‖ŵ‖²`, the ridge optimum for target `ȳ`;
//! * `−∇J_η(W) = η (Xᵀ diag(D) X − diag(Σᵢ Dᵢ xᵢ ∘ xᵢ))` on features.

use crate::eigen::SymmetricOperator;
use crate::error::{check_finite, check_len, CfmError, Result};
use crate::factors::LowRankFactors;
use crate::linsolve::{CgConfig, LinearSolver};
use crate::sparse::CsrMatrix;
use crate::vector::dot;

use super::model::{atom_scores, quad_scores};

/// Output of one elimination of the linear term.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientDiag {
    /// `D = ȳ − Zᵀŵ`, the diagonal of the gradient's middle factor.
    pub residual: Vec<f64>,
    /// `ŵ`, bias first.
    pub linear: Vec<f64>,
    /// `J_η` at the current iterate.
    pub objective: f64,
    pub cg_iterations: usize,
}

/// How the linear term is handled while optimizing `W`.
#[derive(Debug, Clone)]
pub(crate) enum LinearTerm<'a> {
    /// `w` is eliminated in closed form (the normal case).
    Eliminated(LinearSolver<'a>),
    /// `w` is pinned to zero; `R` becomes the identity. Reduces the problem
    /// to plain trace-norm matrix completion.
    Pinned { n_params: usize },
}

impl<'a> LinearTerm<'a> {
    pub(crate) fn new(x: &'a CsrMatrix, lambda1: f64, cg: CgConfig, fit_linear: bool) -> Result<Self> {
        Ok(if fit_linear {
            Self::Eliminated(LinearSolver::new(x, lambda1, cg)?)
        } else {
            Self::Pinned {
                n_params: x.n_cols() + 1,
            }
        })
    }

    /// Eliminates `w` for the partial target `ȳ`.
    pub(crate) fn eliminate(&self, ybar: &[f64], warm: Option<&[f64]>) -> Result<GradientDiag> {
        check_finite("partial residual", ybar)?;
        match self {
            Self::Eliminated(solver) => {
                let sol = solver.solve_linear_term(ybar, warm)?;
                if !sol.converged {
                    log::debug!(
                        "CG stopped after {} iterations at relative residual {:.3e}",
                        sol.iterations,
                        sol.final_relative_residual
                    );
                }
                let residual = solver.residual_of(ybar, &sol.solution);
                let objective = dot(&residual, &residual) + solver.lambda1() * dot(&sol.solution, &sol.solution);
                Ok(GradientDiag {
                    residual,
                    linear: sol.solution,
                    objective,
                    cg_iterations: sol.iterations,
                })
            }
            Self::Pinned { n_params } => Ok(GradientDiag {
                objective: dot(ybar, ybar),
                residual: ybar.to_vec(),
                linear: vec![0.0; *n_params],
                cg_iterations: 0,
            }),
        }
    }

    /// `sᵀ C s`.
    pub(crate) fn quad_form(&self, s: &[f64]) -> Result<f64> {
        match self {
            Self::Eliminated(solver) => {
                let sol = solver.solve_linear_term(s, None)?;
                let r = solver.residual_of(s, &sol.solution);
                Ok(dot(&r, &r) + solver.lambda1() * dot(&sol.solution, &sol.solution))
            }
            Self::Pinned { .. } => Ok(dot(s, s)),
        }
    }
}

fn partial_residual(y: &[f64], quad: &[f64]) -> Vec<f64> {
    y.iter().zip(quad).map(|(a, b)| a - b).collect()
}

/// Residual diagonal `D` and eliminated linear weights at `factors`.
pub fn gradient_diag(
    y: &[f64],
    x: &CsrMatrix,
    xsq: &CsrMatrix,
    factors: &LowRankFactors,
    lambda1: f64,
    cg: &CgConfig,
    warm: Option<&[f64]>,
) -> Result<GradientDiag> {
    check_len("targets", y.len(), x.n_rows())?;
    let quad = quad_scores(x, xsq, factors)?;
    LinearTerm::new(x, lambda1, *cg, true)?.eliminate(&partial_residual(y, &quad), warm)
}

/// `J_η` at `factors`.
pub fn objective(
    y: &[f64],
    x: &CsrMatrix,
    xsq: &CsrMatrix,
    factors: &LowRankFactors,
    lambda1: f64,
    cg: &CgConfig,
) -> Result<f64> {
    Ok(gradient_diag(y, x, xsq, factors, lambda1, cg, None)?.objective)
}

/// `J` for arbitrary precomputed quadratic scores (which need not come from
/// a PSD matrix). Useful for finite-difference checks.
pub fn objective_from_scores(y: &[f64], x: &CsrMatrix, quad: &[f64], lambda1: f64, cg: &CgConfig) -> Result<f64> {
    check_len("targets", y.len(), x.n_rows())?;
    check_len("quadratic scores", quad.len(), x.n_rows())?;
    Ok(LinearTerm::new(x, lambda1, *cg, true)?
        .eliminate(&partial_residual(y, quad), None)?
        .objective)
}

/// The negated, η-scaled gradient `−∇J_η(W)` as a matrix-free operator on
/// feature space.
pub struct GradientOperator<'a> {
    x: &'a CsrMatrix,
    weights: &'a [f64],
    diag_correction: Vec<f64>,
    scale: f64,
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl<'a> GradientOperator<'a> {
    /// `weights` is the residual diagonal `D`, `scale` is η.
    pub fn new(x: &'a CsrMatrix, xsq: &CsrMatrix, weights: &'a [f64], scale: f64) -> Result<Self> {
        check_len("gradient weights", weights.len(), x.n_rows())?;
        check_len("squared design rows", xsq.n_rows(), x.n_rows())?;
        Ok(Self {
            x,
            weights,
            diag_correction: xsq.spmv_transpose(weights)?,
            scale,
            scratch: std::cell::RefCell::new(vec![0.0; x.n_rows()]),
        })
    }

    /// `η Xᵀ diag(D) X v`, without removing the diagonal.
    pub fn apply_gram(&self, v: &[f64], out: &mut [f64]) {
        let mut s = self.scratch.borrow_mut();
        self.x.spmv_into(v, &mut s);
        for (si, di) in s.iter_mut().zip(self.weights) {
            *si *= di * self.scale;
        }
        self.x.spmv_transpose_into(&s, out);
    }
}

impl SymmetricOperator for GradientOperator<'_> {
    fn dim(&self) -> usize {
        self.x.n_cols()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.apply_gram(v, out);
        for ((o, c), vi) in out.iter_mut().zip(&self.diag_correction).zip(v) {
            *o -= self.scale * c * vi;
        }
    }
}

pub fn gradient_operator<'a>(
    x: &'a CsrMatrix,
    xsq: &CsrMatrix,
    residual: &'a [f64],
    scale: f64,
) -> Result<GradientOperator<'a>> {
    GradientOperator::new(x, xsq, residual, scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchStep {
    /// Step in `[0, 1]`.
    pub alpha: f64,
    /// Minimizer of the unconstrained 1-D quadratic, before clamping.
    pub unclamped: f64,
    /// The direction does not change the objective at all.
    pub degenerate: bool,
}

/// Exact minimizer of `α ↦ J(ȳ − α s)` on `[0, 1]`, given `D = C ȳ`.
pub(crate) fn exact_step(term: &LinearTerm<'_>, residual: &[f64], direction: &[f64]) -> Result<LineSearchStep> {
    let den = term.quad_form(direction)?;
    if !(den >= 1e-300) {
        return Ok(LineSearchStep {
            alpha: 0.0,
            unclamped: 0.0,
            degenerate: true,
        });
    }
    let unclamped = dot(residual, direction) / den;
    if !unclamped.is_finite() {
        return Err(CfmError::Numerical(format!("line search produced {unclamped}")));
    }
    Ok(LineSearchStep {
        alpha: unclamped.clamp(0.0, 1.0),
        unclamped,
        degenerate: false,
    })
}

/// Optimal step from `factors` towards the vertex `η p pᵀ`.
pub fn line_search_step(
    y: &[f64],
    x: &CsrMatrix,
    xsq: &CsrMatrix,
    factors: &LowRankFactors,
    atom: &[f64],
    lambda1: f64,
    cg: &CgConfig,
) -> Result<LineSearchStep> {
    check_len("targets", y.len(), x.n_rows())?;
    let term = LinearTerm::new(x, lambda1, *cg, true)?;
    let quad = quad_scores(x, xsq, factors)?;
    let state = term.eliminate(&partial_residual(y, &quad), None)?;
    let mut direction = atom_scores(x, xsq, atom, factors.scale())?;
    for (s, q) in direction.iter_mut().zip(&quad) {
        *s -= q;
    }
    exact_step(&term, &state.residual, &direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> CgConfig {
        CgConfig {
            tol: 1e-13,
            max_iters: 500,
            ..CgConfig::default()
        }
    }

    fn dense(rows: &[&[f64]]) -> CsrMatrix {
        let d: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        CsrMatrix::from_dense(&d, rows[0].len()).unwrap()
    }

    #[test]
    fn zero_targets_give_zero_residual() {
        let x = dense(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let f = LowRankFactors::empty(2, 1.0);
        let g = gradient_diag(&[0.0; 3], &x, &x.row_squared(), &f, 0.0, &cfg(), None).unwrap();
        assert!(g.residual.iter().all(|&v| v == 0.0));
        assert!(g.linear.iter().all(|&v| v == 0.0));
        assert_eq!(g.objective, 0.0);
    }

    #[test]
    fn perfect_linear_fit_has_zero_residual() {
        let x = dense(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[2.0, -1.0]]);
        let w_true = [0.5, -1.0, 2.0];
        let y = crate::linsolve::BiasedDesign::new(&x).scores(&w_true);
        let f = LowRankFactors::empty(2, 1.0);
        let g = gradient_diag(&y, &x, &x.row_squared(), &f, 0.0, &cfg(), None).unwrap();
        assert!(g.residual.iter().all(|v| v.abs() < 1e-10));
        assert!(g.objective < 1e-18);
        for (a, b) in g.linear.iter().zip(w_true) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_residual_operator_is_zero() {
        let x = dense(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let xsq = x.row_squared();
        let d = [0.0, 0.0];
        let op = GradientOperator::new(&x, &xsq, &d, 5.0).unwrap();
        let mut out = vec![1.0; 2];
        op.apply(&[1.0, -3.0], &mut out);
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_design_operator() {
        // With X = I every sample has a single feature, so the Gram part is
        // diag(η D) and the diagonal correction cancels it exactly.
        let x = dense(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let xsq = x.row_squared();
        let d = [2.0, -1.0, 0.5];
        let op = GradientOperator::new(&x, &xsq, &d, 3.0).unwrap();
        let v = [1.0, 2.0, 3.0];
        let mut gram = vec![0.0; 3];
        op.apply_gram(&v, &mut gram);
        assert_eq!(gram, vec![6.0, -6.0, 4.5]);
        let mut full = vec![0.0; 3];
        op.apply(&v, &mut full);
        assert!(full.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_score_direction_is_degenerate() {
        // feature 2 never appears, so p = e₂ has zero scores from rank 0
        let x = dense(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0]]);
        let f = LowRankFactors::empty(3, 2.0);
        let step = line_search_step(&[1.0, 2.0, 3.0], &x, &x.row_squared(), &f, &[0.0, 0.0, 1.0], 0.0, &cfg()).unwrap();
        assert!(step.degenerate);
        assert_eq!(step.alpha, 0.0);
    }
}
