//! Conjugate-gradient machinery for the eliminated linear term.
//!
//! `Z = [1 | X]ᵀ` is the design with a bias row prepended; it is never
//! materialized. All operators below are applied through two sparse products
//! per step:
//!
//! * `solve_linear_term`: `(Z Zᵀ + λ₁ I) w = Z t`
//! * `apply_r`: `R v = v − Zᵀ (Z Zᵀ + λ₁ I)⁻¹ Z v`
//! * `apply_c`: `C v = Rᵀ R v + λ₁ Hᵀ H v` with `H = (Z Zᵀ + λ₁ I)⁻¹ Z`

use crate::error::{check_finite, check_len, contract, Result};
use crate::sparse::CsrMatrix;
use crate::vector::{axpy, dot, norm2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    /// Inverse of `diag(Z Zᵀ) + λ₁`.
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgConfig {
    /// Relative residual `‖b − A x‖ / ‖b‖` at which CG stops.
    pub tol: f64,
    pub max_iters: usize,
    pub preconditioner: Preconditioner,
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 2000,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl CgConfig {
    /// Defaults sized for a `d`-feature design: `10 (d + 1)` steps, at most 2000.
    pub fn for_dim(d: usize) -> Self {
        Self {
            max_iters: (10 * (d + 1)).min(2000),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(contract(format!("CG tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(contract("CG max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradient for a symmetric positive (semi)definite
/// operator. `precond`, when given, holds the diagonal of `M⁻¹`.
///
/// Singular but consistent systems are fine: iterates stay in the range of the
/// operator plus whatever the start vector contributed.
pub fn conjugate_gradient<F>(
    apply: F,
    rhs: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&[f64]>,
    cfg: &CgConfig,
) -> CgSolution
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let b_norm = norm2(rhs);
    if b_norm == 0.0 {
        return CgSolution {
            solution: vec![0.0; n],
            iterations: 0,
            final_relative_residual: 0.0,
            converged: true,
        };
    }

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut ap = vec![0.0; n];
    let mut r = rhs.to_vec();
    if x0.is_some() {
        apply(&x, &mut ap);
        axpy(-1.0, &ap, &mut r);
    }
    let precondition = |r: &[f64], z: &mut [f64]| match precond {
        Some(m) => {
            for ((zi, ri), mi) in z.iter_mut().zip(r).zip(m) {
                *zi = ri * mi;
            }
        }
        None => z.copy_from_slice(r),
    };

    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut rel = norm2(&r) / b_norm;

    while rel > cfg.tol && iterations < cfg.max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // direction in the null space; nothing left to reduce along it
            break;
        }
        let step = rz / pap;
        axpy(step, &p, &mut x);
        axpy(-step, &ap, &mut r);
        iterations += 1;
        rel = norm2(&r) / b_norm;
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    // report the true residual rather than the recurrence
    apply(&x, &mut ap);
    let mut true_r = rhs.to_vec();
    axpy(-1.0, &ap, &mut true_r);
    let final_rel = norm2(&true_r) / b_norm;
    CgSolution {
        solution: x,
        iterations,
        final_relative_residual: final_rel,
        converged: rel <= cfg.tol,
    }
}

/// Implicit `Z = [1 | X]ᵀ` over a sample-major design `X`, or `Z = Xᵀ` when
/// built without an intercept.
#[derive(Debug, Clone, Copy)]
pub struct BiasedDesign<'a> {
    x: &'a CsrMatrix,
    intercept: bool,
}

impl<'a> BiasedDesign<'a> {
    pub fn new(x: &'a CsrMatrix) -> Self {
        Self { x, intercept: true }
    }

    pub fn without_intercept(x: &'a CsrMatrix) -> Self {
        Self { x, intercept: false }
    }

    pub fn n_samples(&self) -> usize {
        self.x.n_rows()
    }

    /// `d + 1` (or `d` without an intercept).
    pub fn n_params(&self) -> usize {
        self.x.n_cols() + usize::from(self.intercept)
    }

    /// `out = Zᵀ w`, i.e. `w₀ + X w[1..]` per sample.
    pub fn scores_into(&self, w: &[f64], out: &mut [f64]) {
        if !self.intercept {
            self.x.spmv_into(w, out);
            return;
        }
        self.x.spmv_into(&w[1..], out);
        for o in out.iter_mut() {
            *o += w[0];
        }
    }

    pub fn scores(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_samples()];
        self.scores_into(w, &mut out);
        out
    }

    /// `out = Z v`, i.e. `[Σ v, Xᵀ v]`.
    pub fn gather_into(&self, v: &[f64], out: &mut [f64]) {
        if !self.intercept {
            self.x.spmv_transpose_into(v, out);
            return;
        }
        out[0] = v.iter().sum();
        self.x.spmv_transpose_into(v, &mut out[1..]);
    }

    pub fn gather(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_params()];
        self.gather_into(v, &mut out);
        out
    }

    /// `diag(Z Zᵀ)`.
    pub fn gram_diagonal(&self) -> Vec<f64> {
        let mut diag = Vec::with_capacity(self.n_params());
        if self.intercept {
            diag.push(self.n_samples() as f64);
        }
        diag.extend(self.x.column_square_sums());
        diag
    }
}

/// Ridge-regularized normal-equation solver bound to one design.
///
/// Caches the Jacobi diagonal so repeated solves on the same design pay for it
/// once.
#[derive(Debug, Clone)]
pub struct LinearSolver<'a> {
    design: BiasedDesign<'a>,
    lambda1: f64,
    cfg: CgConfig,
    precond: Option<Vec<f64>>,
}

impl<'a> LinearSolver<'a> {
    pub fn new(x: &'a CsrMatrix, lambda1: f64, cfg: CgConfig) -> Result<Self> {
        Self::with_design(BiasedDesign::new(x), lambda1, cfg)
    }

    pub fn with_design(design: BiasedDesign<'a>, lambda1: f64, cfg: CgConfig) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda1.is_finite()) {
            return Err(contract(format!("lambda1 must be finite and >= 0, got {lambda1}")));
        }
        cfg.validate()?;
        let precond = match cfg.preconditioner {
            Preconditioner::None => None,
            Preconditioner::Jacobi => Some(
                design
                    .gram_diagonal()
                    .into_iter()
                    .map(|g| {
                        let g = g + lambda1;
                        // columns that never occur keep a unit scaling
                        if g > 0.0 {
                            1.0 / g
                        } else {
                            1.0
                        }
                    })
                    .collect(),
            ),
        };
        Ok(Self {
            design,
            lambda1,
            cfg,
            precond,
        })
    }

    pub fn design(&self) -> BiasedDesign<'a> {
        self.design
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Solves `(Z Zᵀ + λ₁ I) w = rhs` for a right-hand side in parameter space.
    pub fn solve_normal(&self, rhs: &[f64], warm_start: Option<&[f64]>) -> Result<CgSolution> {
        let p = self.design.n_params();
        check_len("normal-equation right-hand side", rhs.len(), p)?;
        if let Some(w) = warm_start {
            check_len("warm start", w.len(), p)?;
            check_finite("warm start", w)?;
        }
        let mut scratch = vec![0.0; self.design.n_samples()];
        let scratch = std::cell::RefCell::new(&mut scratch);
        let lambda1 = self.lambda1;
        let design = self.design;
        let apply = |v: &[f64], out: &mut [f64]| {
            let mut s = scratch.borrow_mut();
            design.scores_into(v, &mut s);
            design.gather_into(&s, out);
            if lambda1 != 0.0 {
                axpy(lambda1, v, out);
            }
        };
        Ok(conjugate_gradient(
            apply,
            rhs,
            warm_start,
            self.precond.as_deref(),
            &self.cfg,
        ))
    }

    /// `argmin_w ‖Zᵀ w − target‖² + λ₁ ‖w‖²`.
    pub fn solve_linear_term(&self, target: &[f64], warm_start: Option<&[f64]>) -> Result<CgSolution> {
        check_len("target", target.len(), self.design.n_samples())?;
        check_finite("target", target)?;
        let rhs = self.design.gather(target);
        self.solve_normal(&rhs, warm_start)
    }

    /// `R v = v − Zᵀ H v`.
    pub fn apply_r(&self, v: &[f64]) -> Result<Vec<f64>> {
        let sol = self.solve_linear_term(v, None)?;
        Ok(self.residual_of(v, &sol.solution))
    }

    /// `v − Zᵀ w`.
    pub fn residual_of(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let mut out = self.design.scores(w);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - *o;
        }
        out
    }

    /// `C v = Rᵀ (R v) + λ₁ Hᵀ (H v)`. At `λ₁ = 0` this is `R v`.
    pub fn apply_c(&self, v: &[f64]) -> Result<Vec<f64>> {
        let hv = self.solve_linear_term(v, None)?.solution;
        let rv = self.residual_of(v, &hv);
        if self.lambda1 == 0.0 {
            return Ok(rv);
        }
        let mut out = self.apply_r(&rv)?;
        // Hᵀ u = Zᵀ (Z Zᵀ + λ₁ I)⁻¹ u
        let k_inv_hv = self.solve_normal(&hv, None)?.solution;
        axpy(self.lambda1, &self.design.scores(&k_inv_hv), &mut out);
        Ok(out)
    }
}

/// One-shot form of [`LinearSolver::solve_linear_term`].
pub fn solve_linear_term(
    x: &CsrMatrix,
    target: &[f64],
    lambda1: f64,
    warm_start: Option<&[f64]>,
    cfg: &CgConfig,
) -> Result<CgSolution> {
    LinearSolver::new(x, lambda1, *cfg)?.solve_linear_term(target, warm_start)
}

pub fn apply_r(x: &CsrMatrix, v: &[f64], lambda1: f64, cfg: &CgConfig) -> Result<Vec<f64>> {
    LinearSolver::new(x, lambda1, *cfg)?.apply_r(v)
}

pub fn apply_c(x: &CsrMatrix, v: &[f64], lambda1: f64, cfg: &CgConfig) -> Result<Vec<f64>> {
    LinearSolver::new(x, lambda1, *cfg)?.apply_c(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CfmError;

    fn tight() -> CgConfig {
        CgConfig {
            tol: 1e-13,
            max_iters: 500,
            preconditioner: Preconditioner::Jacobi,
        }
    }

    fn design(rows: &[&[f64]]) -> CsrMatrix {
        let dense: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        CsrMatrix::from_dense(&dense, rows[0].len()).unwrap()
    }

    /// Dense `(A^T A) w = A^T t` by Gaussian elimination; `a` is row-major n×p.
    #[allow(clippy::needless_range_loop)]
    fn dense_ls(a: &[Vec<f64>], t: &[f64]) -> Vec<f64> {
        let p = a[0].len();
        let mut m = vec![vec![0.0; p + 1]; p];
        for (row, ti) in a.iter().zip(t) {
            for i in 0..p {
                for j in 0..p {
                    m[i][j] += row[i] * row[j];
                }
                m[i][p] += row[i] * ti;
            }
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for k in c..=p {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
        (0..p).map(|i| m[i][p] / m[i][i]).collect()
    }

    #[test]
    fn zero_target_gives_zero_solution() {
        let x = design(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, 0.0]]);
        let sol = solve_linear_term(&x, &[0.0; 3], 0.5, None, &tight()).unwrap();
        assert!(sol.solution.iter().all(|&w| w == 0.0));
        assert!(sol.converged);
    }

    #[test]
    fn two_feature_example_matches_dense_oracle() {
        // Zᵀ rows are [1, x]; the design without bias is [[1,0],[1,1],[0,1]].
        // With the bias column the system is 3×3 on 3 samples, so it
        // interpolates; check against the dense oracle.
        let x = design(&[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let t = [1.0, 2.0, 1.0];
        let sol = solve_linear_term(&x, &t, 0.0, None, &tight()).unwrap();
        let z: Vec<Vec<f64>> = x.to_dense().into_iter().map(|r| [vec![1.0], r].concat()).collect();
        let oracle = dense_ls(&z, &t);
        for (a, b) in sol.solution.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{:?} vs {:?}", sol.solution, oracle);
        }
        // oracle value: w = (0, 1, 1) interpolates (1, 2, 1)
        assert!((oracle[0]).abs() < 1e-12 && (oracle[1] - 1.0).abs() < 1e-12 && (oracle[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plain_design_examples() {
        // Zᵀ = I₃, target (1,2,3)
        let eye = design(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let s = LinearSolver::with_design(BiasedDesign::without_intercept(&eye), 0.0, tight()).unwrap();
        let w = s.solve_linear_term(&[1.0, 2.0, 3.0], None).unwrap().solution;
        for (a, b) in w.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        // Zᵀ = [[1,0],[1,1],[0,1]], target (1,2,1): Z Zᵀ = [[2,1],[1,2]],
        // Z t = (3,3), so the dense oracle gives w = (1,1).
        let zt = design(&[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        let s = LinearSolver::with_design(BiasedDesign::without_intercept(&zt), 0.0, tight()).unwrap();
        let w = s.solve_linear_term(&[1.0, 2.0, 1.0], None).unwrap().solution;
        let oracle = dense_ls(&zt.to_dense(), &[1.0, 2.0, 1.0]);
        for ((a, b), e) in w.iter().zip(&oracle).zip([1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12 && (b - e).abs() < 1e-12);
        }

        // Zᵀ = [[1,0],[0,1],[1,1]], v = (1,1,-1) is orthogonal to both columns,
        // so the dense projector leaves it unchanged.
        let zt = design(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let s = LinearSolver::with_design(BiasedDesign::without_intercept(&zt), 0.0, tight()).unwrap();
        let r = s.apply_r(&[1.0, 1.0, -1.0]).unwrap();
        for (a, b) in r.iter().zip([1.0, 1.0, -1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // and a vector in the range is annihilated
        let r = s.apply_r(&[2.0, -1.0, 1.0]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn bias_only_projection_removes_constants() {
        let x = CsrMatrix::zeros(4, 0);
        let r = apply_r(&x, &[1.0; 4], 0.0, &tight()).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        let r = apply_r(&x, &[1.0, 2.0, 3.0, 6.0], 0.0, &tight()).unwrap();
        assert_eq!(r.len(), 4);
        for (ri, e) in r.iter().zip([-2.0, -1.0, 0.0, 3.0]) {
            assert!((ri - e).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_c_zero_vector() {
        let x = design(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, 0.0], &[1.0, 1.0]]);
        let c = apply_c(&x, &[0.0; 4], 0.1, &tight()).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn warm_start_at_solution_needs_no_iterations() {
        let x = design(&[&[1.0, 2.0], &[0.0, 1.0], &[3.0, 0.0], &[1.0, 1.0]]);
        let t = [1.0, -1.0, 2.0, 0.5];
        let solver = LinearSolver::new(&x, 0.0, tight()).unwrap();
        let cold = solver.solve_linear_term(&t, None).unwrap();
        let warm = solver.solve_linear_term(&t, Some(&cold.solution)).unwrap();
        assert!(warm.iterations <= 1);
        for (a, b) in cold.solution.iter().zip(&warm.solution) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn errors_on_bad_inputs() {
        let x = design(&[&[1.0], &[2.0]]);
        let cfg = tight();
        assert!(matches!(
            solve_linear_term(&x, &[1.0], 0.0, None, &cfg),
            Err(CfmError::Contract(_))
        ));
        assert!(matches!(
            solve_linear_term(&x, &[1.0, f64::NAN], 0.0, None, &cfg),
            Err(CfmError::Input(_))
        ));
        assert!(solve_linear_term(&x, &[1.0, 2.0], -1.0, None, &cfg).is_err());
        assert!(solve_linear_term(&x, &[1.0, 2.0], 0.0, Some(&[0.0]), &cfg).is_err());
        let bad = CgConfig { tol: 0.0, ..cfg };
        assert!(solve_linear_term(&x, &[1.0, 2.0], 0.0, None, &bad).is_err());
    }

    #[test]
    fn max_iters_reached_reports_not_converged() {
        let x = design(&[&[1.0, 2.0, 0.5], &[0.0, 1.0, 3.0], &[3.0, 0.0, 1.0], &[1.0, 1.0, 1.0], &[2.0, 0.0, 0.0]]);
        let cfg = CgConfig {
            tol: 1e-14,
            max_iters: 1,
            preconditioner: Preconditioner::None,
        };
        let sol = solve_linear_term(&x, &[1.0, 2.0, 3.0, 4.0, 5.0], 0.0, None, &cfg).unwrap();
        assert_eq!(sol.iterations, 1);
        assert!(!sol.converged);
        assert!(sol.final_relative_residual > 0.0);
    }

    #[test]
    fn for_dim_caps_iterations() {
        assert_eq!(CgConfig::for_dim(9).max_iters, 100);
        assert_eq!(CgConfig::for_dim(10_000).max_iters, 2000);
    }
}
