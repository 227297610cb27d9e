//! Matrix-free Lanczos iteration for the largest algebraic eigenpair of a
//! symmetric operator.
//!
//! The Krylov basis is fully reorthogonalized at every step. When the basis
//! reaches [`MAX_BASIS`] vectors without meeting the tolerance, the iteration
//! restarts from the best Ritz vector found so far.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{contract, CfmError, Result};
use crate::vector::{axpy, dot, norm2, scale};

/// Largest Krylov basis kept before a restart.
pub const MAX_BASIS: usize = 300;

/// A linear, symmetric map `ℝ^dim → ℝ^dim` known only through its action.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `out = A v`. `out` has length `dim` and may hold stale data.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

/// Adapts a closure into a [`SymmetricOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (self.f)(v, out)
    }
}

/// Dense row-major symmetric matrix, handy for small problems.
#[derive(Debug, Clone)]
pub struct DenseSymmetric {
    dim: usize,
    values: Vec<f64>,
}

impl DenseSymmetric {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(contract("dense operator needs dim² values"));
        }
        Ok(Self { dim, values })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut values = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            values[i * dim + i] = *d;
        }
        Self { dim, values }
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.values[i * self.dim..(i + 1) * self.dim], v);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    /// Unit-norm Ritz vector.
    pub vector: Vec<f64>,
    /// Rayleigh quotient of `vector`.
    pub value: f64,
    /// Operator applications spent inside the Lanczos recurrence.
    pub iterations: usize,
    /// `‖A v − value · v‖`.
    pub residual: f64,
    /// Best Ritz value after each Lanczos step.
    pub ritz_history: Vec<f64>,
}

impl EigResult {
    pub fn converged(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Largest algebraic eigenpair of `op`.
///
/// Stops once the Ritz residual estimate drops to `tol` or after `max_iters`
/// operator applications. The start vector is a Gaussian draw from a ChaCha8
/// stream seeded with `seed`, so runs are reproducible.
pub fn leading_eigenvector<O: SymmetricOperator + ?Sized>(
    op: &O,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<EigResult> {
    let dim = op.dim();
    if dim == 0 {
        return Err(contract("operator dimension must be at least 1"));
    }
    if !(tol > 0.0) {
        return Err(contract(format!("eigen tolerance must be positive, got {tol}")));
    }
    if max_iters == 0 {
        return Err(contract("eigen max_iters must be at least 1"));
    }

    let mut av = vec![0.0; dim];
    if dim == 1 {
        op.apply(&[1.0], &mut av);
        check_output(&av)?;
        return Ok(EigResult {
            vector: vec![1.0],
            value: av[0],
            iterations: 1,
            residual: 0.0,
            ritz_history: vec![av[0]],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = norm2(&start);
    scale(1.0 / n, &mut start);

    let basis_cap = MAX_BASIS.min(max_iters).min(dim);
    let mut iterations = 0;
    let mut history: Vec<f64> = Vec::new();
    let mut best = start;

    loop {
        let budget = basis_cap.min(max_iters - iterations);
        let run = lanczos_run(op, &best, budget, tol)?;
        iterations += run.steps;
        for theta in run.ritz {
            let prev = history.last().copied().unwrap_or(f64::NEG_INFINITY);
            history.push(theta.max(prev));
        }
        best = run.vector;
        if run.done || iterations >= max_iters {
            break;
        }
    }

    op.apply(&best, &mut av);
    check_output(&av)?;
    let value = dot(&best, &av);
    axpy(-value, &best, &mut av);
    let residual = norm2(&av);
    Ok(EigResult {
        vector: best,
        value,
        iterations,
        residual,
        ritz_history: history,
    })
}

struct LanczosRun {
    vector: Vec<f64>,
    ritz: Vec<f64>,
    steps: usize,
    done: bool,
}

fn check_output(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(CfmError::Numerical("operator produced a non-finite value".into()))
    }
}

fn lanczos_run<O: SymmetricOperator + ?Sized>(
    op: &O,
    start: &[f64],
    max_steps: usize,
    tol: f64,
) -> Result<LanczosRun> {
    let dim = op.dim();
    let mut basis: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut ritz = Vec::new();
    let mut w = vec![0.0; dim];
    let mut coeffs = vec![1.0];
    let mut done = false;

    for j in 0..max_steps {
        op.apply(&basis[j], &mut w);
        check_output(&w)?;
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm2(&w);

        let (theta, s) = tridiagonal_top_pair(&alpha, &beta);
        coeffs = s;
        ritz.push(theta);
        let t_norm = alpha
            .iter()
            .chain(beta.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let residual_estimate = b * coeffs[j].abs();
        if residual_estimate <= tol || b <= 1e-14 * t_norm || basis.len() == dim {
            done = true;
            break;
        }
        if j + 1 == max_steps {
            break;
        }
        beta.push(b);
        scale(1.0 / b, &mut w);
        basis.push(w.clone());
    }

    let mut vector = vec![0.0; dim];
    for (q, c) in basis.iter().zip(&coeffs) {
        axpy(*c, q, &mut vector);
    }
    let n = norm2(&vector);
    scale(1.0 / n, &mut vector);
    Ok(LanczosRun {
        vector,
        steps: alpha.len(),
        ritz,
        done,
    })
}

/// Largest eigenvalue and its unit eigenvector for the symmetric tridiagonal
/// matrix with diagonal `alpha` and off-diagonal `beta`.
///
/// Eigenvalue by Sturm-sequence bisection, eigenvector by inverse iteration
/// with a row-pivoted tridiagonal factorization.
pub(crate) fn tridiagonal_top_pair(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    debug_assert_eq!(beta.len() + 1, k);
    if k == 1 {
        return (alpha[0], vec![1.0]);
    }

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..k {
        let radius = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < k { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - radius);
        hi = hi.max(alpha[i] + radius);
    }
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let mut lo_b = lo;
    let mut hi_b = hi;
    // count(x) = number of eigenvalues strictly below x
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = alpha[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..k {
            let denom = if q == 0.0 { f64::EPSILON * span } else { q };
            q = alpha[i] - x - beta[i - 1] * beta[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo_b + hi_b);
        if mid <= lo_b || mid >= hi_b {
            break;
        }
        if count_below(mid) == k {
            hi_b = mid;
        } else {
            lo_b = mid;
        }
        if hi_b - lo_b <= 4.0 * f64::EPSILON * lo_b.abs().max(hi_b.abs()).max(span * 1e-3) {
            break;
        }
    }
    let theta = 0.5 * (lo_b + hi_b);

    let mut x = vec![1.0; k];
    let tiny = f64::EPSILON * span;
    for _ in 0..3 {
        x = solve_shifted_tridiagonal(alpha, beta, theta, &x, tiny);
        let n = norm2(&x);
        if !(n.is_finite() && n > 0.0) {
            x = vec![1.0; k];
            break;
        }
        scale(1.0 / n, &mut x);
    }
    (theta, x)
}

/// Solves `(T − shift I) x = rhs` by Gaussian elimination with partial
/// pivoting on the tridiagonal structure. Zero pivots are replaced by `tiny`.
fn solve_shifted_tridiagonal(alpha: &[f64], beta: &[f64], shift: f64, rhs: &[f64], tiny: f64) -> Vec<f64> {
    let n = alpha.len();
    let mut d: Vec<f64> = alpha.iter().map(|a| a - shift).collect();
    let mut dl = beta.to_vec();
    let mut du = beta.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut swapped = vec![false; n.saturating_sub(1)];

    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }

    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        if swapped[i] {
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl[i] * b[i];
        } else {
            b[i + 1] -= dl[i] * b[i];
        }
    }
    b[n - 1] /= d[n - 1];
    if n > 1 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
    b
}
