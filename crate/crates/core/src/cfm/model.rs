use crate::error::{contract, Result};
use crate::factors::LowRankFactors;
use crate::linsolve::BiasedDesign;
use crate::sparse::CsrMatrix;

/// A fitted convex factorization machine.
///
/// Predicts `w₀ + w₁ᵀx + ½ tr(η W (x xᵀ − diag(x ∘ x)))`, with `w = linear`
/// (bias first) and `η W` held as [`LowRankFactors`].
#[derive(Debug, Clone, PartialEq)]
pub struct CfmModel {
    pub linear: Vec<f64>,
    pub factors: LowRankFactors,
    pub lambda1: f64,
}

impl CfmModel {
    pub fn new(linear: Vec<f64>, factors: LowRankFactors, lambda1: f64) -> Result<Self> {
        let model = Self {
            linear,
            factors,
            lambda1,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn feature_dim(&self) -> usize {
        self.factors.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.linear.len() != self.feature_dim() + 1 {
            return Err(contract(format!(
                "linear weights have length {} but the model has {} features",
                self.linear.len(),
                self.feature_dim()
            )));
        }
        if !(self.lambda1 >= 0.0) {
            return Err(contract("lambda1 must be non-negative"));
        }
        self.factors.validate()
    }

    /// Predictions for every row of `x`. `xsq` must be `x.row_squared()`.
    pub fn predict(&self, x: &CsrMatrix, xsq: &CsrMatrix) -> Result<Vec<f64>> {
        predict(self, x, xsq)
    }
}

fn check_design(x: &CsrMatrix, xsq: &CsrMatrix, dim: usize) -> Result<()> {
    if x.n_cols() != dim {
        return Err(contract(format!(
            "design has {} columns but the model expects {dim}",
            x.n_cols()
        )));
    }
    if xsq.n_rows() != x.n_rows() || xsq.n_cols() != x.n_cols() || xsq.nnz() != x.nnz() {
        return Err(contract("squared design does not match the design's shape"));
    }
    Ok(())
}

/// Quadratic part of the model for every sample:
/// `½ (‖Gᵀxᵢ‖² − (xᵢ ∘ xᵢ)ᵀ (G ∘ G) 1)` with `G = P diag(η λ)^{1/2}`.
///
/// Costs `O(nnz(X) · rank)`; rank-0 factors give zeros.
pub fn quad_scores(x: &CsrMatrix, xsq: &CsrMatrix, factors: &LowRankFactors) -> Result<Vec<f64>> {
    let d = factors.dim();
    check_design(x, xsq, d)?;
    let rank = factors.rank();
    let n = x.n_rows();
    if rank == 0 {
        return Ok(vec![0.0; n]);
    }

    // row-major G so a sample's features touch contiguous memory
    let mut g = vec![0.0; d * rank];
    for (r, &w) in factors.weights().iter().enumerate() {
        let s = (factors.scale() * w).sqrt();
        for (l, &p) in factors.atom(r).iter().enumerate() {
            g[l * rank + r] = s * p;
        }
    }
    let g_row_sq: Vec<f64> = g.chunks_exact(rank).map(|row| row.iter().map(|v| v * v).sum()).collect();
    let diag_term = xsq.spmv(&g_row_sq)?;

    let mut proj = vec![0.0; rank];
    let out = (0..n)
        .map(|i| {
            proj.fill(0.0);
            let (cols, vals) = x.row(i);
            for (&l, &v) in cols.iter().zip(vals) {
                for (acc, gl) in proj.iter_mut().zip(&g[l * rank..(l + 1) * rank]) {
                    *acc += v * gl;
                }
            }
            let sq: f64 = proj.iter().map(|v| v * v).sum();
            0.5 * (sq - diag_term[i])
        })
        .collect();
    Ok(out)
}

/// Quadratic scores of the single rank-one matrix `scale · p pᵀ`.
pub fn atom_scores(x: &CsrMatrix, xsq: &CsrMatrix, atom: &[f64], scale: f64) -> Result<Vec<f64>> {
    check_design(x, xsq, atom.len())?;
    let proj = x.spmv(atom)?;
    let atom_sq: Vec<f64> = atom.iter().map(|v| v * v).collect();
    let diag = xsq.spmv(&atom_sq)?;
    Ok(proj
        .iter()
        .zip(&diag)
        .map(|(p, dg)| 0.5 * scale * (p * p - dg))
        .collect())
}

pub fn predict(model: &CfmModel, x: &CsrMatrix, xsq: &CsrMatrix) -> Result<Vec<f64>> {
    let mut out = quad_scores(x, xsq, &model.factors)?;
    let linear = BiasedDesign::new(x).scores(&model.linear);
    for (o, l) in out.iter_mut().zip(linear) {
        *o += l;
    }
    Ok(out)
}
