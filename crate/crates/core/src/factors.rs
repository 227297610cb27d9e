//! Low-rank storage of the interaction matrix.
//!
//! The iterate is `W = Σ_r λ_r p_r p_rᵀ` with unit atoms `p_r` and convex
//! weights `λ`, so `W` sits on the unit-trace spectahedron. The effective
//! interaction matrix used for prediction is `scale · W`. `W` itself is never
//! materialized outside of diagnostics.

use crate::error::{check_len, contract, CfmError, Result};
use crate::vector::norm2;

pub const WEIGHT_SUM_TOL: f64 = 1e-9;
pub const ATOM_NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    dim: usize,
    /// Column-major `dim × rank` atom store.
    basis: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
}

impl LowRankFactors {
    /// Rank-0 factors (the zero interaction matrix).
    pub fn empty(dim: usize, scale: f64) -> Self {
        Self {
            dim,
            basis: Vec::new(),
            weights: Vec::new(),
            scale,
        }
    }

    /// Builds factors from raw parts and validates them.
    pub fn from_parts(dim: usize, basis: Vec<f64>, weights: Vec<f64>, scale: f64) -> Result<Self> {
        check_len("factor basis", basis.len(), dim * weights.len())?;
        let f = Self {
            dim,
            basis,
            weights,
            scale,
        };
        f.validate()?;
        Ok(f)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Column-major basis, `dim * rank` values.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn atom(&self, r: usize) -> &[f64] {
        &self.basis[r * self.dim..(r + 1) * self.dim]
    }

    /// Frank-Wolfe update `W ← (1 − α) W + α p pᵀ`.
    ///
    /// Atoms whose weight becomes exactly zero are dropped, and a zero step
    /// leaves the factors untouched.
    pub fn blend_atom(&mut self, atom: &[f64], alpha: f64) -> Result<()> {
        check_len("atom", atom.len(), self.dim)?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(contract(format!("step size {alpha} outside [0, 1]")));
        }
        let norm = norm2(atom);
        if (norm - 1.0).abs() > ATOM_NORM_TOL {
            return Err(contract(format!("atom norm {norm} is not 1")));
        }
        if alpha == 0.0 {
            return Ok(());
        }
        for w in &mut self.weights {
            *w *= 1.0 - alpha;
        }
        self.basis.extend_from_slice(atom);
        self.weights.push(alpha);
        self.prune_zero_weights();
        Ok(())
    }

    fn prune_zero_weights(&mut self) {
        if self.weights.iter().all(|&w| w > 0.0) {
            return;
        }
        let dim = self.dim;
        let mut basis = Vec::with_capacity(self.basis.len());
        let mut weights = Vec::with_capacity(self.weights.len());
        for (r, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                basis.extend_from_slice(&self.basis[r * dim..(r + 1) * dim]);
                weights.push(w);
            }
        }
        self.basis = basis;
        self.weights = weights;
    }

    /// `tr(W) = Σλ` of the unit-trace iterate (0 for rank 0).
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Trace norm of the effective interaction matrix `scale · W`, which is
    /// PSD by construction, so it equals `scale · Σλ`.
    pub fn effective_trace_norm(&self) -> f64 {
        self.scale * self.weight_sum()
    }

    /// Checks the spectahedron invariants: non-negative weights summing to 1
    /// and unit-norm atoms. Rank 0 is accepted as the zero matrix.
    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(contract(format!("scale must be positive, got {}", self.scale)));
        }
        if self.basis.len() != self.dim * self.weights.len() {
            return Err(contract("basis size does not match dim × rank"));
        }
        if self.weights.is_empty() {
            return Ok(());
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(CfmError::Numerical(format!("invalid factor weight {w}")));
        }
        let sum = self.weight_sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(CfmError::Numerical(format!("factor weights sum to {sum}, not 1")));
        }
        for r in 0..self.rank() {
            let n = norm2(self.atom(r));
            if (n - 1.0).abs() > ATOM_NORM_TOL {
                return Err(CfmError::Numerical(format!("atom {r} has norm {n}")));
            }
        }
        Ok(())
    }

    /// Dense row-major `scale · P diag(λ) Pᵀ`. Intended for small diagnostics
    /// and tests only.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for r in 0..self.rank() {
            let p = self.atom(r);
            let w = self.scale * self.weights[r];
            for i in 0..d {
                let wi = w * p[i];
                if wi == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[i * d + j] += wi * p[j];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blend_keeps_convex_weights() {
        let mut f = LowRankFactors::empty(2, 3.0);
        f.blend_atom(&[1.0, 0.0], 1.0).unwrap();
        f.blend_atom(&[0.0, 1.0], 0.25).unwrap();
        f.blend_atom(&[0.6, 0.8], 0.5).unwrap();
        assert_eq!(f.rank(), 3);
        assert_eq!(f.weights(), &[0.375, 0.125, 0.5]);
        f.validate().unwrap();
        assert!((f.effective_trace_norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_step_replaces_everything() {
        let mut f = LowRankFactors::empty(2, 1.0);
        f.blend_atom(&[1.0, 0.0], 1.0).unwrap();
        f.blend_atom(&[0.0, 1.0], 1.0).unwrap();
        assert_eq!(f.rank(), 1);
        assert_eq!(f.atom(0), &[0.0, 1.0]);
    }

    #[test]
    fn zero_step_is_a_no_op() {
        let mut f = LowRankFactors::empty(2, 1.0);
        f.blend_atom(&[1.0, 0.0], 1.0).unwrap();
        let before = f.clone();
        f.blend_atom(&[0.0, 1.0], 0.0).unwrap();
        assert_eq!(f, before);
    }

    #[test]
    fn rejects_bad_atoms_and_steps() {
        let mut f = LowRankFactors::empty(2, 1.0);
        assert!(f.blend_atom(&[1.0, 1.0], 0.5).is_err());
        assert!(f.blend_atom(&[1.0, 0.0], 1.5).is_err());
        assert!(f.blend_atom(&[1.0], 0.5).is_err());
    }

    #[test]
    fn validate_catches_broken_parts() {
        assert!(LowRankFactors::from_parts(2, vec![1.0, 0.0], vec![0.5], 1.0).is_err());
        assert!(LowRankFactors::from_parts(2, vec![2.0, 0.0], vec![1.0], 1.0).is_err());
        assert!(LowRankFactors::from_parts(2, vec![1.0, 0.0], vec![1.0], -1.0).is_err());
        assert!(LowRankFactors::from_parts(2, vec![1.0, 0.0], vec![1.0], 1.0).is_ok());
    }

    #[test]
    fn dense_matches_outer_product() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = LowRankFactors::from_parts(2, vec![s, s], vec![1.0], 2.0).unwrap();
        let w = f.to_dense();
        for v in w {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }
}
