use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, Result};
use crate::sparse::CsrMatrix;

use super::Dataset;

pub const SYNTH_BLOCK: &str = "dense";

/// Ground-truth parameters of a synthetic quadratic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub w0: f64,
    pub w: Vec<f64>,
    /// Row-major `d × d`, upper triangle (`l < l'`) populated, rest zero.
    pub interactions: Vec<f64>,
}

impl SynthTruth {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `w₀ + wᵀx + Σ_{l<l'} W_{ll'} x_l x_l'`
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut y = self.w0 + self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        for l in 0..d {
            let row = &self.interactions[l * d..(l + 1) * d];
            let inner: f64 = (l + 1..d).map(|m| row[m] * x[m]).sum();
            y += x[l] * inner;
        }
        y
    }
}

/// Noiseless data `x ~ N(0, I)`, `w₀ ~ N(0, 1)`, `w ~ N(0, I)`,
/// `W_{ll'} ~ U[0, 1)` for `l < l'`.
///
/// Draw order from one ChaCha8 stream: `w₀`, `w`, the upper triangle of `W`
/// row by row, then the samples row by row.
pub fn synth_generate(d: usize, n: usize, seed: u64) -> Result<(Dataset, SynthTruth)> {
    if d < 2 || n < 1 {
        return Err(contract(format!("synthetic data needs d >= 2 and n >= 1, got d = {d}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w0: f64 = rng.sample(StandardNormal);
    let w: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut interactions = vec![0.0; d * d];
    for l in 0..d {
        for m in l + 1..d {
            interactions[l * d + m] = rng.random::<f64>();
        }
    }
    let truth = SynthTruth { w0, w, interactions };

    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        y.push(truth.evaluate(&xi));
        rows.push(xi);
    }
    // every column is stored, even an exact zero draw
    let x = CsrMatrix::from_rows(d, rows.iter().map(|r| r.iter().copied().enumerate().collect::<Vec<_>>()))?;
    Ok((Dataset::single_block(x, y, SYNTH_BLOCK)?, truth))
}
