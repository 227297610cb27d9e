//! Evaluation metrics.

use crate::error::{check_len, CfmError, Result};

pub use crate::vector::rmse;

/// Multi-view relative MSE: for each view `v`,
/// `Σ_{i∈v} (yᵢ − ŷᵢ)² / Σ_{i∈v} (yᵢ − ȳ_v)²`, summed over views.
///
/// `views[i]` is the view index of sample `i`. A view whose targets have no
/// spread makes the ratio undefined and is reported as an error.
pub fn relative_mse(truth: &[f64], predicted: &[f64], views: &[usize]) -> Result<f64> {
    check_len("predictions", predicted.len(), truth.len())?;
    check_len("view assignments", views.len(), truth.len())?;
    if truth.is_empty() {
        return Err(CfmError::Input("relative MSE of an empty sample".into()));
    }
    let n_views = views.iter().max().unwrap() + 1;
    let mut count = vec![0usize; n_views];
    let mut sum = vec![0.0; n_views];
    for (&v, &y) in views.iter().zip(truth) {
        count[v] += 1;
        sum[v] += y;
    }
    let mut err = vec![0.0; n_views];
    let mut spread = vec![0.0; n_views];
    for ((&v, &y), &p) in views.iter().zip(truth).zip(predicted) {
        let mean = sum[v] / count[v] as f64;
        err[v] += (y - p) * (y - p);
        spread[v] += (y - mean) * (y - mean);
    }
    let mut total = 0.0;
    for v in 0..n_views {
        if count[v] == 0 {
            continue;
        }
        if spread[v] == 0.0 {
            return Err(CfmError::Input(format!("view {v} has zero target variance")));
        }
        total += err[v] / spread[v];
    }
    Ok(total)
}
