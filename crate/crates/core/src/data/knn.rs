use crate::error::{check_finite, contract, Result};
use crate::vector::norm2;

/// Mean and population standard deviation of an entity's `m` largest
/// Gaussian-kernel similarities to the other entities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborStats {
    pub mean: f64,
    pub std: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median over all unordered pairs of Euclidean distances (mean of the two
/// middle values for an even count).
pub fn median_pairwise_distance(features: &[Vec<f64>]) -> Result<f64> {
    if features.len() < 2 {
        return Err(contract("median distance needs at least two entities"));
    }
    let mut d = Vec::with_capacity(features.len() * (features.len() - 1) / 2);
    for i in 0..features.len() {
        for j in i + 1..features.len() {
            d.push(sq_dist(&features[i], &features[j]).sqrt());
        }
    }
    d.sort_by(f64::total_cmp);
    let k = d.len();
    Ok(if k % 2 == 1 { d[k / 2] } else { 0.5 * (d[k / 2 - 1] + d[k / 2]) })
}

/// `k(i, j) = exp(−‖fᵢ − fⱼ‖² / (2 h²))`. With `bandwidth = None` the
/// bandwidth is the median pairwise distance.
pub fn knn_side_features(features: &[Vec<f64>], m: usize, bandwidth: Option<f64>) -> Result<Vec<NeighborStats>> {
    let n = features.len();
    if m == 0 || m >= n {
        return Err(contract(format!("m = {m} needs 1 <= m < number of entities ({n})")));
    }
    let dim = features[0].len();
    for f in features {
        if f.len() != dim {
            return Err(contract("entity feature rows have different lengths"));
        }
        check_finite("entity features", f)?;
    }
    let h = match bandwidth {
        Some(h) => h,
        None => median_pairwise_distance(features)?,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(contract(format!("bandwidth {h} must be positive")));
    }

    let denom = 2.0 * h * h;
    let mut sims = Vec::with_capacity(n - 1);
    Ok(features
        .iter()
        .enumerate()
        .map(|(i, fi)| {
            sims.clear();
            sims.extend(
                features
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, fj)| (-sq_dist(fi, fj) / denom).exp()),
            );
            sims.sort_by(|a, b| b.total_cmp(a));
            let top = &sims[..m];
            let mean = top.iter().sum::<f64>() / m as f64;
            let centered: Vec<f64> = top.iter().map(|s| s - mean).collect();
            NeighborStats {
                mean,
                std: norm2(&centered) / (m as f64).sqrt(),
            }
        })
        .collect())
}
