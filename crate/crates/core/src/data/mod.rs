//! Datasets, feature encoders and splitting.
//!
//! All randomness (synthetic data, splits) comes from `ChaCha8Rng` seeded
//! with `seed_from_u64`, with Gaussian draws from `rand_distr::StandardNormal`
//! (ziggurat) and uniforms from `rand::Rng::random`.

mod knn;
mod libfm;
mod movielens;
mod multiview;
mod synth;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_finite, contract, Result};
use crate::sparse::CsrMatrix;

pub use knn::{knn_side_features, median_pairwise_distance, NeighborStats};
pub use libfm::{parse_libfm, read_libfm, write_libfm};
pub use movielens::{movielens_to_dataset, read_movielens, RatingsFormat};
pub use multiview::{multiview_encode, MultiViewRecord};
pub use synth::{synth_generate, SynthTruth};

pub const USERS_BLOCK: &str = "users";
pub const ITEMS_BLOCK: &str = "items";
pub const ROW_ENTITIES_BLOCK: &str = "row_entities";
pub const COL_ENTITIES_BLOCK: &str = "col_entities";
pub const VIEWS_BLOCK: &str = "views";

/// A named, contiguous range of feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBlock {
    pub name: String,
    pub offset: usize,
    pub width: usize,
    /// Original identifiers for one-hot blocks, indexed by position in the
    /// block (first-appearance order).
    pub labels: Option<Vec<String>>,
}

impl FeatureBlock {
    pub fn new(name: impl Into<String>, offset: usize, width: usize) -> Self {
        Self {
            name: name.into(),
            offset,
            width,
            labels: None,
        }
    }

    pub fn with_labels(name: impl Into<String>, offset: usize, labels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            offset,
            width: labels.len(),
            labels: Some(labels),
        }
    }

    pub fn contains(&self, col: usize) -> bool {
        col >= self.offset && col < self.offset + self.width
    }
}

/// Paired design and targets. `x` is sample-major (`n × d`); `xsq` caches its
/// elementwise square.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: CsrMatrix,
    pub xsq: CsrMatrix,
    pub y: Vec<f64>,
    pub blocks: Vec<FeatureBlock>,
}

impl Dataset {
    pub fn new(x: CsrMatrix, y: Vec<f64>, blocks: Vec<FeatureBlock>) -> Result<Self> {
        let xsq = x.row_squared();
        let ds = Self { x, xsq, y, blocks };
        ds.validate()?;
        Ok(ds)
    }

    /// A dataset whose features form a single block named `name`.
    pub fn single_block(x: CsrMatrix, y: Vec<f64>, name: &str) -> Result<Self> {
        let d = x.n_cols();
        Self::new(x, y, vec![FeatureBlock::new(name, 0, d)])
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.n_cols()
    }

    /// Checks shapes, finiteness and that the blocks tile `[0, d)` in order.
    pub fn validate(&self) -> Result<()> {
        if self.x.n_rows() != self.y.len() {
            return Err(contract(format!(
                "design has {} rows but there are {} targets",
                self.x.n_rows(),
                self.y.len()
            )));
        }
        if self.xsq != self.x.row_squared() {
            return Err(contract("cached squared design is stale"));
        }
        check_finite("targets", &self.y)?;
        let mut next = 0;
        for b in &self.blocks {
            if b.offset != next {
                return Err(contract(format!(
                    "block '{}' starts at {} but the previous block ends at {next}",
                    b.name, b.offset
                )));
            }
            if let Some(labels) = &b.labels {
                if labels.len() != b.width {
                    return Err(contract(format!("block '{}' has {} labels for width {}", b.name, labels.len(), b.width)));
                }
            }
            next += b.width;
        }
        if next != self.dim() {
            return Err(contract(format!("blocks cover {next} columns but d = {}", self.dim())));
        }
        Ok(())
    }

    pub fn block(&self, name: &str) -> Option<&FeatureBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Subset of rows, in the given order, sharing the block layout.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            xsq: self.xsq.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            blocks: self.blocks.clone(),
        }
    }

    /// Same samples with trailing empty columns up to `d`. The extra columns
    /// extend the last block (or form a new "padding" block when there is
    /// none).
    pub fn widen(&self, d: usize) -> Result<Dataset> {
        let extra = d.checked_sub(self.dim()).ok_or_else(|| contract("cannot shrink a dataset"))?;
        let mut blocks = self.blocks.clone();
        if extra > 0 {
            match blocks.last_mut() {
                Some(b) if b.labels.is_none() => b.width += extra,
                _ => blocks.push(FeatureBlock::new("padding", self.dim(), extra)),
            }
        }
        Dataset::new(self.x.widen(d)?, self.y.clone(), blocks)
    }

    /// For each sample, the index of its active column inside `block`.
    /// Every row must have exactly one stored non-zero in the block.
    pub fn block_assignments(&self, block: &str) -> Result<Vec<usize>> {
        let b = self
            .block(block)
            .ok_or_else(|| contract(format!("dataset has no '{block}' block")))?;
        (0..self.n_samples())
            .map(|i| {
                let (cols, vals) = self.x.row(i);
                let mut hits = cols
                    .iter()
                    .zip(vals)
                    .filter(|(c, v)| b.contains(**c) && **v != 0.0)
                    .map(|(c, _)| c - b.offset);
                match (hits.next(), hits.next()) {
                    (Some(k), None) => Ok(k),
                    _ => Err(contract(format!("sample {i} does not have exactly one active '{block}' column"))),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Random train/test split: a seeded permutation, the first
/// `⌊train_fraction · n⌋` samples going to train.
pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(contract(format!("train fraction {} outside (0, 1)", spec.train_fraction)));
    }
    let n = ds.n_samples();
    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(contract(format!(
            "split of {n} samples at fraction {} leaves one side empty",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    Ok((ds.select(&order[..n_train]), ds.select(&order[n_train..])))
}
