use crate::error::Result;
use crate::sparse::CsrMatrix;

use super::movielens::Vocabulary;
use super::{Dataset, FeatureBlock, COL_ENTITIES_BLOCK, ROW_ENTITIES_BLOCK, VIEWS_BLOCK};

/// One observed cell of a multi-view matrix collection.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewRecord {
    pub view: String,
    pub row: String,
    pub col: String,
    pub value: f64,
}

impl MultiViewRecord {
    pub fn new(view: impl Into<String>, row: impl Into<String>, col: impl Into<String>, value: f64) -> Self {
        Self {
            view: view.into(),
            row: row.into(),
            col: col.into(),
            value,
        }
    }
}

/// Encodes each record as `[one-hot row | one-hot col | one-hot view]`.
/// Vocabularies are built from the records in first-appearance order;
/// repeated cells stay as separate samples.
pub fn multiview_encode(records: &[MultiViewRecord]) -> Result<Dataset> {
    let mut rows = Vocabulary::default();
    let mut cols = Vocabulary::default();
    let mut views = Vocabulary::default();
    let idx: Vec<(usize, usize, usize)> = records
        .iter()
        .map(|r| (rows.index(&r.row), cols.index(&r.col), views.index(&r.view)))
        .collect();

    let (nr, nc) = (rows.labels.len(), cols.labels.len());
    let d = nr + nc + views.labels.len();
    let x = CsrMatrix::from_rows(
        d,
        idx.iter().map(|&(r, c, v)| [(r, 1.0), (nr + c, 1.0), (nr + nc + v, 1.0)]),
    )?;
    let blocks = vec![
        FeatureBlock::with_labels(ROW_ENTITIES_BLOCK, 0, rows.labels),
        FeatureBlock::with_labels(COL_ENTITIES_BLOCK, nr, cols.labels),
        FeatureBlock::with_labels(VIEWS_BLOCK, nr + nc, views.labels),
    ];
    Dataset::new(x, records.iter().map(|r| r.value).collect(), blocks)
}
