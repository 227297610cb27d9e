//! MovieLens ratings files as one-hot user/item regression data.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CfmError, Result};
use crate::sparse::CsrMatrix;

use super::{Dataset, FeatureBlock, ITEMS_BLOCK, USERS_BLOCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsFormat {
    /// `user\titem\trating\ttimestamp` (100K `u.data`).
    Tab100k,
    /// `user::item::rating::timestamp` (1M, 10M, 20M `ratings.dat`).
    Colon1mPlus,
}

impl RatingsFormat {
    fn separator(self) -> &'static str {
        match self {
            RatingsFormat::Tab100k => "\t",
            RatingsFormat::Colon1mPlus => "::",
        }
    }
}

impl FromStr for RatingsFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tab" | "tab_100k" | "100k" => Ok(RatingsFormat::Tab100k),
            "colon" | "colon_1m_plus" | "1m" => Ok(RatingsFormat::Colon1mPlus),
            other => Err(format!("unknown ratings format '{other}'")),
        }
    }
}

pub fn movielens_to_dataset(path: impl AsRef<Path>, format: RatingsFormat) -> Result<Dataset> {
    read_movielens(BufReader::new(File::open(path)?), format)
}

/// Ids are mapped to block positions in order of first appearance; the
/// original ids are kept as the block labels. Blank lines are skipped.
pub fn read_movielens(reader: impl BufRead, format: RatingsFormat) -> Result<Dataset> {
    let sep = format.separator();
    let mut users = Vocabulary::default();
    let mut items = Vocabulary::default();
    let mut pairs = Vec::new();
    let mut y = Vec::new();

    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let err = |message: String| CfmError::Parse { line: lineno, message };
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(sep).collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields separated by {sep:?}, found {}", fields.len())));
        }
        let (user, item) = (fields[0].trim(), fields[1].trim());
        if user.is_empty() || item.is_empty() {
            return Err(err("empty user or item id".into()));
        }
        let rating: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| err(format!("rating '{}' is not a number", fields[2])))?;
        if !rating.is_finite() {
            return Err(err(format!("rating '{}' is not finite", fields[2])));
        }
        pairs.push((users.index(user), items.index(item)));
        y.push(rating);
    }

    let n_users = users.labels.len();
    let d = n_users + items.labels.len();
    let rows = pairs.iter().map(|&(u, i)| [(u, 1.0), (n_users + i, 1.0)]);
    let x = CsrMatrix::from_rows(d, rows)?;
    let blocks = vec![
        FeatureBlock::with_labels(USERS_BLOCK, 0, users.labels),
        FeatureBlock::with_labels(ITEMS_BLOCK, n_users, items.labels),
    ];
    Dataset::new(x, y, blocks)
}

#[derive(Default)]
pub(super) struct Vocabulary {
    map: HashMap<String, usize>,
    pub(super) labels: Vec<String>,
}

impl Vocabulary {
    pub(super) fn index(&mut self, key: &str) -> usize {
        if let Some(&k) = self.map.get(key) {
            return k;
        }
        let k = self.labels.len();
        self.map.insert(key.to_owned(), k);
        self.labels.push(key.to_owned());
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, format: RatingsFormat) -> Result<Dataset> {
        read_movielens(text.as_bytes(), format)
    }

    #[test]
    fn single_record() {
        let ds = read("1\t10\t4.0\t0\n", RatingsFormat::Tab100k).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.y, vec![4.0]);
        assert_eq!(ds.x.to_dense(), vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn shared_user_and_first_appearance_order() {
        let ds = read("7::30::5::1\n7::20::3::2\n", RatingsFormat::Colon1mPlus).unwrap();
        let users = ds.block(USERS_BLOCK).unwrap();
        let items = ds.block(ITEMS_BLOCK).unwrap();
        assert_eq!((users.width, items.width), (1, 2));
        assert_eq!(items.labels.as_deref().unwrap(), ["30", "20"]);
        assert_eq!(ds.x.to_dense(), vec![vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]);
        assert_eq!(ds.block_assignments(ITEMS_BLOCK).unwrap(), vec![0, 1]);
    }

    #[test]
    fn every_row_has_two_ones() {
        let ds = read("1\t1\t3\t0\n2\t1\t4\t0\n1\t2\t5\t0\n3\t3\t1\t0\n", RatingsFormat::Tab100k).unwrap();
        for i in 0..ds.n_samples() {
            assert_eq!(ds.x.row(i).1, &[1.0, 1.0]);
        }
        assert_eq!(ds.dim(), 6);
    }

    #[test]
    fn malformed_records() {
        for text in ["1\t2\t3\n", "1\t2\tfive\t0\n", "1::2::3::4\n", "\t2\t3\t4\n"] {
            assert!(matches!(read(text, RatingsFormat::Tab100k), Err(CfmError::Parse { line: 1, .. })), "{text:?}");
        }
        assert!(matches!(read("1::2::3::4\n1::2\n", RatingsFormat::Colon1mPlus), Err(CfmError::Parse { line: 2, .. })));
    }

    #[test]
    fn format_names() {
        assert_eq!("tab".parse::<RatingsFormat>().unwrap(), RatingsFormat::Tab100k);
        assert_eq!("colon_1m_plus".parse::<RatingsFormat>().unwrap(), RatingsFormat::Colon1mPlus);
        assert!("csv".parse::<RatingsFormat>().is_err());
    }
}
