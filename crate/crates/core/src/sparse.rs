//! Compressed sparse row storage for the sample-major design matrix.
//!
//! Row `i` holds the features of sample `i`, so `spmv` computes one score per
//! sample and `spmv_transpose` scatters per-sample weights back onto features.
//! Neither product builds a transposed copy.

use crate::error::{check_len, contract, CfmError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating every structural
    /// invariant. Column indices must be strictly increasing inside a row;
    /// duplicates are rejected rather than summed.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(contract(format!(
                "row_offsets has length {} but n_rows + 1 = {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(contract("row_offsets[0] must be 0"));
        }
        if col_indices.len() != values.len() {
            return Err(contract("col_indices and values differ in length"));
        }
        if row_offsets[n_rows] != col_indices.len() {
            return Err(contract("row_offsets[n_rows] must equal the number of stored entries"));
        }
        for (i, w) in row_offsets.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(contract(format!("row_offsets decreases at row {i}")));
            }
            let cols = &col_indices[w[0]..w[1]];
            for (k, &c) in cols.iter().enumerate() {
                if c >= n_cols {
                    return Err(contract(format!(
                        "row {i}: column index {c} out of range (n_cols = {n_cols})"
                    )));
                }
                if k > 0 && cols[k - 1] >= c {
                    return Err(contract(format!(
                        "row {i}: column indices not strictly increasing ({} then {c})",
                        cols[k - 1]
                    )));
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(CfmError::Input(format!("non-finite stored value {v}")));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from per-row `(column, value)` lists. Entries within a
    /// row may come in any order; repeated columns are an error.
    pub fn from_rows<R>(n_cols: usize, rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: AsRef<[(usize, f64)]>,
    {
        let mut row_offsets = vec![0];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for row in rows {
            scratch.clear();
            scratch.extend_from_slice(row.as_ref());
            scratch.sort_by_key(|&(c, _)| c);
            for (c, v) in &scratch {
                col_indices.push(*c);
                values.push(*v);
            }
            row_offsets.push(col_indices.len());
        }
        let n_rows = row_offsets.len() - 1;
        Self::new(n_rows, n_cols, row_offsets, col_indices, values)
    }

    /// Stores every non-zero entry of a dense row-major matrix.
    pub fn from_dense(rows: &[Vec<f64>], n_cols: usize) -> Result<Self> {
        let sparse_rows = rows.iter().map(|r| {
            r.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(c, v)| (c, *v))
                .collect::<Vec<_>>()
        });
        Self::from_rows(n_cols, sparse_rows.collect::<Vec<_>>())
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values stored for row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// `A v`.
    pub fn spmv(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv input", v.len(), self.n_cols)?;
        let mut out = vec![0.0; self.n_rows];
        self.spmv_into(v, &mut out);
        Ok(out)
    }

    /// `out = A v` without shape checks; callers guarantee the lengths.
    pub fn spmv_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        for (i, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *o = cols.iter().zip(vals).map(|(&c, &x)| x * v[c]).sum();
        }
    }

    /// `Aᵀ v`.
    pub fn spmv_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("spmv_transpose input", v.len(), self.n_rows)?;
        let mut out = vec![0.0; self.n_cols];
        self.spmv_transpose_into(v, &mut out);
        Ok(out)
    }

    /// `out = Aᵀ v` without shape checks.
    pub fn spmv_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&c, &x) in cols.iter().zip(vals) {
                out[c] += x * vi;
            }
        }
    }

    /// Same sparsity pattern with every stored value squared.
    pub fn row_squared(&self) -> CsrMatrix {
        Self {
            values: self.values.iter().map(|v| v * v).collect(),
            ..self.clone()
        }
    }

    /// `Σ_i A_ij²` for every column `j`.
    pub fn column_square_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for (&c, &v) in self.col_indices.iter().zip(&self.values) {
            out[c] += v * v;
        }
        out
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            let (cols, vals) = self.row(i);
            col_indices.extend_from_slice(cols);
            values.extend_from_slice(vals);
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Same entries viewed with more (trailing, empty) columns.
    pub fn widen(&self, n_cols: usize) -> Result<CsrMatrix> {
        if n_cols < self.n_cols {
            return Err(contract(format!(
                "cannot narrow a {}-column matrix to {n_cols} columns",
                self.n_cols
            )));
        }
        Ok(Self {
            n_cols,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CsrMatrix {
        let dense: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        CsrMatrix::from_dense(&dense, rows[0].len()).unwrap()
    }

    #[test]
    fn spmv_examples() {
        assert_eq!(m(&[&[1.0, 0.0], &[0.0, 2.0]]).spmv(&[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        assert_eq!(CsrMatrix::zeros(2, 2).spmv(&[5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(a.spmv(&[1.0, -1.0]).unwrap(), vec![-1.0, -1.0, -1.0]);
    }

    #[test]
    fn spmv_transpose_examples() {
        assert_eq!(
            m(&[&[1.0, 0.0], &[0.0, 2.0]]).spmv_transpose(&[3.0, 4.0]).unwrap(),
            vec![3.0, 8.0]
        );
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(a.spmv_transpose(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(a.spmv_transpose(&[1.0, 1.0, 1.0]).unwrap(), vec![9.0, 12.0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert!(matches!(a.spmv(&[1.0]), Err(CfmError::Contract(_))));
        assert!(matches!(a.spmv_transpose(&[1.0, 2.0]), Err(CfmError::Contract(_))));
    }

    #[test]
    fn row_squared_examples() {
        let sq = m(&[&[2.0, 0.0], &[0.0, -3.0]]).row_squared();
        assert_eq!(sq.to_dense(), vec![vec![4.0, 0.0], vec![0.0, 9.0]]);
        let sq = m(&[&[0.5, -2.0, 1.0]]).row_squared();
        assert_eq!(sq.to_dense(), vec![vec![0.25, 4.0, 1.0]]);
        let zeros = CsrMatrix::new(1, 2, vec![0, 2], vec![0, 1], vec![0.0, 0.0]).unwrap();
        assert_eq!(zeros.row_squared().values(), &[0.0, 0.0]);
    }

    #[test]
    fn stored_zeros_do_not_change_products() {
        let with_zero = CsrMatrix::new(2, 3, vec![0, 2, 3], vec![0, 2, 1], vec![1.0, 0.0, 2.0]).unwrap();
        let without = CsrMatrix::new(2, 3, vec![0, 1, 2], vec![0, 1], vec![1.0, 2.0]).unwrap();
        let v = [1.5, -2.0, 7.0];
        assert_eq!(with_zero.spmv(&v).unwrap(), without.spmv(&v).unwrap());
        let u = [0.5, 3.0];
        assert_eq!(with_zero.spmv_transpose(&u).unwrap(), without.spmv_transpose(&u).unwrap());
    }

    #[test]
    fn construction_rejects_bad_structure() {
        // duplicate column
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 1.0]).is_err());
        // unsorted
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        // out of range
        assert!(CsrMatrix::new(1, 2, vec![0, 1], vec![2], vec![1.0]).is_err());
        // nnz mismatch
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![0], vec![1.0]).is_err());
        // decreasing offsets
        assert!(CsrMatrix::new(2, 2, vec![0, 1, 0], vec![0], vec![1.0]).is_err());
        // NaN
        assert!(CsrMatrix::new(1, 1, vec![0, 1], vec![0], vec![f64::NAN]).is_err());
        // from_rows sorts but rejects duplicates
        assert!(CsrMatrix::from_rows(3, vec![vec![(2, 1.0), (0, 1.0)]]).is_ok());
        assert!(CsrMatrix::from_rows(3, vec![vec![(2, 1.0), (2, 1.0)]]).is_err());
    }

    #[test]
    fn select_and_widen() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let s = a.select_rows(&[2, 0]);
        assert_eq!(s.to_dense(), vec![vec![5.0, 6.0], vec![1.0, 2.0]]);
        let w = a.widen(4).unwrap();
        assert_eq!(w.spmv(&[1.0, 1.0, 9.0, 9.0]).unwrap(), vec![3.0, 7.0, 11.0]);
        assert!(a.widen(1).is_err());
        assert_eq!(a.column_square_sums(), vec![35.0, 56.0]);
    }
}
