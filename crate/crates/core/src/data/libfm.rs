//! libFM text format: `<target> <idx>:<val> ...`, 0-based indices.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{contract, CfmError, Result};
use crate::sparse::CsrMatrix;

use super::Dataset;

pub const LIBFM_BLOCK: &str = "libfm";

/// Reads a libFM file. `d` overrides the inferred dimension
/// (`1 + max index`); it must cover every index in the file.
pub fn parse_libfm(path: impl AsRef<Path>, d: Option<usize>) -> Result<Dataset> {
    read_libfm(BufReader::new(File::open(path)?), d)
}

pub fn read_libfm(reader: impl BufRead, d: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut y = Vec::new();
    let mut max_col: Option<usize> = None;

    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let err = |message: String| CfmError::Parse { line: lineno, message };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let target = tokens.next().unwrap();
        let target: f64 = target
            .parse()
            .map_err(|_| err(format!("target '{target}' is not a number")))?;
        if !target.is_finite() {
            return Err(err(format!("target '{target}' is not finite")));
        }

        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("token '{tok}' is not <index>:<value>")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("index '{idx}' is not a non-negative integer")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("value '{val}' is not a number")))?;
            if !val.is_finite() {
                return Err(err(format!("value for index {idx} is not finite")));
            }
            row.push((idx, val));
            max_col = Some(max_col.map_or(idx, |m| m.max(idx)));
        }
        row.sort_by_key(|&(c, _)| c);
        if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(err(format!("index {} appears twice", w[0].0)));
        }
        rows.push(row);
        y.push(target);
    }

    let inferred = max_col.map_or(0, |m| m + 1);
    let dim = match d {
        Some(d) if d < inferred => {
            return Err(contract(format!("dimension override {d} is smaller than the largest index + 1 ({inferred})")))
        }
        Some(d) => d,
        None => inferred,
    };
    let x = CsrMatrix::from_rows(dim, &rows)?;
    Dataset::single_block(x, y, LIBFM_BLOCK)
}

/// Writes every stored entry, with floats in shortest round-trip form so that
/// a subsequent parse reproduces the values bit for bit.
pub fn write_libfm(ds: &Dataset, mut out: impl Write) -> Result<()> {
    for i in 0..ds.n_samples() {
        write!(out, "{}", ds.y[i])?;
        let (cols, vals) = ds.x.row(i);
        for (c, v) in cols.iter().zip(vals) {
            write!(out, " {c}:{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, d: Option<usize>) -> Result<Dataset> {
        read_libfm(text.as_bytes(), d)
    }

    #[test]
    fn single_line_with_override() {
        let ds = parse("3.5 0:1 4:1\n", Some(6)).unwrap();
        assert_eq!(ds.y, vec![3.5]);
        assert_eq!(ds.dim(), 6);
        assert_eq!(ds.x.row(0), (&[0usize, 4][..], &[1.0, 1.0][..]));
        assert_eq!(ds.blocks[0].name, LIBFM_BLOCK);
    }

    #[test]
    fn inferred_dimension_and_comments() {
        let ds = parse("# header\n\n1 2:0.5\n-2 0:1.25 7:3\n", None).unwrap();
        assert_eq!((ds.n_samples(), ds.dim()), (2, 8));
        assert_eq!(ds.y, vec![1.0, -2.0]);
    }

    #[test]
    fn empty_input_is_an_empty_dataset() {
        let ds = parse("", None).unwrap();
        assert_eq!((ds.n_samples(), ds.dim()), (0, 0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("1 0:1\nx 1:1\n", 2),
            ("1 0:1 0:2\n", 1),
            ("1 0:1\n\n2 3\n", 3),
            ("1 -1:2\n", 1),
            ("1 0:abc\n", 1),
            ("nan 0:1\n", 1),
        ] {
            match parse(text, None) {
                Err(CfmError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(matches!(parse("1 5:1\n", Some(3)), Err(CfmError::Contract(_))));
    }

    #[test]
    fn writer_round_trips_values_exactly() {
        let text = "0.1 0:0.30000000000000004 3:1e-300\n-7 1:2.5\n1e10 0:-0.0 2:123456.789\n";
        let ds = parse(text, None).unwrap();
        let mut buf = Vec::new();
        write_libfm(&ds, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap(), Some(ds.dim())).unwrap();
        assert_eq!(back.x.col_indices(), ds.x.col_indices());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.x.values()), bits(ds.x.values()));
        assert_eq!(bits(&back.y), bits(&ds.y));
    }
}
