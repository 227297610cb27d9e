use std::fs::File;
use std::path::Path;

use cfm_core::data::{movielens_to_dataset, multiview_encode, parse_libfm, MultiViewRecord, RatingsFormat};
use cfm_core::{split, CfmError, Dataset, SplitSpec};

use crate::commands::CliError;
use crate::{DataArgs, DataFormat, SplitSide};

pub fn load(path: &Path, format: DataFormat, dim: Option<usize>) -> Result<Dataset, CliError> {
    if !path.is_file() {
        return Err(CliError::data(format!("input file not found: {}", path.display())));
    }
    let ctx = |e: CfmError| CliError::from(e).context(path);
    match format {
        DataFormat::Libfm => parse_libfm(path, dim).map_err(ctx),
        DataFormat::MovielensTab => movielens_to_dataset(path, RatingsFormat::Tab100k).map_err(ctx),
        DataFormat::MovielensColon => movielens_to_dataset(path, RatingsFormat::Colon1mPlus).map_err(ctx),
        DataFormat::Multiview => read_multiview(path),
    }
}

fn read_multiview(path: &Path) -> Result<Dataset, CliError> {
    let mut reader = csv::Reader::from_reader(File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?);
    let mut records = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let bad = |msg: String| CliError::data(format!("{}: record {}: {msg}", path.display(), k + 1));
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() != 4 {
            return Err(bad(format!("expected 4 fields (view,row,col,value), found {}", row.len())));
        }
        let value: f64 = row[3].trim().parse().map_err(|_| bad(format!("value '{}' is not a number", &row[3])))?;
        records.push(MultiViewRecord::new(row[0].trim(), row[1].trim(), row[2].trim(), value));
    }
    multiview_encode(&records).map_err(|e| CliError::from(e).context(path))
}

/// The dataset named by `args`, split when `--split` is given.
pub fn load_split(args: &DataArgs) -> Result<(Dataset, Option<Dataset>), CliError> {
    let ds = load(&args.data, args.format, args.dim)?;
    match args.split {
        None => Ok((ds, None)),
        Some(f) => {
            let (tr, te) = split(&ds, SplitSpec { train_fraction: f, seed: args.split_seed })?;
            Ok((tr, Some(te)))
        }
    }
}

pub fn load_side(args: &DataArgs, side: SplitSide) -> Result<Dataset, CliError> {
    let (train, test) = load_split(args)?;
    Ok(match (side, test) {
        (SplitSide::Test, Some(test)) => test,
        _ => train,
    })
}
