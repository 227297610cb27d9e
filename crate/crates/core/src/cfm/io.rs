//! Binary model container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    4 bytes  "CFMM"
//! version  u32      1
//! d        u64
//! eta      f64
//! lambda1  f64
//! w        (d + 1) × f64, bias first
//! rank     u64
//! weights  rank × f64
//! basis    (d × rank) × f64, column-major
//! ```
//!
//! Floats are stored by bit pattern, so save/load is exact.

use std::fs;
use std::path::Path;

use crate::error::{CfmError, Result};
use crate::factors::LowRankFactors;

use super::model::CfmModel;

pub const MAGIC: &[u8; 4] = b"CFMM";
pub const FORMAT_VERSION: u32 = 1;

impl CfmModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let d = self.feature_dim();
        let rank = self.factors.rank();
        let mut out = Vec::with_capacity(4 + 4 + 8 * (5 + d + 1 + rank * (d + 1)));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&self.factors.scale().to_le_bytes());
        out.extend_from_slice(&self.lambda1.to_le_bytes());
        for w in &self.linear {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&(rank as u64).to_le_bytes());
        for w in self.factors.weights() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for v in self.factors.basis() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CfmError::Format("bad magic bytes".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CfmError::Format(format!("unsupported format version {version}")));
        }
        let d = r.count()?;
        let eta = r.f64()?;
        let lambda1 = r.f64()?;
        let linear = r.f64s(d.checked_add(1).ok_or_else(too_big)?)?;
        let rank = r.count()?;
        let weights = r.f64s(rank)?;
        let basis = r.f64s(d.checked_mul(rank).ok_or_else(too_big)?)?;
        if r.pos != bytes.len() {
            return Err(CfmError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let factors = LowRankFactors::from_parts(d, basis, weights, eta)?;
        CfmModel::new(linear, factors, lambda1)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn too_big() -> CfmError {
    CfmError::Format("declared size overflows".into())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or_else(too_big)?;
        if end > self.bytes.len() {
            return Err(CfmError::Format("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn count(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| too_big())
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(too_big)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
