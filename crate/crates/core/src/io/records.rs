//! One file of MDF images per split.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size  field
//! 0       8     magic b"MDFREC\0\0"
//! 8       4     u32 format version (1)
//! 12      4     u32 motif length n
//! 16      8     u64 series length T
//! 24      8     u64 record count
//! 32      8     u64 channels (n - 1)
//! 40      8     u64 rows (d_max)
//! 48      8     u64 cols (T - n + 1)
//! 56      ...   records
//! ```
//!
//! Each record is an `i64` label (0-based class index, -1 when unlabeled)
//! followed by `channels * rows * cols` f64 pixels, channel-major then
//! row-major, `(d, s)` with `s` varying fastest.

use std::path::Path;

use crate::error::{Error, Result};
use crate::mdf::{MdfGeometry, MdfImage};

pub const RECORD_MAGIC: &[u8; 8] = b"MDFREC\0\0";
pub const RECORD_VERSION: u32 = 1;
const HEADER_LEN: usize = 56;

#[derive(Debug, Clone, PartialEq)]
pub struct MdfRecord {
    pub label: Option<usize>,
    pub image: MdfImage,
}

pub fn encode_records(geometry: &MdfGeometry, records: &[MdfRecord]) -> Result<Vec<u8>> {
    let pixels = geometry.channels() * geometry.rows() * geometry.cols();
    let mut out = Vec::with_capacity(HEADER_LEN + records.len() * (8 + 8 * pixels));
    out.extend_from_slice(RECORD_MAGIC);
    out.extend_from_slice(&RECORD_VERSION.to_le_bytes());
    out.extend_from_slice(&(geometry.n as u32).to_le_bytes());
    for v in [
        geometry.len,
        records.len(),
        geometry.channels(),
        geometry.rows(),
        geometry.cols(),
    ] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for (i, r) in records.iter().enumerate() {
        if r.image.geometry != *geometry {
            return Err(Error::ShapeMismatch(format!(
                "record {} has a different MDF geometry",
                i + 1
            )));
        }
        let label = r.label.map_or(-1, |l| l as i64);
        out.extend_from_slice(&label.to_le_bytes());
        for v in &r.image.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_records(bytes: &[u8], path: &Path) -> Result<(MdfGeometry, Vec<MdfRecord>)> {
    let bad = |msg: String| Error::Format {
        path: path.to_owned(),
        msg,
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != RECORD_MAGIC {
        return Err(bad("not an MDF record file".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
    let version = u32_at(8);
    if version != RECORD_VERSION {
        return Err(bad(format!("unsupported record version {version}")));
    }
    let n = u32_at(12) as usize;
    let geometry = MdfGeometry::new(u64_at(16), n).map_err(|e| bad(e.to_string()))?;
    let count = u64_at(24);
    let dims = [u64_at(32), u64_at(40), u64_at(48)];
    if dims != [geometry.channels(), geometry.rows(), geometry.cols()] {
        return Err(bad(format!("shape {dims:?} inconsistent with T and n")));
    }
    let pixels = dims.iter().product::<usize>();
    let stride = 8 + 8 * pixels;
    let expected = count.checked_mul(stride).and_then(|b| b.checked_add(HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(bad(format!(
            "{} bytes do not hold {count} records of {stride} bytes",
            bytes.len()
        )));
    }
    let records = bytes[HEADER_LEN..]
        .chunks_exact(stride)
        .map(|chunk| {
            let label = i64::from_le_bytes(chunk[..8].try_into().unwrap());
            let data = chunk[8..]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            MdfRecord {
                label: usize::try_from(label).ok(),
                image: MdfImage { geometry, data },
            }
        })
        .collect();
    Ok((geometry, records))
}

pub fn write_records(path: &Path, geometry: &MdfGeometry, records: &[MdfRecord]) -> Result<()> {
    std::fs::write(path, encode_records(geometry, records)?)?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<(MdfGeometry, Vec<MdfRecord>)> {
    decode_records(&crate::error::read_file(path)?, path)
}
