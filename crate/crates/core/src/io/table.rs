//! Pattern significance as CSV: `pattern,z,e,rank`.
//!
//! Rows follow pattern-index order. `e` is written with 17 significant
//! digits; `e` and `rank` are empty for patterns that never occur.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{PatternScore, PatternSignificance};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    pattern: String,
    z: usize,
    e: Option<String>,
    rank: Option<usize>,
}

/// Formats `v` with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn significance_csv(sig: &PatternSignificance) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &sig.scores {
        w.serialize(Row {
            pattern: s.code.clone(),
            z: s.count,
            e: s.mean.map(format_real),
            rank: s.rank,
        })
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format {
        path: Default::default(),
        msg: e.to_string(),
    }
}

pub fn write_significance(path: &Path, sig: &PatternSignificance) -> Result<()> {
    std::fs::write(path, significance_csv(sig)?)?;
    Ok(())
}

/// Reads a table written by [`write_significance`]. The ranking is rebuilt
/// from the `rank` column.
pub fn read_significance(path: &Path) -> Result<PatternSignificance> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut scores = Vec::new();
    for row in r.deserialize::<Row>() {
        let row = row.map_err(csv_error)?;
        let mean = row
            .e
            .map(|e| {
                e.parse::<f64>().map_err(|_| Error::Format {
                    path: path.to_owned(),
                    msg: format!("bad score {e:?}"),
                })
            })
            .transpose()?;
        scores.push(PatternScore {
            code: row.pattern,
            count: row.z,
            mean,
            rank: row.rank,
        });
    }
    let mut ranked: Vec<(usize, usize)> = scores
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.rank.map(|r| (r, j)))
        .collect();
    ranked.sort();
    Ok(PatternSignificance {
        scores,
        ranking: ranked.into_iter().map(|(_, j)| j).collect(),
    })
}
