use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::codes::{pattern_codes, publish, MAX_PATTERN_LEN};
use crate::error::{Error, Result};

/// When two motif values count as equal: `|a - b| <= tolerance * max(1, |a|, |b|)`.
/// A tolerance of zero means exact equality.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TieRule {
    pub tolerance: f64,
}

impl TieRule {
    pub const EXACT: TieRule = TieRule { tolerance: 0.0 };

    pub fn new(tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tie tolerance must be finite and nonnegative, got {tolerance}"
            )));
        }
        Ok(TieRule { tolerance })
    }

    pub fn tied(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.tolerance * 1f64.max(a.abs()).max(b.abs())
    }
}

/// Dense-rank string of `values`. Values are sorted and each one joins the
/// previous group when tied with its predecessor, so with a nonzero
/// tolerance near-equal chains collapse into one rank.
pub fn dense_ranks(values: &[f64], rule: TieRule) -> Result<String> {
    if let Some(pos) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(format!(
            "NaN at motif position {}",
            pos + 1
        )));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u8; values.len()];
    let mut rank = 0u8;
    for (k, &i) in order.iter().enumerate() {
        if k == 0 || !rule.tied(values[order[k - 1]], values[i]) {
            rank += 1;
        }
        ranks[i] = rank;
    }
    Ok(ranks.iter().map(|r| char::from(b'0' + r)).collect())
}

/// Ordinal pattern code of a motif.
pub fn ordinal_pattern(values: &[f64], rule: TieRule) -> Result<String> {
    if !(2..=MAX_PATTERN_LEN).contains(&values.len()) {
        return Err(Error::InvalidArgument(format!(
            "ordinal patterns need motif length in 2..={MAX_PATTERN_LEN}, got {}",
            values.len()
        )));
    }
    Ok(publish(&dense_ranks(values, rule)?))
}

/// The enumerated patterns of one motif length.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternTable {
    n: usize,
    codes: Vec<String>,
    index: HashMap<String, usize>,
}

impl PatternTable {
    pub fn new(n: usize) -> Result<Self> {
        let codes = pattern_codes(n)?;
        let index = codes.iter().enumerate().map(|(j, c)| (c.clone(), j)).collect();
        Ok(PatternTable { n, codes, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn code(&self, j: usize) -> Option<&str> {
        self.codes.get(j).map(String::as_str)
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    /// Pattern index of a motif of this table's length.
    pub fn classify(&self, values: &[f64], rule: TieRule) -> Result<usize> {
        if values.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "motif of length {} for a length-{} pattern table",
                values.len(),
                self.n
            )));
        }
        let code = publish(&dense_ranks(values, rule)?);
        Ok(self.index[&code])
    }
}
