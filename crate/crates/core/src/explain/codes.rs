//! Ordinal pattern code table.
//!
//! A weak ordering of `n` values is first written as its dense-rank string
//! (`(7, 2, 2)` becomes `211`). For `n = 3` the two outer-tie orderings are
//! then renamed to the published codes: `121` (`x1 = x3 < x2`) is `113`
//! and `212` (`x1 = x3 > x2`) is `311`. Every other dense-rank string is its
//! own code. Longer motifs keep the dense-rank strings unchanged.

use crate::error::{Error, Result};

/// Longest motif whose full pattern table is generated.
pub const MAX_PATTERN_LEN: usize = 7;

const TRIADIC_RENAMES: [(&str, &str); 2] = [("121", "113"), ("212", "311")];

/// Published code for a dense-rank string.
pub fn publish(dense: &str) -> String {
    if dense.len() == 3 {
        for (from, to) in TRIADIC_RENAMES {
            if dense == from {
                return to.to_owned();
            }
        }
    }
    dense.to_owned()
}

/// All codes for motif length `n`, sorted. Pattern index `j` is the
/// 0-based position in this list.
pub fn pattern_codes(n: usize) -> Result<Vec<String>> {
    if !(2..=MAX_PATTERN_LEN).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "ordinal patterns need motif length in 2..={MAX_PATTERN_LEN}, got {n}"
        )));
    }
    let mut out = Vec::new();
    let mut ranks = Vec::with_capacity(n);
    dense_rank_strings(n, &mut ranks, 0, &mut out);
    let mut codes: Vec<String> = out.iter().map(|d| publish(d)).collect();
    codes.sort();
    Ok(codes)
}

/// Appends every surjection of `n` positions onto `1..=k` written as digits.
fn dense_rank_strings(n: usize, ranks: &mut Vec<u8>, max: u8, out: &mut Vec<String>) {
    if ranks.len() == n {
        let used = (1..=max).all(|r| ranks.contains(&r));
        if used {
            out.push(ranks.iter().map(|r| char::from(b'0' + r)).collect());
        }
        return;
    }
    let missing = (1..=max).filter(|r| !ranks.contains(r)).count();
    if missing > n - ranks.len() {
        return;
    }
    for r in 1..=n as u8 {
        ranks.push(r);
        dense_rank_strings(n, ranks, max.max(r), out);
        ranks.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triadic_table_is_the_published_list() {
        let expected = [
            "111", "112", "113", "122", "123", "132", "211", "213", "221", "231", "311", "312", "321",
        ];
        assert_eq!(pattern_codes(3).unwrap(), expected);
    }

    #[test]
    fn dual_table() {
        assert_eq!(pattern_codes(2).unwrap(), ["11", "12", "21"]);
    }

    #[test]
    fn table_sizes_are_ordered_bell_numbers() {
        let sizes: Vec<usize> = (2..=6).map(|n| pattern_codes(n).unwrap().len()).collect();
        assert_eq!(sizes, [3, 13, 75, 541, 4683]);
    }

    #[test]
    fn out_of_range_lengths_are_rejected() {
        assert!(pattern_codes(1).is_err());
        assert!(pattern_codes(MAX_PATTERN_LEN + 1).is_err());
    }
}
