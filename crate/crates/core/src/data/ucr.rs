//! UCR flat-file format: one series per line, the class label first and then
//! the values, separated by tabs or commas.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdf::TimeSeries;

/// Original labels in ascending numeric order; class `i` is `labels[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    pub labels: Vec<String>,
    values: Vec<f64>,
}

impl LabelTable {
    fn from_raw(raw: &[(String, f64)]) -> Self {
        let mut pairs: Vec<(String, f64)> = Vec::new();
        for (text, v) in raw {
            if !pairs.iter().any(|(_, p)| p == v) {
                pairs.push((text.clone(), *v));
            }
        }
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
        LabelTable {
            labels: pairs.iter().map(|p| p.0.clone()).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Rebuilds a table from stored label strings, as kept in an artifact.
    pub fn from_labels(labels: &[String]) -> Result<Self> {
        let raw = labels
            .iter()
            .map(|l| {
                l.parse::<f64>()
                    .map(|v| (l.clone(), v))
                    .map_err(|_| Error::InvalidArgument(format!("label {l:?} is not numeric")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_raw(&raw))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == label)
    }
}

/// One split as read from disk, with labels remapped to `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct UcrSplit {
    pub series: Vec<TimeSeries>,
    pub table: LabelTable,
    raw_labels: Vec<f64>,
}

impl UcrSplit {
    /// Series length shared by every row.
    pub fn series_len(&self) -> usize {
        self.series.first().map_or(0, TimeSeries::len)
    }

    /// Re-labels this split with another split's table.
    pub fn relabel(&self, table: &LabelTable) -> Result<Vec<TimeSeries>> {
        self.series
            .iter()
            .zip(&self.raw_labels)
            .enumerate()
            .map(|(i, (ts, &raw))| {
                let idx = table.index_of(raw).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "row {}: label {raw} does not occur in the training split",
                        i + 1
                    ))
                })?;
                Ok(TimeSeries {
                    values: ts.values.clone(),
                    label: Some(idx),
                })
            })
            .collect()
    }
}

/// A named train/test pair sharing one label table and one series length.
#[derive(Debug, Clone, PartialEq)]
pub struct UcrDataset {
    pub name: String,
    pub train: Vec<TimeSeries>,
    pub test: Vec<TimeSeries>,
    pub table: LabelTable,
}

impl UcrDataset {
    pub fn load(name: &str, train: &Path, test: &Path) -> Result<Self> {
        let tr = load_ucr_file(train)?;
        let te = load_ucr_file(test)?;
        if tr.series_len() != te.series_len() {
            return Err(Error::ShapeMismatch(format!(
                "train series have length {}, test series {}",
                tr.series_len(),
                te.series_len()
            )));
        }
        Ok(UcrDataset {
            name: name.into(),
            test: te.relabel(&tr.table)?,
            train: tr.series,
            table: tr.table,
        })
    }

    pub fn classes(&self) -> usize {
        self.table.len()
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains('\t') || line.contains(',') {
        line.split(['\t', ','])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .collect()
    } else {
        line.split_whitespace().collect()
    }
}

pub fn parse_ucr(text: &str, path: &Path) -> Result<UcrSplit> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_owned(),
        line,
        msg,
    };
    let mut rows: Vec<(String, f64, Vec<f64>)> = Vec::new();
    let mut width: Option<(usize, usize)> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_fields(line);
        let (label_text, values) = fields.split_first().expect("non-empty line has a field");
        let label: f64 = label_text
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label {label_text:?}")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, format!("bad label {label_text:?}")));
        }
        let values = values
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("bad value {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(parse_err(lineno, "row has a label but no values".into()));
        }
        match width {
            None => width = Some((values.len(), lineno)),
            Some((w, _)) if w != values.len() => {
                return Err(Error::RaggedRow {
                    path: path.to_owned(),
                    line: lineno,
                    found: values.len(),
                    expected: w,
                })
            }
            _ => {}
        }
        rows.push((label_text.to_string(), label, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!("{} has no rows", path.display())));
    }
    let raw: Vec<(String, f64)> = rows.iter().map(|r| (r.0.clone(), r.1)).collect();
    let table = LabelTable::from_raw(&raw);
    let raw_labels: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let series = rows
        .into_iter()
        .map(|(_, l, values)| TimeSeries {
            values,
            label: table.index_of(l),
        })
        .collect();
    Ok(UcrSplit {
        series,
        table,
        raw_labels,
    })
}

pub fn load_ucr_file(path: &Path) -> Result<UcrSplit> {
    let bytes = crate::error::read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Format {
        path: path.to_owned(),
        msg: "not UTF-8 text".into(),
    })?;
    parse_ucr(&text, path)
}

/// Formats series as tab-separated UCR rows; a series' label `i` is written
/// as `labels[i]`, or as `i + 1` without a table. Values carry 17
/// significant digits.
pub fn format_ucr(series: &[TimeSeries], labels: Option<&[String]>) -> Result<String> {
    let mut out = String::new();
    for (i, ts) in series.iter().enumerate() {
        let idx = ts
            .label
            .ok_or_else(|| Error::InvalidArgument(format!("series {} has no label", i + 1)))?;
        match labels {
            Some(names) => out.push_str(names.get(idx).ok_or(Error::InvalidClass {
                class: idx,
                classes: names.len(),
            })?),
            None => write!(out, "{}", idx + 1).expect("string write"),
        }
        for v in &ts.values {
            write!(out, "\t{v:.16e}").expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_ucr(path: &Path, series: &[TimeSeries], labels: Option<&[String]>) -> Result<()> {
    std::fs::write(path, format_ucr(series, labels)?)?;
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<UcrSplit> {
        parse_ucr(text, Path::new("mem.tsv"))
    }

    #[test]
    fn tab_line() {
        let s = parse("2\t0.1\t0.2\t0.3\n").unwrap();
        assert_eq!(s.series[0].values, vec![0.1, 0.2, 0.3]);
        assert_eq!(s.series[0].label, Some(0));
        assert_eq!(s.table.labels, vec!["2"]);
    }

    #[test]
    fn labels_sorted_numerically() {
        let s = parse("1,0,0\n-1,1,1\n10,2,2\n2,3,3\n").unwrap();
        assert_eq!(s.table.labels, vec!["-1", "1", "2", "10"]);
        let labels: Vec<usize> = s.series.iter().map(|t| t.label.unwrap()).collect();
        assert_eq!(labels, vec![1, 0, 3, 2]);
    }

    #[test]
    fn float_labels_match_integers() {
        let s = parse("1.0000000e+00 1 2\n2.0000000e+00 3 4\n1 5 6\n").unwrap();
        assert_eq!(s.table.len(), 2);
        assert_eq!(s.series[2].label, Some(0));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse(""), Err(Error::EmptyDataset(_))));
        assert!(parse("\n\n").is_err());
    }

    #[test]
    fn ragged_rows_name_the_line() {
        let err = parse("1\t1\t2\t3\t4\t5\n2\t1\t2\t3\t4\t5\t6\n").unwrap_err();
        match err {
            Error::RaggedRow { line, found, expected, .. } => {
                assert_eq!((line, found, expected), (2, 6, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("1\t0.5\n1\tabc\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("x\t1\n").is_err());
        assert!(parse("1\tNaN\n").is_err());
    }

    #[test]
    fn stored_labels_rebuild_the_table() {
        let train = parse("10\t0\n-1\t1\n2.5\t2\n").unwrap();
        let rebuilt = LabelTable::from_labels(&train.table.labels).unwrap();
        assert_eq!(rebuilt, train.table);
        assert!(LabelTable::from_labels(&["cat".to_string()]).is_err());
    }

    #[test]
    fn unseen_test_label() {
        let train = parse("1\t0\n2\t1\n").unwrap();
        let test = parse("3\t0\n").unwrap();
        assert!(test.relabel(&train.table).is_err());
    }

    #[test]
    fn written_values_round_trip() {
        let s = vec![TimeSeries::labeled(vec![0.1, -1.0 / 3.0, 1e-300, 12345.678901234567], 1).unwrap()];
        let text = format_ucr(&s, None).unwrap();
        let back = parse(&text).unwrap();
        assert_eq!(back.series[0].values, s[0].values);
        assert_eq!(back.table.labels, vec!["2"]);
    }
}
