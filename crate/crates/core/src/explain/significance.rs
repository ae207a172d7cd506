use serde::{Deserialize, Serialize};

use super::gradcam::SymmetrizedMap;
use super::ordinal::{PatternTable, TieRule};
use crate::error::{Error, Result};
use crate::mdf::MdfGeometry;

/// Pattern index of every valid motif position of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifPartition {
    pub geometry: MdfGeometry,
    table: PatternTable,
    /// Row-major over the MDF grid; `None` at masked positions.
    labels: Vec<Option<usize>>,
}

impl MotifPartition {
    /// Classifies every motif `(x_s, x_{s+d}, ..., x_{s+(n-1)d})`.
    pub fn new(x: &[f64], n: usize, rule: TieRule) -> Result<Self> {
        let geometry = MdfGeometry::new(x.len(), n)?;
        let table = PatternTable::new(n)?;
        let cols = geometry.cols();
        let mut labels = vec![None; geometry.rows() * cols];
        let mut motif = vec![0.0; n];
        for d in 1..=geometry.rows() {
            for s in 1..=geometry.valid_starts(d) {
                for (k, m) in motif.iter_mut().enumerate() {
                    *m = x[s - 1 + k * d];
                }
                labels[(d - 1) * cols + (s - 1)] = Some(table.classify(&motif, rule)?);
            }
        }
        Ok(MotifPartition {
            geometry,
            table,
            labels,
        })
    }

    pub fn table(&self) -> &PatternTable {
        &self.table
    }

    /// Pattern index at 1-based `(d, s)`, or `None` when masked.
    pub fn label(&self, d: usize, s: usize) -> Option<usize> {
        self.labels[(d - 1) * self.geometry.cols() + (s - 1)]
    }

    /// `MC_j`: every `(d, s)` whose motif has pattern `j`, in row-major order.
    pub fn indices(&self, j: usize) -> Result<Vec<(usize, usize)>> {
        if j >= self.table.len() {
            return Err(Error::OutOfRange(format!(
                "pattern index {j} for a table of {}",
                self.table.len()
            )));
        }
        let cols = self.geometry.cols();
        Ok(self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(j))
            .map(|(i, _)| (i / cols + 1, i % cols + 1))
            .collect())
    }

    /// `Z_j` for every pattern.
    pub fn sizes(&self) -> Vec<usize> {
        let mut z = vec![0; self.table.len()];
        for j in self.labels.iter().flatten() {
            z[*j] += 1;
        }
        z
    }
}

/// `MC_j` for series `x` with exact tie handling.
pub fn collect_indices(x: &[f64], n: usize, j: usize) -> Result<Vec<(usize, usize)>> {
    MotifPartition::new(x, n, TieRule::EXACT)?.indices(j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternScore {
    pub code: String,
    /// `Z_j`.
    pub count: usize,
    /// `E_j`; absent when the pattern never occurs.
    pub mean: Option<f64>,
    /// 1-based position in the ranking; absent when the pattern never occurs.
    pub rank: Option<usize>,
}

/// Per-pattern significance of one explained series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSignificance {
    /// One entry per pattern, in pattern-index order.
    pub scores: Vec<PatternScore>,
    /// Pattern indices of the nonempty patterns, most significant first.
    pub ranking: Vec<usize>,
}

impl PatternSignificance {
    /// Codes of the `k` highest-ranked patterns.
    pub fn top(&self, k: usize) -> Vec<&str> {
        self.ranking
            .iter()
            .take(k)
            .map(|&j| self.scores[j].code.as_str())
            .collect()
    }

    /// `E_j` with empty patterns reported as zero.
    pub fn mean_or_zero(&self, j: usize) -> f64 {
        self.scores[j].mean.unwrap_or(0.0)
    }
}

/// Mean of `L'` over each `MC_j` and the descending ranking, ties broken by
/// ascending pattern index.
pub fn significance(map: &SymmetrizedMap, partition: &MotifPartition) -> Result<PatternSignificance> {
    if map.geometry != partition.geometry {
        return Err(Error::ShapeMismatch(format!(
            "map is {}x{}, partition is {}x{}",
            map.rows(),
            map.cols(),
            partition.geometry.rows(),
            partition.geometry.cols()
        )));
    }
    let m = partition.table.len();
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for (label, v) in partition.labels.iter().zip(&map.data) {
        if let Some(j) = label {
            sums[*j] += v;
            counts[*j] += 1;
        }
    }
    let means: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &z)| (z > 0).then(|| s / z as f64))
        .collect();
    let mut ranking: Vec<usize> = (0..m).filter(|&j| counts[j] > 0).collect();
    ranking.sort_by(|&a, &b| {
        let (ea, eb) = (means[a].unwrap(), means[b].unwrap());
        eb.total_cmp(&ea).then(a.cmp(&b))
    });
    let mut rank = vec![None; m];
    for (pos, &j) in ranking.iter().enumerate() {
        rank[j] = Some(pos + 1);
    }
    let scores = (0..m)
        .map(|j| PatternScore {
            code: partition.table.codes()[j].clone(),
            count: counts[j],
            mean: means[j],
            rank: rank[j],
        })
        .collect();
    Ok(PatternSignificance { scores, ranking })
}
