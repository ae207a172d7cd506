//! Motif difference field (MDF) encoding of univariate time series.
//!
//! A length-`n` motif at displacement `d` starting at `s` is the sample
//! `(x_s, x_{s+d}, ..., x_{s+(n-1)d})`. Its motif difference is the vector of
//! the `n - 1` consecutive differences. Channel `i` of the MDF image stores the
//! `i`-th difference with displacement on the rows and start index on the
//! columns. Positions with no valid motif (the masked region) are filled with
//! the unfilled field rotated by 180 degrees.
//!
//! All public coordinates `(d, s)` and channel numbers `i` are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued series with an optional 0-based class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub label: Option<usize>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::build(values, None)
    }

    pub fn labeled(values: Vec<f64>, label: usize) -> Result<Self> {
        Self::build(values, Some(label))
    }

    fn build(values: Vec<f64>, label: Option<usize>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value {} at position {}",
                values[pos],
                pos + 1
            )));
        }
        Ok(TimeSeries { values, label })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `floor((len - 1) / (n - 1))`, the largest displacement with a valid motif.
pub fn max_displacement(len: usize, n: usize) -> Result<usize> {
    check_len(len, n)?;
    Ok((len - 1) / (n - 1))
}

fn check_len(len: usize, n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "motif length must be at least 2, got {n}"
        )));
    }
    if len < n {
        return Err(Error::InvalidArgument(format!(
            "series length {len} is shorter than motif length {n}"
        )));
    }
    Ok(())
}

/// Index algebra of an MDF image for a series of length `len` and motif length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MdfGeometry {
    pub len: usize,
    pub n: usize,
    pub d_max: usize,
}

impl MdfGeometry {
    pub fn new(len: usize, n: usize) -> Result<Self> {
        let d_max = max_displacement(len, n)?;
        Ok(MdfGeometry { len, n, d_max })
    }

    pub fn channels(&self) -> usize {
        self.n - 1
    }

    pub fn rows(&self) -> usize {
        self.d_max
    }

    /// Image width, `T - n + 1`.
    pub fn cols(&self) -> usize {
        self.len - self.n + 1
    }

    /// Number of valid motif starts at displacement `d`, `T - (n - 1) d`.
    pub fn valid_starts(&self, d: usize) -> usize {
        self.len.saturating_sub((self.n - 1) * d)
    }

    /// Total number of valid `(d, s)` motif positions.
    pub fn valid_positions(&self) -> usize {
        (1..=self.d_max).map(|d| self.valid_starts(d)).sum()
    }

    pub fn is_masked(&self, d: usize, s: usize) -> bool {
        s > self.valid_starts(d)
    }

    /// The 180-degree rotation partner `(d_max + 1 - d, cols + 1 - s)`.
    pub fn partner(&self, d: usize, s: usize) -> (usize, usize) {
        (self.d_max + 1 - d, self.cols() + 1 - s)
    }
}

/// Difference vector `(x_{s+d} - x_s, ..., x_{s+(n-1)d} - x_{s+(n-2)d})`.
pub fn motif_difference(x: &[f64], n: usize, d: usize, s: usize) -> Result<Vec<f64>> {
    let geom = MdfGeometry::new(x.len(), n)?;
    if d == 0 || d > geom.d_max || s == 0 || s > geom.valid_starts(d) {
        return Err(Error::OutOfRange(format!(
            "no length-{n} motif at d = {d}, s = {s} in a series of length {}",
            x.len()
        )));
    }
    let start = s - 1;
    Ok((1..n)
        .map(|i| x[start + i * d] - x[start + (i - 1) * d])
        .collect())
}

/// Binary masker: 1 where no valid motif starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Masker {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl Masker {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, d: usize, s: usize) -> u8 {
        self.bits[(d - 1) * self.cols + (s - 1)]
    }

    /// Row `d` as a slice.
    pub fn row(&self, d: usize) -> &[u8] {
        &self.bits[(d - 1) * self.cols..d * self.cols]
    }
}

pub fn build_masker(len: usize, n: usize) -> Result<Masker> {
    let geom = MdfGeometry::new(len, n)?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let mut bits = vec![0u8; rows * cols];
    for d in 1..=rows {
        let valid = geom.valid_starts(d);
        for s in valid + 1..=cols {
            bits[(d - 1) * cols + (s - 1)] = 1;
        }
    }
    Ok(Masker { rows, cols, bits })
}

/// An `(n - 1)`-channel MDF image stored channel-major, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdfImage {
    pub geometry: MdfGeometry,
    pub data: Vec<f64>,
}

impl MdfImage {
    pub fn channels(&self) -> usize {
        self.geometry.channels()
    }

    pub fn rows(&self) -> usize {
        self.geometry.rows()
    }

    pub fn cols(&self) -> usize {
        self.geometry.cols()
    }

    /// Channel `i` (1-based) as a row-major `rows x cols` slice.
    pub fn channel(&self, i: usize) -> &[f64] {
        let plane = self.rows() * self.cols();
        &self.data[(i - 1) * plane..i * plane]
    }

    /// Pixel at channel `i`, displacement `d`, start `s` (all 1-based).
    pub fn get(&self, i: usize, d: usize, s: usize) -> f64 {
        self.channel(i)[(d - 1) * self.cols() + (s - 1)]
    }
}

/// Encode `x` as an MDF image of motif length `n`.
pub fn encode(x: &[f64], n: usize) -> Result<MdfImage> {
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite value at position {}",
            pos + 1
        )));
    }
    let geom = MdfGeometry::new(x.len(), n)?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let plane = rows * cols;

    // Unfilled field: zero wherever the masker is 1.
    let mut raw = vec![0.0; (n - 1) * plane];
    for d in 1..=rows {
        let valid = geom.valid_starts(d);
        for i in 1..n {
            let row = &mut raw[(i - 1) * plane + (d - 1) * cols..][..valid];
            for (s0, px) in row.iter_mut().enumerate() {
                *px = x[s0 + i * d] - x[s0 + (i - 1) * d];
            }
        }
    }

    let mut data = raw.clone();
    for d in 1..=rows {
        for s in geom.valid_starts(d) + 1..=cols {
            let (pd, ps) = geom.partner(d, s);
            for i in 0..n - 1 {
                data[i * plane + (d - 1) * cols + (s - 1)] =
                    raw[i * plane + (pd - 1) * cols + (ps - 1)];
            }
        }
    }
    Ok(MdfImage {
        geometry: geom,
        data,
    })
}

/// Affine bounds taken from a training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    /// Bounds over every value of every series.
    pub fn fit<'a>(series: impl IntoIterator<Item = &'a TimeSeries>) -> Result<Self> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for ts in series {
            for &v in &ts.values {
                min = min.min(v);
                max = max.max(v);
            }
        }
        if !min.is_finite() {
            return Err(Error::EmptyDataset("no values to normalize".into()));
        }
        Ok(MinMax { min, max })
    }

    pub fn apply(&self, x: &TimeSeries) -> Result<TimeSeries> {
        minmax_normalize(x, self.min, self.max)
    }
}

/// Map each value to `(v - min) / (max - min)` without clipping.
pub fn minmax_normalize(x: &TimeSeries, train_min: f64, train_max: f64) -> Result<TimeSeries> {
    if train_max == train_min {
        return Err(Error::DegenerateRange(train_min));
    }
    if train_max < train_min {
        return Err(Error::InvalidArgument(format!(
            "normalization max {train_max} is below min {train_min}"
        )));
    }
    let span = train_max - train_min;
    Ok(TimeSeries {
        values: x.values.iter().map(|v| (v - train_min) / span).collect(),
        label: x.label,
    })
}
