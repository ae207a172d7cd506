use crate::error::{Error, Result};
use crate::mdf::{encode, MdfGeometry, TimeSeries};
use crate::nn::{Real, Tensor4};

/// Labeled MDF images sharing one geometry, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub geometry: MdfGeometry,
    pub classes: usize,
    pub labels: Vec<usize>,
    data: Vec<f64>,
}

impl ImageSet {
    /// Encodes every series. All series must be labeled and of equal length.
    pub fn encode(series: &[TimeSeries], n: usize, classes: usize) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::EmptyDataset("no series to encode".into()))?;
        let geometry = MdfGeometry::new(first.len(), n)?;
        let mut data = Vec::with_capacity(series.len() * image_len(&geometry));
        let mut labels = Vec::with_capacity(series.len());
        for (i, ts) in series.iter().enumerate() {
            if ts.len() != first.len() {
                return Err(Error::ShapeMismatch(format!(
                    "series {} has length {}, expected {}",
                    i + 1,
                    ts.len(),
                    first.len()
                )));
            }
            let label = ts.label.ok_or_else(|| {
                Error::InvalidArgument(format!("series {} has no label", i + 1))
            })?;
            if label >= classes {
                return Err(Error::InvalidClass { class: label, classes });
            }
            labels.push(label);
            data.extend_from_slice(&encode(&ts.values, n)?.data);
        }
        Ok(ImageSet {
            geometry,
            classes,
            labels,
            data,
        })
    }

    pub fn from_parts(
        geometry: MdfGeometry,
        classes: usize,
        labels: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != labels.len() * image_len(&geometry) {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} images",
                data.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidClass { class: bad, classes });
        }
        Ok(ImageSet {
            geometry,
            classes,
            labels,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let len = image_len(&self.geometry);
        &self.data[i * len..(i + 1) * len]
    }

    /// Gathers the images at `indices` into one batch tensor.
    pub fn batch<R: Real>(&self, indices: &[usize]) -> Tensor4<R> {
        let g = &self.geometry;
        let mut data = Vec::with_capacity(indices.len() * image_len(g));
        for &i in indices {
            data.extend(self.image(i).iter().map(|&v| R::of_f64(v)));
        }
        Tensor4::from_vec([indices.len(), g.channels(), g.rows(), g.cols()], data)
            .expect("image length matches geometry")
    }

    pub fn subset(&self, indices: &[usize]) -> ImageSet {
        let mut data = Vec::with_capacity(indices.len() * image_len(&self.geometry));
        for &i in indices {
            data.extend_from_slice(self.image(i));
        }
        ImageSet {
            geometry: self.geometry,
            classes: self.classes,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            data,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

fn image_len(g: &MdfGeometry) -> usize {
    g.channels() * g.rows() * g.cols()
}
