//! A trained model bundled with everything needed to reproduce its input
//! pipeline, and its on-disk form.
//!
//! A model directory holds two files:
//!
//! * `checkpoint.json`: the [`Checkpoint`] container (layer shapes,
//!   parameters, BN running statistics, training configuration).
//! * `artifact.json`: the [`ArtifactMeta`] sidecar (precision, chosen
//!   strides, normalization bounds, encoder settings, loss history and the
//!   cross-validation report).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate_strides, CvReport};
use super::dataset::ImageSet;
use super::model::FcnModel;
use super::train::{error_rate, predict, train, Precision, TrainConfig};
use crate::error::{Error, Result};
use crate::mdf::{encode, MdfImage, MinMax, TimeSeries};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::Real;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const META_FILE: &str = "artifact.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub precision: Precision,
    pub strides: [usize; 3],
    pub bounds: MinMax,
    pub n: usize,
    pub series_len: usize,
    pub classes: usize,
    /// Original label of each class index, when known.
    pub class_labels: Vec<String>,
    pub loss_history: Vec<f64>,
    pub best_epoch: Option<usize>,
    pub cv: Option<CvReport>,
    pub config: TrainConfig,
}

impl ArtifactMeta {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&crate::error::read_file(&dir.join(META_FILE))?)?)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedArtifact<R> {
    pub model: FcnModel<R>,
    pub meta: ArtifactMeta,
}

/// Normalizes the training split, encodes it, picks strides and trains.
pub fn fit<R: Real>(
    train_series: &[TimeSeries],
    classes: usize,
    cfg: &TrainConfig,
) -> Result<TrainedArtifact<R>> {
    let bounds = MinMax::fit(train_series)?;
    let normalized = train_series
        .iter()
        .map(|ts| bounds.apply(ts))
        .collect::<Result<Vec<_>>>()?;
    let set = ImageSet::encode(&normalized, cfg.n, classes)?;
    let cv = cross_validate_strides::<R>(&set, cfg)?;
    let run = train::<R>(&set, cfg, cv.chosen, cfg.epochs)?;
    let meta = ArtifactMeta {
        precision: match R::NAME {
            "f64" => Precision::F64,
            _ => Precision::F32,
        },
        strides: cv.chosen,
        bounds,
        n: cfg.n,
        series_len: set.geometry.len,
        classes,
        class_labels: Vec::new(),
        loss_history: run.loss_history,
        best_epoch: run.best_epoch,
        cv: (cv.folds > 0).then_some(cv),
        config: cfg.clone(),
    };
    Ok(TrainedArtifact {
        model: run.model,
        meta,
    })
}

impl<R: Real> TrainedArtifact<R> {
    /// Applies the stored normalization, then encodes.
    pub fn encode(&self, x: &TimeSeries) -> Result<MdfImage> {
        if x.len() != self.meta.series_len {
            return Err(Error::ShapeMismatch(format!(
                "series of length {} for a model trained on length {}",
                x.len(),
                self.meta.series_len
            )));
        }
        encode(&self.meta.bounds.apply(x)?.values, self.meta.n)
    }

    /// Normalized, encoded test split. Labels are required.
    pub fn image_set(&self, series: &[TimeSeries]) -> Result<ImageSet> {
        if series.is_empty() {
            return Err(Error::EmptyDataset("no test instances".into()));
        }
        let normalized = series
            .iter()
            .map(|ts| {
                if ts.len() != self.meta.series_len {
                    return Err(Error::ShapeMismatch(format!(
                        "series of length {} for a model trained on length {}",
                        ts.len(),
                        self.meta.series_len
                    )));
                }
                self.meta.bounds.apply(ts)
            })
            .collect::<Result<Vec<_>>>()?;
        ImageSet::encode(&normalized, self.meta.n, self.meta.classes)
    }

    pub fn predict(&self, series: &[TimeSeries]) -> Result<Vec<usize>> {
        let unlabeled: Vec<TimeSeries> = series
            .iter()
            .map(|ts| TimeSeries {
                values: ts.values.clone(),
                label: Some(0),
            })
            .collect();
        predict(&self.model, &self.image_set(&unlabeled)?)
    }

    /// Misclassification rate on a labeled split.
    pub fn evaluate(&self, series: &[TimeSeries]) -> Result<f64> {
        error_rate(&self.model, &self.image_set(series)?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let config = serde_json::to_value(&self.meta.config)?;
        Checkpoint::new(R::NAME, self.model.to_records(), config).save(&dir.join(CHECKPOINT_FILE))?;
        std::fs::write(dir.join(META_FILE), serde_json::to_vec_pretty(&self.meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = ArtifactMeta::load(dir)?;
        let ck = Checkpoint::load(&dir.join(CHECKPOINT_FILE))?;
        if ck.precision != R::NAME {
            return Err(Error::Format {
                path: dir.join(CHECKPOINT_FILE),
                msg: format!("checkpoint precision {} loaded as {}", ck.precision, R::NAME),
            });
        }
        let model = FcnModel::from_records(&ck.layers)?;
        let shape = model.shape();
        if shape.classes != meta.classes || shape.in_channels != meta.n - 1 || shape.strides != meta.strides {
            return Err(Error::Format {
                path: dir.to_owned(),
                msg: "checkpoint and sidecar disagree".into(),
            });
        }
        Ok(TrainedArtifact { model, meta })
    }
}

/// An artifact of either precision, as read from disk.
#[derive(Debug, Clone)]
pub enum AnyArtifact {
    F32(TrainedArtifact<f32>),
    F64(TrainedArtifact<f64>),
}

impl AnyArtifact {
    pub fn load(dir: &Path) -> Result<Self> {
        match ArtifactMeta::load(dir)?.precision {
            Precision::F32 => Ok(AnyArtifact::F32(TrainedArtifact::load(dir)?)),
            Precision::F64 => Ok(AnyArtifact::F64(TrainedArtifact::load(dir)?)),
        }
    }

    pub fn meta(&self) -> &ArtifactMeta {
        match self {
            AnyArtifact::F32(a) => &a.meta,
            AnyArtifact::F64(a) => &a.meta,
        }
    }

    pub fn evaluate(&self, series: &[TimeSeries]) -> Result<f64> {
        match self {
            AnyArtifact::F32(a) => a.evaluate(series),
            AnyArtifact::F64(a) => a.evaluate(series),
        }
    }

    pub fn predict(&self, series: &[TimeSeries]) -> Result<Vec<usize>> {
        match self {
            AnyArtifact::F32(a) => a.predict(series),
            AnyArtifact::F64(a) => a.predict(series),
        }
    }
}
