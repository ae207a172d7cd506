use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::ImageSet;
use super::model::{feature_dims, FcnModel, FcnShape, DESK_FILTERS};
use crate::error::{Error, Result};
use crate::nn::{batch_cross_entropy, Adam, Mode, Real};

pub const STRIDE_CANDIDATES: [[usize; 3]; 4] = [[8, 5, 3], [4, 2, 2], [2, 2, 2], [3, 2, 1]];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl std::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::InvalidArgument(format!("unknown precision {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Motif length.
    pub n: usize,
    pub filters: [usize; 3],
    /// One candidate trains directly; several are compared by cross-validation.
    pub stride_candidates: Vec<[usize; 3]>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epochs: usize,
    /// Epochs per cross-validation fold; `epochs` when unset.
    pub cv_epochs: Option<usize>,
    pub batch_size: usize,
    pub folds: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n: 3,
            filters: DESK_FILTERS,
            stride_candidates: STRIDE_CANDIDATES.to_vec(),
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epochs: 200,
            cv_epochs: None,
            batch_size: 16,
            folds: 4,
            seed: 0,
            precision: Precision::F32,
        }
    }
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct TrainRun<R> {
    /// Snapshot at the end of the epoch with the lowest mean training loss.
    pub model: FcnModel<R>,
    /// Mean minibatch loss of every epoch.
    pub loss_history: Vec<f64>,
    /// 0-based epoch of the snapshot; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
}

/// Splits a shuffled index list into batches; a trailing singleton joins the
/// previous batch so that batch norm always sees at least two samples.
pub(crate) fn make_batches(order: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(|c| c.to_vec()).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let last = batches.pop().expect("non-empty");
        batches.last_mut().expect("non-empty").extend(last);
    }
    batches
}

/// Trains an FCN with the given strides on `set`.
pub fn train<R: Real>(
    set: &ImageSet,
    cfg: &TrainConfig,
    strides: [usize; 3],
    epochs: usize,
) -> Result<TrainRun<R>> {
    if set.classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "training needs at least 2 classes, got {}",
            set.classes
        )));
    }
    if let Some(c) = set.class_counts().iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "class {} has no training instance",
            c + 1
        )));
    }
    let batch_size = cfg.batch_size.min(set.len());
    if batch_size < 2 {
        return Err(Error::DegenerateBatch(batch_size));
    }
    let g = set.geometry;
    feature_dims(g.rows(), g.cols(), strides)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shape = FcnShape {
        in_channels: g.channels(),
        filters: cfg.filters,
        strides,
        classes: set.classes,
    };
    let mut model = FcnModel::<R>::init(&shape, &mut rng)?;
    let mut adam = Adam::new(cfg.learning_rate, cfg.beta1, cfg.beta2);
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = None;
    let mut history = Vec::with_capacity(epochs);
    let mut order: Vec<usize> = (0..set.len()).collect();

    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in make_batches(&order, batch_size) {
            let x = set.batch::<R>(&batch);
            let targets: Vec<usize> = batch.iter().map(|&i| set.labels[i]).collect();
            let pass = model.forward(&x, Mode::Training)?;
            let (loss, dlogits) = batch_cross_entropy(&pass.logits, set.classes, &targets)?;
            model.backward(&pass, &dlogits)?;
            adam.step(&mut model.params_mut())?;
            model.update_running_stats(&pass);
            total += loss * batch.len() as f64;
        }
        let mean = total / set.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.6}");
        history.push(mean);
        if mean < best_loss {
            best_loss = mean;
            best_epoch = Some(epoch);
            best = model.clone();
        }
    }
    Ok(TrainRun {
        model: best,
        loss_history: history,
        best_epoch,
    })
}

/// Fraction of `set` whose arg-max prediction differs from its label.
pub fn error_rate<R: Real>(model: &FcnModel<R>, set: &ImageSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyDataset("no test instances".into()));
    }
    let predictions = predict(model, set)?;
    let wrong = predictions
        .iter()
        .zip(&set.labels)
        .filter(|(p, l)| p != l)
        .count();
    Ok(wrong as f64 / set.len() as f64)
}

pub fn predict<R: Real>(model: &FcnModel<R>, set: &ImageSet) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(set.len());
    let all: Vec<usize> = (0..set.len()).collect();
    for chunk in all.chunks(64) {
        for p in model.predict_proba(&set.batch::<R>(chunk))? {
            out.push(argmax(&p));
        }
    }
    Ok(out)
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_singleton_is_merged() {
        let order: Vec<usize> = (0..9).collect();
        let b = make_batches(&order, 4);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 5]);
        let b = make_batches(&order, 3);
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn argmax_first_wins_ties() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }
}
