use std::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::ImageSet;
use super::model::feature_dims;
use super::train::{error_rate, train, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub strides: [usize; 3],
    /// Validation error of each fold; empty when the candidate was skipped.
    pub fold_errors: Vec<f64>,
    pub mean_error: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub candidates: Vec<CandidateScore>,
    pub chosen: [usize; 3],
}

/// Class-stratified, seeded assignment of each instance to a fold.
pub fn stratified_folds(labels: &[usize], classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Orders candidates by mean validation error, then by total downsampling
/// (larger first), then lexicographically larger first.
fn rank_key(c: &CandidateScore) -> (u64, Reverse<usize>, Reverse<[usize; 3]>) {
    let err = c.mean_error.unwrap_or(f64::INFINITY);
    (err.to_bits(), Reverse(c.strides.iter().product()), Reverse(c.strides))
}

/// Picks the stride triple with the lowest k-fold validation error rate.
pub fn cross_validate_strides<R: Real>(set: &ImageSet, cfg: &TrainConfig) -> Result<CvReport> {
    let g = set.geometry;
    let valid: Vec<[usize; 3]> = cfg
        .stride_candidates
        .iter()
        .copied()
        .filter(|&s| feature_dims(g.rows(), g.cols(), s).is_ok())
        .collect();
    if valid.is_empty() {
        return Err(Error::InvalidArgument(
            "no stride candidate fits the image".into(),
        ));
    }
    if cfg.stride_candidates.len() == 1 {
        return Ok(CvReport {
            folds: 0,
            candidates: vec![CandidateScore {
                strides: valid[0],
                fold_errors: vec![],
                mean_error: None,
                skipped: None,
            }],
            chosen: valid[0],
        });
    }
    let folds = cfg.folds.max(2);
    if set.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{folds}-fold cross-validation needs at least {folds} instances, got {}",
            set.len()
        )));
    }
    let assignment = stratified_folds(&set.labels, set.classes, folds, cfg.seed);
    let epochs = cfg.cv_epochs.unwrap_or(cfg.epochs);

    let mut candidates = Vec::with_capacity(cfg.stride_candidates.len());
    for &strides in &cfg.stride_candidates {
        if let Err(e) = feature_dims(g.rows(), g.cols(), strides) {
            log::warn!("skipping stride candidate {strides:?}: {e}");
            candidates.push(CandidateScore {
                strides,
                fold_errors: vec![],
                mean_error: None,
                skipped: Some(e.to_string()),
            });
            continue;
        }
        let mut fold_errors = Vec::with_capacity(folds);
        for fold in 0..folds {
            let (val, fit): (Vec<usize>, Vec<usize>) =
                (0..set.len()).partition(|&i| assignment[i] == fold);
            let fit_set = set.subset(&fit);
            let mut fold_cfg = cfg.clone();
            fold_cfg.seed = cfg.seed.wrapping_add(1 + fold as u64);
            let run = train::<R>(&fit_set, &fold_cfg, strides, epochs)?;
            fold_errors.push(error_rate(&run.model, &set.subset(&val))?);
        }
        let mean = fold_errors.iter().sum::<f64>() / folds as f64;
        log::info!("strides {strides:?}: mean validation error {mean:.4}");
        candidates.push(CandidateScore {
            strides,
            fold_errors,
            mean_error: Some(mean),
            skipped: None,
        });
    }
    let chosen = candidates
        .iter()
        .filter(|c| c.mean_error.is_some())
        .min_by_key(|c| rank_key(c))
        .map(|c| c.strides)
        .expect("at least one valid candidate");
    Ok(CvReport {
        folds,
        candidates,
        chosen,
    })
}
