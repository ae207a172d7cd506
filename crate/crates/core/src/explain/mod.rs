//! Grad-CAM on MDF images and ordinal-pattern significance.
//!
//! The coarse map over the last block's grid is up-sampled to the MDF grid,
//! averaged with its rotation partner, and then averaged over the motif
//! positions of each ordinal pattern.

mod codes;
mod gradcam;
mod ordinal;
mod significance;

pub use codes::{pattern_codes, publish, MAX_PATTERN_LEN};
pub use gradcam::{
    feature_score_gradient, grad_cam, head_score, image_tensor, symmetrize, upsample, ClassScore,
    GradCam, GradCamMap, SymmetrizedMap,
};
pub use ordinal::{dense_ranks, ordinal_pattern, PatternTable, TieRule};
pub use significance::{
    collect_indices, significance, MotifPartition, PatternScore, PatternSignificance,
};

use crate::error::Result;
use crate::fcn::TrainedArtifact;
use crate::mdf::TimeSeries;
use crate::nn::Real;

/// Everything derived from explaining one series.
#[derive(Debug, Clone)]
pub struct Explanation {
    pub cam: GradCam,
    pub upsampled: GradCamMap,
    pub symmetrized: SymmetrizedMap,
    pub partition: MotifPartition,
    pub significance: PatternSignificance,
}

/// Explains the model's score for `class` (0-based) on `series`. Motifs are
/// classified on the series as given; the model sees it normalized.
pub fn explain<R: Real>(
    artifact: &TrainedArtifact<R>,
    series: &TimeSeries,
    class: usize,
    score: ClassScore,
    rule: TieRule,
) -> Result<Explanation> {
    let image = artifact.encode(series)?;
    let cam = grad_cam(&artifact.model, &image, class, score)?;
    let geometry = image.geometry;
    let upsampled = upsample(&cam.map, geometry.rows(), geometry.cols())?;
    let symmetrized = symmetrize(&upsampled, &geometry)?;
    let partition = MotifPartition::new(&series.values, geometry.n, rule)?;
    let significance = significance(&symmetrized, &partition)?;
    Ok(Explanation {
        cam,
        upsampled,
        symmetrized,
        partition,
        significance,
    })
}
