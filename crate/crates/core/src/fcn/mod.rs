//! The fully convolutional classifier over MDF images: model assembly,
//! training with Adam, stride selection by k-fold cross-validation and
//! evaluation.

pub mod artifact;
pub mod cv;
pub mod dataset;
pub mod model;
pub mod train;

pub use artifact::{fit, AnyArtifact, ArtifactMeta, TrainedArtifact};
pub use cv::{cross_validate_strides, stratified_folds, CandidateScore, CvReport};
pub use dataset::ImageSet;
pub use model::{feature_dims, FcnModel, FcnShape, ForwardPass, DESK_FILTERS, KERNELS, FULL_FILTERS};
pub use train::{argmax, error_rate, predict, train, Precision, TrainConfig, TrainRun, STRIDE_CANDIDATES};
