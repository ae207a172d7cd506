//! Motif difference field (MDF) imaging of univariate time series, a
//! fully convolutional classifier trained from scratch on those images, and
//! Grad-CAM based ranking of the motif ordinal patterns that drive each
//! classification.

pub mod data;
pub mod error;
pub mod explain;
pub mod fcn;
pub mod io;
pub mod mdf;
pub mod nn;

pub use error::{Error, Result};
