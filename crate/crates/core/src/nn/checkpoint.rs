//! Plain-text JSON checkpoint container.
//!
//! ```text
//! {
//!   "format": "mdf-checkpoint",
//!   "version": 1,
//!   "precision": "f32" | "f64",
//!   "layers": [ { "kind": "conv2d", ... }, { "kind": "batchnorm", ... }, ... ],
//!   "config": { ... }            // training configuration, free-form
//! }
//! ```
//!
//! Parameters are stored as JSON numbers widened to f64, which round-trip
//! exactly for both precisions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BatchNorm2d, Conv2d, Dense, Padding, Param, Real};
use crate::error::{Error, Result};

pub const FORMAT: &str = "mdf-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerRecord {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        padding: Padding,
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
    BatchNorm {
        channels: usize,
        gamma: Vec<f64>,
        beta: Vec<f64>,
        running_mean: Vec<f64>,
        running_var: Vec<f64>,
        epsilon: f64,
        momentum: f64,
    },
    Dense {
        features: usize,
        classes: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub precision: String,
    pub layers: Vec<LayerRecord>,
    pub config: serde_json::Value,
}

fn widen<R: Real>(v: &[R]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn narrow<R: Real>(v: &[f64]) -> Vec<R> {
    v.iter().map(|&x| R::of_f64(x)).collect()
}

impl LayerRecord {
    pub fn conv<R: Real>(c: &Conv2d<R>) -> Self {
        LayerRecord::Conv2d {
            in_channels: c.in_channels,
            out_channels: c.out_channels,
            kernel: c.kernel,
            stride: c.stride,
            padding: c.padding,
            weight: widen(&c.weight.value),
            bias: widen(&c.bias.value),
        }
    }

    pub fn batchnorm<R: Real>(b: &BatchNorm2d<R>) -> Self {
        LayerRecord::BatchNorm {
            channels: b.channels,
            gamma: widen(&b.gamma.value),
            beta: widen(&b.beta.value),
            running_mean: widen(&b.running_mean),
            running_var: widen(&b.running_var),
            epsilon: b.epsilon,
            momentum: b.momentum,
        }
    }

    pub fn dense<R: Real>(d: &Dense<R>) -> Self {
        LayerRecord::Dense {
            features: d.features,
            classes: d.classes,
            weight: widen(&d.weight.value),
            bias: widen(&d.bias.value),
        }
    }

    pub fn to_conv<R: Real>(&self) -> Result<Conv2d<R>> {
        match self {
            LayerRecord::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                weight,
                bias,
            } => Conv2d::new(
                *in_channels,
                *out_channels,
                *kernel,
                *stride,
                *padding,
                narrow(weight),
                narrow(bias),
            ),
            other => Err(unexpected("conv2d", other)),
        }
    }

    pub fn to_batchnorm<R: Real>(&self) -> Result<BatchNorm2d<R>> {
        match self {
            LayerRecord::BatchNorm {
                channels,
                gamma,
                beta,
                running_mean,
                running_var,
                epsilon,
                momentum,
            } => {
                let c = *channels;
                if [gamma.len(), beta.len(), running_mean.len(), running_var.len()]
                    .iter()
                    .any(|&l| l != c)
                {
                    return Err(Error::ShapeMismatch(format!(
                        "batch norm record for {c} channels has wrong vector lengths"
                    )));
                }
                Ok(BatchNorm2d {
                    channels: c,
                    gamma: Param::new(narrow(gamma)),
                    beta: Param::new(narrow(beta)),
                    running_mean: narrow(running_mean),
                    running_var: narrow(running_var),
                    epsilon: *epsilon,
                    momentum: *momentum,
                })
            }
            other => Err(unexpected("batchnorm", other)),
        }
    }

    pub fn to_dense<R: Real>(&self) -> Result<Dense<R>> {
        match self {
            LayerRecord::Dense {
                features,
                classes,
                weight,
                bias,
            } => Dense::new(*features, *classes, narrow(weight), narrow(bias)),
            other => Err(unexpected("dense", other)),
        }
    }
}

fn unexpected(want: &str, got: &LayerRecord) -> Error {
    let kind = match got {
        LayerRecord::Conv2d { .. } => "conv2d",
        LayerRecord::BatchNorm { .. } => "batchnorm",
        LayerRecord::Dense { .. } => "dense",
    };
    Error::InvalidArgument(format!("checkpoint layer is {kind}, expected {want}"))
}

impl Checkpoint {
    pub fn new(precision: &str, layers: Vec<LayerRecord>, config: serde_json::Value) -> Self {
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            precision: precision.into(),
            layers,
            config,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_slice(&crate::error::read_file(path)?)?;
        if ck.format != FORMAT || ck.version != VERSION {
            return Err(Error::Format {
                path: path.to_owned(),
                msg: format!("unsupported checkpoint {} v{}", ck.format, ck.version),
            });
        }
        Ok(ck)
    }
}
