use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::checkpoint::LayerRecord;
use crate::nn::{
    gap_backward, gap_forward, relu_backward, relu_forward, softmax, BatchNorm2d, BnCache, Conv2d,
    ConvCache, Dense, Mode, Padding, Param, Real, Tensor4,
};

/// Receptive fields of the three convolution blocks.
pub const KERNELS: [usize; 3] = [8, 5, 3];
pub const FULL_FILTERS: [usize; 3] = [128, 256, 128];
pub const DESK_FILTERS: [usize; 3] = [16, 32, 16];

/// Shape hyper-parameters of an FCN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcnShape {
    pub in_channels: usize,
    pub filters: [usize; 3],
    pub strides: [usize; 3],
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock<R> {
    pub conv: Conv2d<R>,
    pub bn: BatchNorm2d<R>,
}

/// Three conv/BN/ReLU blocks, global average pooling and a dense head.
#[derive(Debug, Clone, PartialEq)]
pub struct FcnModel<R> {
    pub blocks: Vec<ConvBlock<R>>,
    pub head: Dense<R>,
}

#[derive(Debug, Clone)]
struct BlockCache<R> {
    conv: ConvCache<R>,
    bn: BnCache<R>,
    /// BN output, the ReLU input.
    normalized: Tensor4<R>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass<R> {
    caches: Vec<BlockCache<R>>,
    /// Output of the last block.
    pub features: Tensor4<R>,
    /// Global average pool of `features`, `batch x filters[2]`.
    pub pooled: Vec<R>,
    /// `batch x classes`.
    pub logits: Vec<R>,
    pub classes: usize,
}

impl<R: Real> ForwardPass<R> {
    pub fn batch(&self) -> usize {
        self.features.batch()
    }

    /// Softmax probabilities per batch element.
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.logits
            .chunks(self.classes)
            .map(|row| softmax(&row.iter().map(|v| v.as_f64()).collect::<Vec<_>>()))
            .collect()
    }
}

/// Spatial dims after each block, or a stride-collapse error.
pub fn feature_dims(rows: usize, cols: usize, strides: [usize; 3]) -> Result<[[usize; 2]; 3]> {
    let mut dims = [[0; 2]; 3];
    let (mut r, mut c) = (rows, cols);
    for (i, &s) in strides.iter().enumerate() {
        if s == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        r = r.div_ceil(s);
        c = c.div_ceil(s);
        if r == 0 || c == 0 {
            return Err(Error::StrideCollapse {
                strides,
                rows,
                cols,
            });
        }
        dims[i] = [r, c];
    }
    Ok(dims)
}

fn he_normal<R: Real>(rng: &mut impl Rng, fan_in: usize, count: usize) -> Vec<R> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    (0..count).map(|_| R::of_f64(normal.sample(rng))).collect()
}

impl<R: Real> FcnModel<R> {
    /// Fan-in scaled Gaussian weights, zero biases, unit BN scale.
    pub fn init(shape: &FcnShape, rng: &mut impl Rng) -> Result<Self> {
        if shape.classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classes, got {}",
                shape.classes
            )));
        }
        let mut blocks = Vec::with_capacity(3);
        let mut in_ch = shape.in_channels;
        for i in 0..3 {
            let k = KERNELS[i];
            let out = shape.filters[i];
            let fan_in = in_ch * k * k;
            let conv = Conv2d::new(
                in_ch,
                out,
                [k, k],
                shape.strides[i],
                Padding::Same,
                he_normal(rng, fan_in, out * fan_in),
                vec![R::zero(); out],
            )?;
            blocks.push(ConvBlock {
                conv,
                bn: BatchNorm2d::new(out),
            });
            in_ch = out;
        }
        let head = Dense::new(
            in_ch,
            shape.classes,
            he_normal(rng, in_ch, in_ch * shape.classes),
            vec![R::zero(); shape.classes],
        )?;
        Ok(FcnModel { blocks, head })
    }

    pub fn shape(&self) -> FcnShape {
        FcnShape {
            in_channels: self.blocks[0].conv.in_channels,
            filters: [0, 1, 2].map(|i| self.blocks[i].conv.out_channels),
            strides: [0, 1, 2].map(|i| self.blocks[i].conv.stride),
            classes: self.head.classes,
        }
    }

    pub fn classes(&self) -> usize {
        self.head.classes
    }

    pub fn forward(&self, x: &Tensor4<R>, mode: Mode) -> Result<ForwardPass<R>> {
        let shape = self.shape();
        if x.channels() != shape.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "model takes {} channels, image has {}",
                shape.in_channels,
                x.channels()
            )));
        }
        feature_dims(x.rows(), x.cols(), shape.strides)?;
        let mut caches = Vec::with_capacity(3);
        let mut act: Option<Tensor4<R>> = None;
        for block in &self.blocks {
            let input = act.as_ref().unwrap_or(x);
            let (z, conv) = block.conv.forward(input)?;
            let (normalized, bn) = block.bn.forward(&z, mode)?;
            act = Some(relu_forward(&normalized));
            caches.push(BlockCache {
                conv,
                bn,
                normalized,
            });
        }
        let features = act.expect("three blocks");
        let pooled = gap_forward(&features);
        let logits = self.head.forward(&pooled)?;
        Ok(ForwardPass {
            caches,
            features,
            pooled,
            logits,
            classes: self.head.classes,
        })
    }

    /// Inference-mode probabilities.
    pub fn predict_proba(&self, x: &Tensor4<R>) -> Result<Vec<Vec<f64>>> {
        Ok(self.forward(x, Mode::Inference)?.probabilities())
    }

    /// Gradient of a scalar function of the pooled features' logits with
    /// respect to the last block's feature maps.
    pub fn feature_gradient(&self, pass: &ForwardPass<R>, dlogits: &[R]) -> Result<Tensor4<R>> {
        let head = self.head.backward(&pass.pooled, dlogits)?;
        gap_backward(pass.features.shape(), &head.input)
    }

    /// Writes parameter gradients of the loss whose logit gradient is
    /// `dlogits` into every [`Param::grad`].
    pub fn backward(&mut self, pass: &ForwardPass<R>, dlogits: &[R]) -> Result<()> {
        let head = self.head.backward(&pass.pooled, dlogits)?;
        self.head.weight.grad = head.weight;
        self.head.bias.grad = head.bias;
        let mut upstream = gap_backward(pass.features.shape(), &head.input)?;
        for (i, block) in self.blocks.iter_mut().enumerate().rev() {
            let cache = &pass.caches[i];
            let d_norm = relu_backward(&cache.normalized, &upstream)?;
            let bn = block.bn.backward(&cache.bn, &d_norm)?;
            block.bn.gamma.grad = bn.gamma;
            block.bn.beta.grad = bn.beta;
            if i == 0 {
                let (w, b) = block.conv.backward_params(&cache.conv, &bn.input)?;
                block.conv.weight.grad = w;
                block.conv.bias.grad = b;
            } else {
                let g = block.conv.backward(&cache.conv, &bn.input)?;
                block.conv.weight.grad = g.weight;
                block.conv.bias.grad = g.bias;
                upstream = g.input;
            }
        }
        Ok(())
    }

    /// Folds the batch statistics of a training-mode pass into BN running stats.
    pub fn update_running_stats(&mut self, pass: &ForwardPass<R>) {
        for (block, cache) in self.blocks.iter_mut().zip(&pass.caches) {
            block.bn.update_running(&cache.bn);
        }
    }

    /// Every trainable parameter in a fixed order.
    pub fn params_mut(&mut self) -> Vec<&mut Param<R>> {
        let mut out = Vec::with_capacity(14);
        for block in &mut self.blocks {
            out.push(&mut block.conv.weight);
            out.push(&mut block.conv.bias);
            out.push(&mut block.bn.gamma);
            out.push(&mut block.bn.beta);
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    pub fn to_records(&self) -> Vec<LayerRecord> {
        let mut out = Vec::with_capacity(7);
        for block in &self.blocks {
            out.push(LayerRecord::conv(&block.conv));
            out.push(LayerRecord::batchnorm(&block.bn));
        }
        out.push(LayerRecord::dense(&self.head));
        out
    }

    pub fn from_records(records: &[LayerRecord]) -> Result<Self> {
        if records.len() != 7 {
            return Err(Error::InvalidArgument(format!(
                "an FCN checkpoint has 7 layers, found {}",
                records.len()
            )));
        }
        let mut blocks = Vec::with_capacity(3);
        for pair in records[..6].chunks(2) {
            blocks.push(ConvBlock {
                conv: pair[0].to_conv()?,
                bn: pair[1].to_batchnorm()?,
            });
        }
        let head = records[6].to_dense()?;
        let model = FcnModel { blocks, head };
        let shape = model.shape();
        let mut in_ch = shape.in_channels;
        for (i, block) in model.blocks.iter().enumerate() {
            if block.conv.in_channels != in_ch || block.bn.channels != shape.filters[i] {
                return Err(Error::ShapeMismatch(format!(
                    "block {} does not chain from {in_ch} channels",
                    i + 1
                )));
            }
            in_ch = shape.filters[i];
        }
        if model.head.features != in_ch {
            return Err(Error::ShapeMismatch("dense head width".into()));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::{numeric_gradient, relative_error};
    use crate::nn::batch_cross_entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(seed: u64) -> (FcnModel<f64>, Tensor4<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = FcnShape {
            in_channels: 2,
            filters: [3, 4, 3],
            strides: [2, 2, 1],
            classes: 3,
        };
        let model = FcnModel::init(&shape, &mut rng).unwrap();
        let data = (0..3 * 2 * 7 * 9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Tensor4::from_vec([3, 2, 7, 9], data).unwrap();
        (model, x, vec![0, 2, 1])
    }

    #[test]
    fn feature_dims_follow_ceil() {
        assert_eq!(feature_dims(31, 62, [8, 5, 3]).unwrap(), [[4, 8], [1, 2], [1, 1]]);
        assert_eq!(feature_dims(31, 62, [3, 2, 1]).unwrap(), [[11, 21], [6, 11], [6, 11]]);
        assert!(feature_dims(31, 62, [0, 1, 1]).is_err());
    }

    #[test]
    fn end_to_end_gradient_matches_finite_differences() {
        let (mut model, x, targets) = tiny(11);
        let pass = model.forward(&x, Mode::Training).unwrap();
        let (_, dlogits) = batch_cross_entropy(&pass.logits, 3, &targets).unwrap();
        model.backward(&pass, &dlogits).unwrap();
        let loss = |m: &FcnModel<f64>| {
            let p = m.forward(&x, Mode::Training).unwrap();
            batch_cross_entropy(&p.logits, 3, &targets).unwrap().0
        };
        let n_params = model.params_mut().len();
        for idx in 0..n_params {
            let (value, grad) = {
                let p = &model.params_mut()[idx];
                (p.value.clone(), p.grad.clone())
            };
            let num = numeric_gradient(&value, |v| {
                let mut m = model.clone();
                m.params_mut()[idx].value.copy_from_slice(v);
                loss(&m)
            });
            for (a, n) in grad.iter().zip(&num) {
                assert!(relative_error(*a, *n) < 1e-4, "param {idx}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn records_round_trip() {
        let (model, x, _) = tiny(3);
        let back = FcnModel::<f64>::from_records(&model.to_records()).unwrap();
        assert_eq!(back.forward(&x, Mode::Inference).unwrap().logits, model.forward(&x, Mode::Inference).unwrap().logits);
    }

    #[test]
    fn wrong_channel_count() {
        let (model, _, _) = tiny(4);
        assert!(matches!(
            model.forward(&Tensor4::zeros([2, 1, 7, 9]), Mode::Inference),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn inference_is_batch_independent() {
        let (model, x, _) = tiny(5);
        let full = model.predict_proba(&x).unwrap();
        for b in 0..x.batch() {
            let one = Tensor4::from_vec([1, 2, 7, 9], x.sample(b).to_vec()).unwrap();
            let p = model.predict_proba(&one).unwrap();
            for (a, c) in p[0].iter().zip(&full[b]) {
                assert!((a - c).abs() < 1e-12);
            }
        }
    }
}
