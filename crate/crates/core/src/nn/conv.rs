//! Strided 2-D cross-correlation lowered to a matrix product (im2col).

use serde::{Deserialize, Serialize};

use super::{Param, Real, Tensor4};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero padding chosen so that the output has `ceil(in / stride)` cells.
    Same,
    /// No padding; the kernel must fit inside the input.
    Valid,
}

/// Output length and leading pad along one axis.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: Padding) -> (usize, usize) {
    match padding {
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out.saturating_sub(1)) * stride + kernel).saturating_sub(input);
            (out, total / 2)
        }
        Padding::Valid => {
            if input < kernel {
                (0, 0)
            } else {
                ((input - kernel) / stride + 1, 0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<R> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: [usize; 2],
    pub stride: usize,
    pub padding: Padding,
    /// `(out, in, kh, kw)` row-major.
    pub weight: Param<R>,
    pub bias: Param<R>,
}

/// What the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ConvCache<R> {
    input_shape: [usize; 4],
    out_dims: [usize; 2],
    pads: [usize; 2],
    /// `(in * kh * kw) x (batch * out_rows * out_cols)` lowered input.
    cols: Vec<R>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<R> {
    pub input: Tensor4<R>,
    pub weight: Vec<R>,
    pub bias: Vec<R>,
}

impl<R: Real> Conv2d<R> {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: [usize; 2],
        stride: usize,
        padding: Padding,
        weight: Vec<R>,
        bias: Vec<R>,
    ) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel[0] == 0 || kernel[1] == 0 || stride == 0
        {
            return Err(Error::InvalidArgument(format!(
                "conv dims must be positive: {in_channels}->{out_channels}, kernel {kernel:?}, stride {stride}"
            )));
        }
        if weight.len() != out_channels * in_channels * kernel[0] * kernel[1]
            || bias.len() != out_channels
        {
            return Err(Error::ShapeMismatch(format!(
                "conv parameters: {} weights, {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            weight: Param::new(weight),
            bias: Param::new(bias),
        })
    }

    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel[0] * self.kernel[1]
    }

    /// Output spatial dims for an input of `rows x cols`.
    pub fn output_dims(&self, rows: usize, cols: usize) -> [usize; 2] {
        [
            conv_out_dim(rows, self.kernel[0], self.stride, self.padding).0,
            conv_out_dim(cols, self.kernel[1], self.stride, self.padding).0,
        ]
    }

    pub fn forward(&self, x: &Tensor4<R>) -> Result<(Tensor4<R>, ConvCache<R>)> {
        let [batch, ch, rows, cols] = x.shape();
        if ch != self.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input channels, got {ch}",
                self.in_channels
            )));
        }
        let (out_r, pad_r) = conv_out_dim(rows, self.kernel[0], self.stride, self.padding);
        let (out_c, pad_c) = conv_out_dim(cols, self.kernel[1], self.stride, self.padding);
        if out_r == 0 || out_c == 0 {
            return Err(Error::ShapeMismatch(format!(
                "kernel {:?} does not fit a {rows}x{cols} input",
                self.kernel
            )));
        }
        let positions = out_r * out_c;
        let width = batch * positions;
        let k = self.patch_len();
        let mut lowered = vec![R::zero(); k * width];
        let [kh, kw] = self.kernel;
        let stride = self.stride;
        for b in 0..batch {
            let sample = x.sample(b);
            for c in 0..ch {
                let plane = &sample[c * rows * cols..(c + 1) * rows * cols];
                for ki in 0..kh {
                    for kj in 0..kw {
                        let row = (c * kh + ki) * kw + kj;
                        let dst = &mut lowered[row * width + b * positions..][..positions];
                        for oi in 0..out_r {
                            let ii = (oi * stride + ki) as isize - pad_r as isize;
                            if ii < 0 || ii >= rows as isize {
                                continue;
                            }
                            let src = &plane[ii as usize * cols..(ii as usize + 1) * cols];
                            let dst_row = &mut dst[oi * out_c..(oi + 1) * out_c];
                            for (oj, d) in dst_row.iter_mut().enumerate() {
                                let jj = (oj * stride + kj) as isize - pad_c as isize;
                                if jj >= 0 && jj < cols as isize {
                                    *d = src[jj as usize];
                                }
                            }
                        }
                    }
                }
            }
        }

        let oc = self.out_channels;
        let mut product = vec![R::zero(); oc * width];
        R::gemm(
            oc,
            k,
            width,
            R::one(),
            &self.weight.value,
            k as isize,
            1,
            &lowered,
            width as isize,
            1,
            R::zero(),
            &mut product,
            width as isize,
            1,
        );

        let mut out = Tensor4::zeros([batch, oc, out_r, out_c]);
        for b in 0..batch {
            let dst = out.sample_mut(b);
            for o in 0..oc {
                let bias = self.bias.value[o];
                let src = &product[o * width + b * positions..][..positions];
                for (d, &s) in dst[o * positions..(o + 1) * positions].iter_mut().zip(src) {
                    *d = s + bias;
                }
            }
        }
        let cache = ConvCache {
            input_shape: x.shape(),
            out_dims: [out_r, out_c],
            pads: [pad_r, pad_c],
            cols: lowered,
        };
        Ok((out, cache))
    }

    pub fn backward(&self, cache: &ConvCache<R>, dy: &Tensor4<R>) -> Result<ConvGrads<R>> {
        let (input, weight, bias) = self.backward_impl(cache, dy, true)?;
        Ok(ConvGrads {
            input: input.expect("input gradient requested"),
            weight,
            bias,
        })
    }

    /// Weight and bias gradients only, skipping the input gradient.
    pub fn backward_params(&self, cache: &ConvCache<R>, dy: &Tensor4<R>) -> Result<(Vec<R>, Vec<R>)> {
        let (_, weight, bias) = self.backward_impl(cache, dy, false)?;
        Ok((weight, bias))
    }

    #[allow(clippy::type_complexity)]
    fn backward_impl(
        &self,
        cache: &ConvCache<R>,
        dy: &Tensor4<R>,
        want_input: bool,
    ) -> Result<(Option<Tensor4<R>>, Vec<R>, Vec<R>)> {
        let [batch, ch, rows, cols] = cache.input_shape;
        let [out_r, out_c] = cache.out_dims;
        let oc = self.out_channels;
        dy.expect_shape([batch, oc, out_r, out_c], "conv upstream gradient")?;
        let positions = out_r * out_c;
        let width = batch * positions;
        let k = self.patch_len();

        // (oc, batch * positions) view of the upstream gradient.
        let mut dy_mat = vec![R::zero(); oc * width];
        let mut bias = vec![R::zero(); oc];
        for b in 0..batch {
            let src = dy.sample(b);
            for o in 0..oc {
                let s = &src[o * positions..(o + 1) * positions];
                dy_mat[o * width + b * positions..][..positions].copy_from_slice(s);
                bias[o] = bias[o] + s.iter().copied().sum::<R>();
            }
        }

        let mut weight = vec![R::zero(); oc * k];
        R::gemm(
            oc,
            width,
            k,
            R::one(),
            &dy_mat,
            width as isize,
            1,
            &cache.cols,
            1,
            width as isize,
            R::zero(),
            &mut weight,
            k as isize,
            1,
        );

        if !want_input {
            return Ok((None, weight, bias));
        }
        let mut dcols = vec![R::zero(); k * width];
        R::gemm(
            k,
            oc,
            width,
            R::one(),
            &self.weight.value,
            1,
            k as isize,
            &dy_mat,
            width as isize,
            1,
            R::zero(),
            &mut dcols,
            width as isize,
            1,
        );

        let mut input = Tensor4::zeros([batch, ch, rows, cols]);
        let [kh, kw] = self.kernel;
        let [pad_r, pad_c] = cache.pads;
        let stride = self.stride;
        for b in 0..batch {
            let sample = input.sample_mut(b);
            for c in 0..ch {
                let plane = &mut sample[c * rows * cols..(c + 1) * rows * cols];
                for ki in 0..kh {
                    for kj in 0..kw {
                        let row = (c * kh + ki) * kw + kj;
                        let src = &dcols[row * width + b * positions..][..positions];
                        for oi in 0..out_r {
                            let ii = (oi * stride + ki) as isize - pad_r as isize;
                            if ii < 0 || ii >= rows as isize {
                                continue;
                            }
                            let dst = &mut plane[ii as usize * cols..(ii as usize + 1) * cols];
                            for oj in 0..out_c {
                                let jj = (oj * stride + kj) as isize - pad_c as isize;
                                if jj >= 0 && jj < cols as isize {
                                    dst[jj as usize] = dst[jj as usize] + src[oi * out_c + oj];
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok((Some(input), weight, bias))
    }
}
