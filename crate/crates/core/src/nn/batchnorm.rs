use serde::{Deserialize, Serialize};

use super::{Param, Real, Tensor4};
use crate::error::{Error, Result};

/// Whether batch statistics or stored running statistics normalize the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Training,
    Inference,
}

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

/// Per-channel batch normalization over the batch and both spatial axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm2d<R> {
    pub channels: usize,
    pub gamma: Param<R>,
    pub beta: Param<R>,
    pub running_mean: Vec<R>,
    pub running_var: Vec<R>,
    pub epsilon: f64,
    /// Fraction of the old running statistic kept on each update.
    pub momentum: f64,
}

#[derive(Debug, Clone)]
pub struct BnCache<R> {
    mode: Mode,
    xhat: Tensor4<R>,
    inv_std: Vec<f64>,
    /// Batch mean and unbiased variance, training mode only.
    batch_stats: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnGrads<R> {
    pub input: Tensor4<R>,
    pub gamma: Vec<R>,
    pub beta: Vec<R>,
}

impl<R: Real> BatchNorm2d<R> {
    pub fn new(channels: usize) -> Self {
        BatchNorm2d {
            channels,
            gamma: Param::new(vec![R::one(); channels]),
            beta: Param::new(vec![R::zero(); channels]),
            running_mean: vec![R::zero(); channels],
            running_var: vec![R::one(); channels],
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
        }
    }

    /// Normalizes `x`. Training-mode batch statistics are returned in the
    /// cache; [`BatchNorm2d::update_running`] folds them into the running
    /// statistics.
    pub fn forward(&self, x: &Tensor4<R>, mode: Mode) -> Result<(Tensor4<R>, BnCache<R>)> {
        let [batch, ch, _, _] = x.shape();
        if ch != self.channels {
            return Err(Error::ShapeMismatch(format!(
                "batch norm expects {} channels, got {ch}",
                self.channels
            )));
        }
        let plane = x.plane();
        let mut batch_stats = None;
        let (mean, var) = match mode {
            Mode::Training => {
                if batch < 2 {
                    return Err(Error::DegenerateBatch(batch));
                }
                let count = (batch * plane) as f64;
                let mut mean = vec![0.0; ch];
                let mut var = vec![0.0; ch];
                let mut unbiased = vec![0.0; ch];
                for c in 0..ch {
                    let mut sum = 0.0;
                    for b in 0..batch {
                        sum += channel(x, b, c).iter().map(|v| v.as_f64()).sum::<f64>();
                    }
                    let mu = sum / count;
                    let mut sq = 0.0;
                    for b in 0..batch {
                        sq += channel(x, b, c)
                            .iter()
                            .map(|v| (v.as_f64() - mu).powi(2))
                            .sum::<f64>();
                    }
                    mean[c] = mu;
                    var[c] = sq / count;
                    unbiased[c] = sq / (count - 1.0);
                }
                batch_stats = Some((mean.clone(), unbiased));
                (mean, var)
            }
            Mode::Inference => (
                self.running_mean.iter().map(|v| v.as_f64()).collect(),
                self.running_var.iter().map(|v| v.as_f64()).collect(),
            ),
        };
        let inv_std: Vec<f64> = var
            .iter()
            .map(|v| 1.0 / (v + self.epsilon).sqrt())
            .collect();

        let mut xhat = Tensor4::zeros(x.shape());
        let mut out = Tensor4::zeros(x.shape());
        for b in 0..batch {
            for c in 0..ch {
                let (g, be) = (self.gamma.value[c], self.beta.value[c]);
                let (mu, is) = (mean[c], inv_std[c]);
                let src = channel(x, b, c);
                let off = (b * ch + c) * plane;
                for p in 0..plane {
                    let h = R::of_f64((src[p].as_f64() - mu) * is);
                    xhat.data_mut()[off + p] = h;
                    out.data_mut()[off + p] = g * h + be;
                }
            }
        }
        Ok((
            out,
            BnCache {
                mode,
                xhat,
                inv_std,
                batch_stats,
            },
        ))
    }

    /// Exponential moving average update from a training-mode forward pass.
    pub fn update_running(&mut self, cache: &BnCache<R>) {
        if let Some((mean, var)) = &cache.batch_stats {
            let m = self.momentum;
            for c in 0..self.channels {
                self.running_mean[c] = R::of_f64(m * self.running_mean[c].as_f64() + (1.0 - m) * mean[c]);
                self.running_var[c] = R::of_f64(m * self.running_var[c].as_f64() + (1.0 - m) * var[c]);
            }
        }
    }

    pub fn backward(&self, cache: &BnCache<R>, dy: &Tensor4<R>) -> Result<BnGrads<R>> {
        dy.expect_shape(cache.xhat.shape(), "batch norm upstream gradient")?;
        let [batch, ch, _, _] = dy.shape();
        let plane = dy.plane();
        let count = (batch * plane) as f64;
        let mut gamma = vec![R::zero(); ch];
        let mut beta = vec![R::zero(); ch];
        let mut input = Tensor4::zeros(dy.shape());
        for c in 0..ch {
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for b in 0..batch {
                let g = channel(dy, b, c);
                let h = channel(&cache.xhat, b, c);
                for p in 0..plane {
                    sum_dy += g[p].as_f64();
                    sum_dy_xhat += g[p].as_f64() * h[p].as_f64();
                }
            }
            gamma[c] = R::of_f64(sum_dy_xhat);
            beta[c] = R::of_f64(sum_dy);
            let scale = self.gamma.value[c].as_f64() * cache.inv_std[c];
            for b in 0..batch {
                let off = (b * ch + c) * plane;
                let g = channel(dy, b, c);
                let h = channel(&cache.xhat, b, c);
                let dst = &mut input.data_mut()[off..off + plane];
                match cache.mode {
                    Mode::Training => {
                        for p in 0..plane {
                            let v = g[p].as_f64()
                                - sum_dy / count
                                - h[p].as_f64() * sum_dy_xhat / count;
                            dst[p] = R::of_f64(scale * v);
                        }
                    }
                    Mode::Inference => {
                        for p in 0..plane {
                            dst[p] = R::of_f64(scale * g[p].as_f64());
                        }
                    }
                }
            }
        }
        Ok(BnGrads { input, gamma, beta })
    }
}

fn channel<R: Real>(x: &Tensor4<R>, b: usize, c: usize) -> &[R] {
    let plane = x.plane();
    &x.sample(b)[c * plane..(c + 1) * plane]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(seed: u64, shape: [usize; 4]) -> Tensor4<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = shape.iter().product();
        Tensor4::from_vec(shape, (0..n).map(|_| rng.random_range(-3.0..5.0)).collect()).unwrap()
    }

    #[test]
    fn training_output_is_standardized() {
        let x = random_tensor(1, [4, 3, 5, 6]);
        let bn = BatchNorm2d::<f64>::new(3);
        let (y, _) = bn.forward(&x, Mode::Training).unwrap();
        for c in 0..3 {
            let vals: Vec<f64> = (0..4).flat_map(|b| channel(&y, b, c).to_vec()).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(m.abs() < 1e-6);
            // epsilon shrinks the variance slightly below 1.
            assert!((v - 1.0).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn running_stats_move_toward_batch_stats() {
        let x = random_tensor(2, [3, 1, 4, 4]);
        let mut bn = BatchNorm2d::<f64>::new(1);
        let (_, cache) = bn.forward(&x, Mode::Training).unwrap();
        bn.update_running(&cache);
        let mean = x.data().iter().sum::<f64>() / 48.0;
        assert!((bn.running_mean[0] - 0.1 * mean).abs() < 1e-12);
        assert!(bn.running_var[0] >= 0.0);
    }

    #[test]
    fn fresh_inference_is_near_identity() {
        let x = random_tensor(3, [2, 2, 3, 3]);
        let bn = BatchNorm2d::<f64>::new(2);
        let (y, _) = bn.forward(&x, Mode::Inference).unwrap();
        let scale = 1.0 / (1.0 + BN_EPSILON).sqrt();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b * scale).abs() < 1e-12);
        }
        assert_eq!(bn.running_mean, vec![0.0, 0.0]);
    }

    #[test]
    fn single_sample_training_is_rejected() {
        let bn = BatchNorm2d::<f64>::new(1);
        assert!(matches!(
            bn.forward(&Tensor4::zeros([1, 1, 4, 4]), Mode::Training),
            Err(Error::DegenerateBatch(1))
        ));
        assert!(bn.forward(&Tensor4::zeros([1, 1, 4, 4]), Mode::Inference).is_ok());
    }
}
