//! Central finite-difference checks of every hand-written backward pass.
//!
//! Each check draws a random layer and input, contracts the layer output with
//! a random probe tensor to get a scalar loss, and compares the analytic
//! gradient of that loss against `(f(x + h) - f(x - h)) / 2h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    batch_cross_entropy, gap_backward, gap_forward, relu_backward, relu_forward, BatchNorm2d,
    Conv2d, Dense, Mode, Padding, Tensor4,
};
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Denominator floor of the relative error, so that near-zero entries are
/// compared absolutely.
pub const FD_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct GradCheck {
    pub layer: &'static str,
    pub seed: u64,
    pub shape: String,
    pub entries: usize,
    pub max_rel_error: f64,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_error < FD_TOLERANCE
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR)
}

/// Numeric gradient of `f` at `x` by central differences.
pub fn numeric_gradient(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + FD_STEP;
            let up = f(&probe);
            probe[i] = orig - FD_STEP;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn max_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_conv(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.random_range(1..=3);
    let ch = rng.random_range(1..=3);
    let oc = rng.random_range(1..=3);
    let kernel = [3, 5, 8][rng.random_range(0..3)].min(rng.random_range(1..=8));
    let stride = [1, 2, 3, 4, 5, 8][rng.random_range(0..6)];
    let rows = rng.random_range(2..=10);
    let cols = rng.random_range(2..=10);
    let weight = uniform(&mut rng, oc * ch * kernel * kernel);
    let bias = uniform(&mut rng, oc);
    let conv = Conv2d::new(ch, oc, [kernel, kernel], stride, Padding::Same, weight, bias)?;
    let x = Tensor4::from_vec([batch, ch, rows, cols], uniform(&mut rng, batch * ch * rows * cols))?;
    let (y, cache) = conv.forward(&x)?;
    let probe = uniform(&mut rng, y.data().len());
    let grads = conv.backward(&cache, &Tensor4::from_vec(y.shape(), probe.clone())?)?;

    let loss_x = |v: &[f64]| {
        let t = Tensor4::from_vec(x.shape(), v.to_vec()).unwrap();
        dot(conv.forward(&t).unwrap().0.data(), &probe)
    };
    let mut err = max_error(grads.input.data(), &numeric_gradient(x.data(), loss_x));
    let loss_w = |v: &[f64]| {
        let mut c = conv.clone();
        c.weight.value.copy_from_slice(v);
        dot(c.forward(&x).unwrap().0.data(), &probe)
    };
    err = err.max(max_error(&grads.weight, &numeric_gradient(&conv.weight.value, loss_w)));
    let loss_b = |v: &[f64]| {
        let mut c = conv.clone();
        c.bias.value.copy_from_slice(v);
        dot(c.forward(&x).unwrap().0.data(), &probe)
    };
    err = err.max(max_error(&grads.bias, &numeric_gradient(&conv.bias.value, loss_b)));
    Ok(GradCheck {
        layer: "conv2d",
        seed,
        shape: format!("x {:?}, k {kernel}, stride {stride}, out {oc}", x.shape()),
        entries: x.data().len() + conv.weight.len() + conv.bias.len(),
        max_rel_error: err,
    })
}

pub fn check_batchnorm(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.random_range(2..=4);
    let ch = rng.random_range(1..=3);
    let rows = rng.random_range(1..=4);
    let cols = rng.random_range(1..=4);
    let mut bn = BatchNorm2d::<f64>::new(ch);
    bn.gamma.value = uniform(&mut rng, ch).iter().map(|g| g + 1.5).collect();
    bn.beta.value = uniform(&mut rng, ch);
    let x = Tensor4::from_vec(
        [batch, ch, rows, cols],
        uniform(&mut rng, batch * ch * rows * cols)
            .iter()
            .map(|v| 2.0 * v + 0.5)
            .collect(),
    )?;
    let mut err = 0.0f64;
    for mode in [Mode::Training, Mode::Inference] {
        if mode == Mode::Inference {
            bn.running_mean = uniform(&mut rng, ch);
            bn.running_var = uniform(&mut rng, ch).iter().map(|v| v + 1.5).collect();
        }
        let (y, cache) = bn.forward(&x, mode)?;
        let probe = uniform(&mut rng, y.data().len());
        let grads = bn.backward(&cache, &Tensor4::from_vec(y.shape(), probe.clone())?)?;
        let loss_x = |v: &[f64]| {
            let t = Tensor4::from_vec(x.shape(), v.to_vec()).unwrap();
            dot(bn.forward(&t, mode).unwrap().0.data(), &probe)
        };
        err = err.max(max_error(grads.input.data(), &numeric_gradient(x.data(), loss_x)));
        let loss_g = |v: &[f64]| {
            let mut b = bn.clone();
            b.gamma.value.copy_from_slice(v);
            dot(b.forward(&x, mode).unwrap().0.data(), &probe)
        };
        err = err.max(max_error(&grads.gamma, &numeric_gradient(&bn.gamma.value, loss_g)));
        let loss_b = |v: &[f64]| {
            let mut b = bn.clone();
            b.beta.value.copy_from_slice(v);
            dot(b.forward(&x, mode).unwrap().0.data(), &probe)
        };
        err = err.max(max_error(&grads.beta, &numeric_gradient(&bn.beta.value, loss_b)));
    }
    Ok(GradCheck {
        layer: "batchnorm",
        seed,
        shape: format!("x {:?}", x.shape()),
        entries: 2 * (x.data().len() + 2 * ch),
        max_rel_error: err,
    })
}

pub fn check_relu(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [
        rng.random_range(1..=3),
        rng.random_range(1..=3),
        rng.random_range(1..=5),
        rng.random_range(1..=5),
    ];
    let n: usize = shape.iter().product();
    // Keep samples away from the kink at 0.
    let values = uniform(&mut rng, n)
        .into_iter()
        .map(|v| if v.abs() < 0.05 { v.signum() * 0.05 + v } else { v })
        .collect();
    let x = Tensor4::from_vec(shape, values)?;
    let probe = uniform(&mut rng, n);
    let dx = relu_backward(&x, &Tensor4::from_vec(shape, probe.clone())?)?;
    let num = numeric_gradient(x.data(), |v| {
        dot(relu_forward(&Tensor4::from_vec(shape, v.to_vec()).unwrap()).data(), &probe)
    });
    Ok(GradCheck {
        layer: "relu",
        seed,
        shape: format!("x {shape:?}"),
        entries: n,
        max_rel_error: max_error(dx.data(), &num),
    })
}

pub fn check_gap(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [
        rng.random_range(1..=3),
        rng.random_range(1..=4),
        rng.random_range(1..=6),
        rng.random_range(1..=6),
    ];
    let n: usize = shape.iter().product();
    let x = Tensor4::from_vec(shape, uniform(&mut rng, n))?;
    let probe = uniform(&mut rng, shape[0] * shape[1]);
    let dx = gap_backward(shape, &probe)?;
    let num = numeric_gradient(x.data(), |v| {
        dot(&gap_forward(&Tensor4::from_vec(shape, v.to_vec()).unwrap()), &probe)
    });
    Ok(GradCheck {
        layer: "gap",
        seed,
        shape: format!("x {shape:?}"),
        entries: n,
        max_rel_error: max_error(dx.data(), &num),
    })
}

pub fn check_dense(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.random_range(1..=4);
    let features = rng.random_range(1..=8);
    let classes = rng.random_range(2..=5);
    let dense = Dense::new(
        features,
        classes,
        uniform(&mut rng, features * classes),
        uniform(&mut rng, classes),
    )?;
    let h = uniform(&mut rng, batch * features);
    let probe = uniform(&mut rng, batch * classes);
    let grads = dense.backward(&h, &probe)?;
    let mut err = max_error(
        &grads.input,
        &numeric_gradient(&h, |v| dot(&dense.forward(v).unwrap(), &probe)),
    );
    err = err.max(max_error(
        &grads.weight,
        &numeric_gradient(&dense.weight.value, |v| {
            let mut d = dense.clone();
            d.weight.value.copy_from_slice(v);
            dot(&d.forward(&h).unwrap(), &probe)
        }),
    ));
    err = err.max(max_error(
        &grads.bias,
        &numeric_gradient(&dense.bias.value, |v| {
            let mut d = dense.clone();
            d.bias.value.copy_from_slice(v);
            dot(&d.forward(&h).unwrap(), &probe)
        }),
    ));
    Ok(GradCheck {
        layer: "dense",
        seed,
        shape: format!("{batch}x{features} -> {classes}"),
        entries: h.len() + dense.weight.len() + classes,
        max_rel_error: err,
    })
}

pub fn check_softmax_ce(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.random_range(1..=4);
    let classes = rng.random_range(2..=6);
    let logits: Vec<f64> = uniform(&mut rng, batch * classes)
        .iter()
        .map(|v| 3.0 * v)
        .collect();
    let targets: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let (_, grad) = batch_cross_entropy(&logits, classes, &targets)?;
    let num = numeric_gradient(&logits, |v| {
        batch_cross_entropy(v, classes, &targets).unwrap().0
    });
    Ok(GradCheck {
        layer: "softmax_ce",
        seed,
        shape: format!("{batch}x{classes}"),
        entries: logits.len(),
        max_rel_error: max_error(&grad, &num),
    })
}

/// Runs every layer check for each seed in `seeds`.
pub fn run_suite(seeds: impl IntoIterator<Item = u64>) -> Result<Vec<GradCheck>> {
    let checks: [fn(u64) -> Result<GradCheck>; 6] = [
        check_conv,
        check_batchnorm,
        check_relu,
        check_gap,
        check_dense,
        check_softmax_ce,
    ];
    let mut out = Vec::new();
    for seed in seeds {
        for check in checks {
            out.push(check(seed)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_gradient_of_quadratic() {
        let g = numeric_gradient(&[1.0, -2.0], |v| v[0] * v[0] + 3.0 * v[1]);
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn suite_passes_on_a_few_seeds() {
        for r in run_suite(0..4).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
    }
}
