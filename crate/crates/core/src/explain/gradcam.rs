use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcn::FcnModel;
use crate::mdf::{MdfGeometry, MdfImage};
use crate::nn::{gap_forward, softmax, Mode, Real, Tensor4};

/// Which class score is differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassScore {
    /// Pre-softmax logit.
    #[default]
    Logit,
    /// Softmax probability.
    Probability,
}

impl std::str::FromStr for ClassScore {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(ClassScore::Logit),
            "probability" | "softmax" => Ok(ClassScore::Probability),
            _ => Err(Error::InvalidArgument(format!(
                "class score must be logit or probability, got {s:?}"
            ))),
        }
    }
}

/// A nonnegative heat map, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCamMap {
    pub class: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GradCamMap {
    /// Entry at 1-based `(row, col)`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[(row - 1) * self.cols + (col - 1)]
    }
}

/// A map on MDF coordinates that agrees with itself under the rotation involution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedMap {
    pub class: usize,
    pub geometry: MdfGeometry,
    pub data: Vec<f64>,
}

impl SymmetrizedMap {
    pub fn rows(&self) -> usize {
        self.geometry.rows()
    }

    pub fn cols(&self) -> usize {
        self.geometry.cols()
    }

    /// `L'(d, s)`, 1-based.
    pub fn get(&self, d: usize, s: usize) -> f64 {
        self.data[(d - 1) * self.cols() + (s - 1)]
    }
}

/// Coarse Grad-CAM and the quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCam {
    pub map: GradCamMap,
    pub score: ClassScore,
    /// Channel weights, the spatial mean of the score gradient.
    pub alpha: Vec<f64>,
    pub logits: Vec<f64>,
}

/// Score of `class` as a function of last-block feature maps of one sample.
pub fn head_score<R: Real>(
    model: &FcnModel<R>,
    features: &Tensor4<R>,
    class: usize,
    score: ClassScore,
) -> Result<f64> {
    check_class(class, model.classes())?;
    if features.batch() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "head score takes one sample, got {}",
            features.batch()
        )));
    }
    let logits: Vec<f64> = model
        .head
        .forward(&gap_forward(features))?
        .iter()
        .map(|v| v.as_f64())
        .collect();
    Ok(match score {
        ClassScore::Logit => logits[class],
        ClassScore::Probability => softmax(&logits)[class],
    })
}

fn check_class(class: usize, classes: usize) -> Result<()> {
    if class >= classes {
        return Err(Error::InvalidClass { class, classes });
    }
    Ok(())
}

/// Gradient of the class score with respect to the logits of one sample.
fn score_gradient(logits: &[f64], class: usize, score: ClassScore) -> Vec<f64> {
    match score {
        ClassScore::Logit => (0..logits.len()).map(|j| f64::from(j == class)).collect(),
        ClassScore::Probability => {
            let p = softmax(logits);
            (0..logits.len())
                .map(|j| p[class] * (f64::from(j == class) - p[j]))
                .collect()
        }
    }
}

/// Gradient of the class score with respect to the last block's feature maps.
pub fn feature_score_gradient<R: Real>(
    model: &FcnModel<R>,
    image: &MdfImage,
    class: usize,
    score: ClassScore,
) -> Result<(Tensor4<R>, Tensor4<R>, Vec<f64>)> {
    check_class(class, model.classes())?;
    let x = image_tensor::<R>(image)?;
    let pass = model.forward(&x, Mode::Inference)?;
    let logits: Vec<f64> = pass.logits.iter().map(|v| v.as_f64()).collect();
    let dlogits: Vec<R> = score_gradient(&logits, class, score)
        .into_iter()
        .map(R::of_f64)
        .collect();
    let grad = model.feature_gradient(&pass, &dlogits)?;
    Ok((pass.features, grad, logits))
}

/// Coarse Grad-CAM over the last block's spatial grid for class `class` (0-based).
pub fn grad_cam<R: Real>(
    model: &FcnModel<R>,
    image: &MdfImage,
    class: usize,
    score: ClassScore,
) -> Result<GradCam> {
    let (features, grad, logits) = feature_score_gradient(model, image, class, score)?;
    let [_, ch, rows, cols] = features.shape();
    let plane = rows * cols;
    let alpha: Vec<f64> = (0..ch)
        .map(|k| {
            grad.data()[k * plane..(k + 1) * plane]
                .iter()
                .map(|v| v.as_f64())
                .sum::<f64>()
                / plane as f64
        })
        .collect();
    let mut data = vec![0.0; plane];
    for (k, a) in alpha.iter().enumerate() {
        let fk = &features.data()[k * plane..(k + 1) * plane];
        for (acc, v) in data.iter_mut().zip(fk) {
            *acc += a * v.as_f64();
        }
    }
    for v in &mut data {
        *v = v.max(0.0);
    }
    Ok(GradCam {
        map: GradCamMap {
            class,
            rows,
            cols,
            data,
        },
        score,
        alpha,
        logits,
    })
}

/// A single image as a batch of one.
pub fn image_tensor<R: Real>(image: &MdfImage) -> Result<Tensor4<R>> {
    Tensor4::from_vec(
        [1, image.channels(), image.rows(), image.cols()],
        image.data.iter().map(|&v| R::of_f64(v)).collect(),
    )
}

/// Bilinear resampling with corner-aligned sample grids.
pub fn upsample(map: &GradCamMap, rows: usize, cols: usize) -> Result<GradCamMap> {
    if map.rows == 0 || map.cols == 0 || rows == 0 || cols == 0 {
        return Err(Error::ShapeMismatch(format!(
            "cannot resample {}x{} to {rows}x{cols}",
            map.rows, map.cols
        )));
    }
    let coord = |i: usize, from: usize, to: usize| -> (usize, usize, f64) {
        if to == 1 || from == 1 {
            return (0, 0, 0.0);
        }
        let pos = i as f64 * (from - 1) as f64 / (to - 1) as f64;
        let lo = (pos.floor() as usize).min(from - 1);
        let hi = (lo + 1).min(from - 1);
        (lo, hi, pos - lo as f64)
    };
    let at = |r: usize, c: usize| map.data[r * map.cols + c];
    let mut data = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let (r0, r1, fr) = coord(i, map.rows, rows);
        for j in 0..cols {
            let (c0, c1, fc) = coord(j, map.cols, cols);
            let top = lerp(at(r0, c0), at(r0, c1), fc);
            let bottom = lerp(at(r1, c0), at(r1, c1), fc);
            data.push(lerp(top, bottom, fr));
        }
    }
    Ok(GradCamMap {
        class: map.class,
        rows,
        cols,
        data,
    })
}

/// Exact at both ends and on equal endpoints.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// `L'(d, s) = (L(d, s) + L(d*, s*)) / 2` on an MDF-shaped map.
pub fn symmetrize(map: &GradCamMap, geometry: &MdfGeometry) -> Result<SymmetrizedMap> {
    if map.rows != geometry.rows() || map.cols != geometry.cols() {
        return Err(Error::ShapeMismatch(format!(
            "map is {}x{}, MDF grid is {}x{}",
            map.rows,
            map.cols,
            geometry.rows(),
            geometry.cols()
        )));
    }
    let mut data = Vec::with_capacity(map.data.len());
    for d in 1..=geometry.rows() {
        for s in 1..=geometry.cols() {
            let (pd, ps) = geometry.partner(d, s);
            data.push((map.get(d, s) + map.get(pd, ps)) / 2.0);
        }
    }
    Ok(SymmetrizedMap {
        class: map.class,
        geometry: *geometry,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcn::FcnShape;
    use crate::mdf::encode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_model(seed: u64) -> FcnModel<f64> {
        let shape = FcnShape {
            in_channels: 2,
            filters: [4, 6, 5],
            strides: [1, 1, 1],
            classes: 3,
        };
        FcnModel::init(&shape, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn toy_image() -> MdfImage {
        let x: Vec<f64> = (0..15).map(|t| ((t * 7 % 11) as f64 * 0.37).sin()).collect();
        encode(&x, 3).unwrap()
    }

    #[test]
    fn map_is_nonnegative_for_every_class_and_score() {
        let model = toy_model(1);
        for class in 0..3 {
            for score in [ClassScore::Logit, ClassScore::Probability] {
                let cam = grad_cam(&model, &toy_image(), class, score).unwrap();
                assert!(cam.map.data.iter().all(|&v| v >= 0.0));
                assert_eq!(cam.alpha.len(), 5);
            }
        }
    }

    #[test]
    fn invalid_class_is_rejected() {
        assert!(matches!(
            grad_cam(&toy_model(1), &toy_image(), 3, ClassScore::Logit),
            Err(Error::InvalidClass { class: 3, classes: 3 })
        ));
    }

    #[test]
    fn zero_last_block_gives_zero_map() {
        let mut model = toy_model(2);
        let last = &mut model.blocks[2];
        last.conv.weight.value.iter_mut().for_each(|w| *w = 0.0);
        last.conv.bias.value.iter_mut().for_each(|w| *w = 0.0);
        last.bn.beta.value.iter_mut().for_each(|w| *w = 0.0);
        let cam = grad_cam(&model, &toy_image(), 0, ClassScore::Logit).unwrap();
        assert!(cam.map.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn feature_gradient_matches_finite_differences() {
        let model = toy_model(3);
        for score in [ClassScore::Logit, ClassScore::Probability] {
            let (features, grad, _) = feature_score_gradient(&model, &toy_image(), 1, score).unwrap();
            let h = 1e-5;
            for idx in 0..features.data().len() {
                let mut plus = features.clone();
                plus.data_mut()[idx] += h;
                let mut minus = features.clone();
                minus.data_mut()[idx] -= h;
                let numeric = (head_score(&model, &plus, 1, score).unwrap()
                    - head_score(&model, &minus, 1, score).unwrap())
                    / (2.0 * h);
                let analytic = grad.data()[idx];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(rel < 1e-4, "{score:?} {idx}: {analytic} vs {numeric}");
            }
        }
    }

    fn coarse(rows: usize, cols: usize, data: Vec<f64>) -> GradCamMap {
        GradCamMap {
            class: 0,
            rows,
            cols,
            data,
        }
    }

    #[test]
    fn upsample_examples() {
        let c = upsample(&coarse(2, 3, vec![0.7; 6]), 5, 9).unwrap();
        assert!(c.data.iter().all(|&v| v == 0.7));
        let one = upsample(&coarse(1, 1, vec![2.5]), 3, 4).unwrap();
        assert_eq!(one.data, vec![2.5; 12]);
        let mid = upsample(&coarse(2, 2, vec![1.0, 2.0, 3.0, 6.0]), 3, 3).unwrap();
        assert_eq!(mid.get(2, 2), 3.0);
        assert_eq!(mid.get(1, 1), 1.0);
        assert_eq!(mid.get(3, 3), 6.0);
        assert_eq!(mid.get(1, 2), 1.5);
        assert!(upsample(&coarse(0, 0, vec![]), 3, 3).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let geom = MdfGeometry::new(7, 3).unwrap();
        let mut m = coarse(3, 5, vec![0.0; 15]);
        m.data[0] = 2.0;
        let s = symmetrize(&m, &geom).unwrap();
        assert_eq!(s.get(1, 1), 1.0);
        assert_eq!(s.get(3, 5), 1.0);
        assert_eq!(s.data.iter().sum::<f64>(), 2.0);

        let noisy = coarse(3, 5, (0..15).map(|i| (i as f64 * 1.3).cos().abs()).collect());
        let once = symmetrize(&noisy, &geom).unwrap();
        let as_map = coarse(3, 5, once.data.clone());
        assert_eq!(symmetrize(&as_map, &geom).unwrap().data, once.data);
        for d in 1..=3 {
            for s in 1..=5 {
                let (pd, ps) = geom.partner(d, s);
                assert_eq!(once.get(d, s), once.get(pd, ps));
            }
        }
        assert!(symmetrize(&coarse(2, 5, vec![0.0; 10]), &geom).is_err());
    }
}
