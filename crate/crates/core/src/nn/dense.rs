use super::{Param, Real};
use crate::error::{Error, Result};

/// Affine map `W h + b` from `features` inputs to `classes` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<R> {
    pub features: usize,
    pub classes: usize,
    /// `(classes, features)` row-major.
    pub weight: Param<R>,
    pub bias: Param<R>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads<R> {
    pub input: Vec<R>,
    pub weight: Vec<R>,
    pub bias: Vec<R>,
}

impl<R: Real> Dense<R> {
    pub fn new(features: usize, classes: usize, weight: Vec<R>, bias: Vec<R>) -> Result<Self> {
        if weight.len() != features * classes || bias.len() != classes {
            return Err(Error::ShapeMismatch(format!(
                "dense {features}->{classes} with {} weights, {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Dense {
            features,
            classes,
            weight: Param::new(weight),
            bias: Param::new(bias),
        })
    }

    /// `h` is `batch x features`; returns `batch x classes` logits.
    pub fn forward(&self, h: &[R]) -> Result<Vec<R>> {
        let batch = self.batch_of(h)?;
        let mut out = vec![R::zero(); batch * self.classes];
        for row in out.chunks_mut(self.classes) {
            row.copy_from_slice(&self.bias.value);
        }
        R::gemm(
            batch,
            self.features,
            self.classes,
            R::one(),
            h,
            self.features as isize,
            1,
            &self.weight.value,
            1,
            self.features as isize,
            R::one(),
            &mut out,
            self.classes as isize,
            1,
        );
        Ok(out)
    }

    pub fn backward(&self, h: &[R], dlogits: &[R]) -> Result<DenseGrads<R>> {
        let batch = self.batch_of(h)?;
        if dlogits.len() != batch * self.classes {
            return Err(Error::ShapeMismatch(format!(
                "dense upstream gradient has {} entries, expected {}",
                dlogits.len(),
                batch * self.classes
            )));
        }
        let (f, c) = (self.features, self.classes);
        let mut input = vec![R::zero(); batch * f];
        R::gemm(
            batch, c, f, R::one(), dlogits, c as isize, 1, &self.weight.value, f as isize, 1,
            R::zero(), &mut input, f as isize, 1,
        );
        let mut weight = vec![R::zero(); c * f];
        R::gemm(
            c, batch, f, R::one(), dlogits, 1, c as isize, h, f as isize, 1, R::zero(),
            &mut weight, f as isize, 1,
        );
        let mut bias = vec![R::zero(); c];
        for row in dlogits.chunks(c) {
            for (b, &g) in bias.iter_mut().zip(row) {
                *b = *b + g;
            }
        }
        Ok(DenseGrads {
            input,
            weight,
            bias,
        })
    }

    fn batch_of(&self, h: &[R]) -> Result<usize> {
        if !h.len().is_multiple_of(self.features) {
            return Err(Error::ShapeMismatch(format!(
                "{} inputs is not a multiple of {} features",
                h.len(),
                self.features
            )));
        }
        Ok(h.len() / self.features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_by_hand() {
        let d = Dense::new(2, 3, vec![1.0, 2.0, 0.0, -1.0, 0.5, 0.5], vec![0.0, 1.0, -1.0]).unwrap();
        let y = d.forward(&[1.0, 1.0, 2.0, 0.0]).unwrap();
        assert_eq!(y, vec![3.0, 0.0, 0.0, 2.0, 1.0, 0.0]);
        assert!(d.forward(&[1.0, 2.0, 3.0]).is_err());
    }
}
