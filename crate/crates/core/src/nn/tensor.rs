use super::Real;
use crate::error::{Error, Result};

/// Dense `(batch, channel, row, column)` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<R> {
    shape: [usize; 4],
    data: Vec<R>,
}

impl<R: Real> Tensor4<R> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Tensor4 {
            shape,
            data: vec![R::zero(); shape.iter().product()],
        }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<R>) -> Result<Self> {
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Tensor4 { shape, data })
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn rows(&self) -> usize {
        self.shape[2]
    }

    pub fn cols(&self) -> usize {
        self.shape[3]
    }

    /// Elements in one `(row, column)` plane.
    pub fn plane(&self) -> usize {
        self.shape[2] * self.shape[3]
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<R> {
        self.data
    }

    /// All channels of batch element `b`.
    pub fn sample(&self, b: usize) -> &[R] {
        let len = self.shape[1] * self.plane();
        &self.data[b * len..(b + 1) * len]
    }

    pub fn sample_mut(&mut self, b: usize) -> &mut [R] {
        let len = self.shape[1] * self.plane();
        &mut self.data[b * len..(b + 1) * len]
    }

    pub fn at(&self, b: usize, c: usize, i: usize, j: usize) -> R {
        self.data[self.offset(b, c, i, j)]
    }

    pub fn at_mut(&mut self, b: usize, c: usize, i: usize, j: usize) -> &mut R {
        let o = self.offset(b, c, i, j);
        &mut self.data[o]
    }

    fn offset(&self, b: usize, c: usize, i: usize, j: usize) -> usize {
        ((b * self.shape[1] + c) * self.shape[2] + i) * self.shape[3] + j
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<S: Real>(&self) -> Tensor4<S> {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|v| S::of_f64(v.as_f64())).collect(),
        }
    }

    pub(crate) fn expect_shape(&self, shape: [usize; 4], what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::ShapeMismatch(format!(
                "{what}: expected {:?}, got {:?}",
                shape, self.shape
            )));
        }
        Ok(())
    }
}

/// A trainable parameter and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<R> {
    pub value: Vec<R>,
    pub grad: Vec<R>,
}

impl<R: Real> Param<R> {
    pub fn new(value: Vec<R>) -> Self {
        let grad = vec![R::zero(); value.len()];
        Param { value, grad }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.clear();
        self.grad.resize(self.value.len(), R::zero());
    }
}
