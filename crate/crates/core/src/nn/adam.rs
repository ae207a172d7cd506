use super::{Param, Real};
use crate::error::{Error, Result};

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<R> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Vec<R>>,
    second: Vec<Vec<R>>,
}

impl<R: Real> Adam<R> {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Applies one update to every parameter from its `grad` field.
    pub fn step(&mut self, params: &mut [&mut Param<R>]) -> Result<()> {
        if self.first.is_empty() {
            self.first = params.iter().map(|p| vec![R::zero(); p.len()]).collect();
            self.second = self.first.clone();
        }
        if self.first.len() != params.len()
            || self
                .first
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.len() != p.len() || p.grad.len() != p.len())
        {
            return Err(Error::ShapeMismatch(
                "adam state does not match the parameter list".into(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            for i in 0..p.value.len() {
                let g = p.grad[i].as_f64();
                let mi = b1 * m[i].as_f64() + (1.0 - b1) * g;
                let vi = b2 * v[i].as_f64() + (1.0 - b2) * g * g;
                m[i] = R::of_f64(mi);
                v[i] = R::of_f64(vi);
                let update = self.learning_rate * (mi / c1) / ((vi / c2).sqrt() + self.epsilon);
                p.value[i] = R::of_f64(p.value[i].as_f64() - update);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_signed_learning_rate() {
        let mut p = Param::new(vec![1.0f64, -2.0, 0.5]);
        p.grad = vec![0.3, -7.0, 1e-3];
        let mut adam = Adam::new(1e-3, 0.9, 0.999);
        adam.step(&mut [&mut p]).unwrap();
        let start = [1.0, -2.0, 0.5];
        for i in 0..3 {
            let g: f64 = [0.3, -7.0, 1e-3][i];
            let expect = start[i] - 1e-3 * g / (g.abs() + 1e-8);
            assert!((p.value[i] - expect).abs() < 1e-15);
        }
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = Param::new(vec![0.25f64; 4]);
        let mut adam = Adam::new(1e-3, 0.9, 0.999);
        for _ in 0..50 {
            adam.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value, vec![0.25; 4]);
    }

    #[test]
    fn mismatched_parameter_list() {
        let mut a = Param::new(vec![1.0f64; 2]);
        let mut b = Param::new(vec![1.0f64; 3]);
        let mut adam = Adam::new(1e-3, 0.9, 0.999);
        adam.step(&mut [&mut a]).unwrap();
        assert!(adam.step(&mut [&mut b]).is_err());
    }
}
