use super::{Real, Tensor4};
use crate::error::Result;

pub fn relu_forward<R: Real>(x: &Tensor4<R>) -> Tensor4<R> {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < R::zero() {
            *v = R::zero();
        }
    }
    y
}

/// Passes gradient where the forward input was positive.
pub fn relu_backward<R: Real>(x: &Tensor4<R>, dy: &Tensor4<R>) -> Result<Tensor4<R>> {
    dy.expect_shape(x.shape(), "relu upstream gradient")?;
    let mut dx = dy.clone();
    for (g, &v) in dx.data_mut().iter_mut().zip(x.data()) {
        if v <= R::zero() {
            *g = R::zero();
        }
    }
    Ok(dx)
}

/// Spatial mean per channel, flattened to `batch x channels`.
pub fn gap_forward<R: Real>(x: &Tensor4<R>) -> Vec<R> {
    let plane = x.plane();
    let scale = R::of_f64(1.0 / plane as f64);
    x.data()
        .chunks(plane)
        .map(|c| c.iter().copied().sum::<R>() * scale)
        .collect()
}

pub fn gap_backward<R: Real>(shape: [usize; 4], dh: &[R]) -> Result<Tensor4<R>> {
    let [b, c, rows, cols] = shape;
    if dh.len() != b * c {
        return Err(crate::Error::ShapeMismatch(format!(
            "gap gradient has {} entries for {b}x{c}",
            dh.len()
        )));
    }
    let plane = rows * cols;
    let scale = R::of_f64(1.0 / plane as f64);
    let mut dx = Tensor4::zeros(shape);
    for (chunk, &g) in dx.data_mut().chunks_mut(plane).zip(dh) {
        chunk.fill(g * scale);
    }
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_of_constant_channel() {
        let x = Tensor4::from_vec([1, 2, 2, 3], [vec![1.5; 6], vec![-2.0; 6]].concat()).unwrap();
        assert_eq!(gap_forward(&x), vec![1.5, -2.0]);
    }

    #[test]
    fn relu_gates_gradient() {
        let x = Tensor4::from_vec([1, 1, 1, 4], vec![-1.0, 2.0, -0.5, 3.0]).unwrap();
        assert_eq!(relu_forward(&x).data(), &[0.0, 2.0, 0.0, 3.0]);
        let dy = Tensor4::from_vec([1, 1, 1, 4], vec![1.0; 4]).unwrap();
        assert_eq!(relu_backward(&x, &dy).unwrap().data(), &[0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn gap_backward_spreads_evenly() {
        let dx = gap_backward::<f64>([1, 1, 2, 2], &[4.0]).unwrap();
        assert_eq!(dx.data(), &[1.0; 4]);
        assert!(gap_backward::<f64>([1, 2, 2, 2], &[4.0]).is_err());
    }
}
