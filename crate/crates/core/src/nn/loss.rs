use super::Real;
use crate::error::{Error, Result};

/// Loss, probabilities and logit gradient of one softmax cross-entropy term.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxCe {
    pub loss: f64,
    pub probabilities: Vec<f64>,
    pub gradient: Vec<f64>,
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `softmax(logits)` against the 0-based `target`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<SoftmaxCe> {
    if target >= logits.len() {
        return Err(Error::InvalidClass {
            class: target,
            classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    let loss = log_total - (logits[target] - max);
    let probabilities = softmax(logits);
    let mut gradient = probabilities.clone();
    gradient[target] -= 1.0;
    Ok(SoftmaxCe {
        loss,
        probabilities,
        gradient,
    })
}

/// Mean cross-entropy over a batch of `batch x classes` logits, with the
/// gradient of that mean.
pub fn batch_cross_entropy<R: Real>(
    logits: &[R],
    classes: usize,
    targets: &[usize],
) -> Result<(f64, Vec<R>)> {
    if logits.len() != classes * targets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logits for {} targets of {classes} classes",
            logits.len(),
            targets.len()
        )));
    }
    let scale = 1.0 / targets.len() as f64;
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &t) in logits.chunks(classes).zip(targets) {
        let row: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
        let ce = softmax_cross_entropy(&row, t)?;
        total += ce.loss;
        grad.extend(ce.gradient.iter().map(|g| R::of_f64(g * scale)));
    }
    Ok((total * scale, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let ce = softmax_cross_entropy(&[0.3; 4], 2).unwrap();
        for p in &ce.probabilities {
            assert!((p - 0.25).abs() < 1e-15);
        }
        assert!((ce.loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_target_has_small_loss() {
        let ce = softmax_cross_entropy(&[50.0, 0.0, -3.0], 0).unwrap();
        assert!(ce.loss < 1e-20);
        assert!(ce.gradient.iter().all(|g| g.abs() < 1e-20));
    }

    #[test]
    fn huge_logits_stay_finite() {
        let ce = softmax_cross_entropy(&[1e4, -1e4, 9999.0], 2).unwrap();
        assert!(ce.loss.is_finite());
        let s: f64 = ce.probabilities.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
        assert!(ce.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn bad_target() {
        assert!(matches!(
            softmax_cross_entropy(&[0.0, 1.0], 2),
            Err(Error::InvalidClass { class: 2, classes: 2 })
        ));
    }
}
