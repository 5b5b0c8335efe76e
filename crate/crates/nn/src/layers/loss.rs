use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Row-wise softmax, evaluated in `f64` with the max subtracted.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<f64> {
    let max = logits.iter().map(|v| v.f64()).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v.f64() - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub struct CrossEntropy<T> {
    /// Mean over the batch.
    pub loss: f64,
    pub probs: Vec<Vec<f64>>,
    pub dlogits: Matrix<T>,
}

/// Mean softmax cross-entropy and its gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Matrix<T>, labels: &[usize]) -> Result<CrossEntropy<T>> {
    if labels.len() != logits.rows {
        return Err(NnError::Shape(format!("{} labels for {} rows", labels.len(), logits.rows)));
    }
    let batch = logits.rows as f64;
    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(logits.rows);
    let mut dlogits = Matrix::zeros(logits.rows, logits.cols);
    for (r, &label) in labels.iter().enumerate() {
        if label >= logits.cols {
            return Err(NnError::Label {
                label,
                classes: logits.cols,
            });
        }
        let row = logits.row(r);
        let max = row.iter().map(|v| v.f64()).fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v.f64() - max).exp()).sum::<f64>().ln() + max;
        loss -= row[label].f64() - log_sum;
        let p = softmax(row);
        for (k, (g, &pk)) in dlogits.row_mut(r).iter_mut().zip(&p).enumerate() {
            let target = if k == label { 1.0 } else { 0.0 };
            *g = T::of((pk - target) / batch);
        }
        probs.push(p);
    }
    Ok(CrossEntropy {
        loss: loss / batch,
        probs,
        dlogits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = Matrix {
            rows: 2,
            cols: 5,
            data: vec![0.7f64; 10],
        };
        let ce = softmax_cross_entropy(&logits, &[0, 4]).unwrap();
        assert!((ce.loss - 5f64.ln()).abs() < 1e-12);
        assert!(softmax_cross_entropy(&logits, &[0, 5]).is_err());
    }

    #[test]
    fn shift_invariance() {
        let a = softmax(&[1.0f64, -2.0, 0.5]);
        let b = softmax(&[101.0f64, 98.0, 100.5]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
