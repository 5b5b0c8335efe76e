//! Adam with bias correction and a per-epoch exponential learning-rate
//! schedule.

use crate::error::{NnError, Result};
use crate::model::Model;
use crate::scalar::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// `lr_init * lr_decay^epoch`, epochs counted from 0.
pub fn lr_at_epoch(lr_init: f64, lr_decay: f64, epoch: usize) -> f64 {
    if epoch == 0 {
        lr_init
    } else {
        lr_init * lr_decay.powi(epoch as i32)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(model: &Model<T>) -> Self {
        let zeros: Vec<Vec<T>> = model.params().iter().map(|p| vec![T::zero(); p.len()]).collect();
        Self {
            beta1: BETA1,
            beta2: BETA2,
            eps: EPSILON,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update of every parameter with learning rate `lr`.
    pub fn update(&mut self, model: &mut Model<T>, grads: &[Vec<T>], lr: f64) -> Result<()> {
        let mut params = model.params_mut();
        if grads.len() != params.len() || grads.iter().zip(&params).any(|(g, p)| g.len() != p.len()) {
            return Err(NnError::Shape("gradients do not match the parameters".into()));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let (one_b1, one_b2) = (T::of(1.0 - self.beta1), T::of(1.0 - self.beta2));
        let (inv_c1, inv_c2) = (T::of(1.0 / c1), T::of(1.0 / c2));
        let (lr, eps) = (T::of(lr), T::of(self.eps));
        for (k, p) in params.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                let g = grads[k][i];
                m[i] = b1 * m[i] + one_b1 * g;
                v[i] = b2 * v[i] + one_b2 * g * g;
                let m_hat = m[i] * inv_c1;
                let v_hat = v[i] * inv_c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
