use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor5;

/// Per-channel batch normalization over batch and spatial positions.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: f64,
    pub momentum: f64,
}

/// Training-mode intermediates needed by the backward pass.
#[derive(Clone, Debug)]
pub struct BnCache<T> {
    pub xhat: Tensor5<T>,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    /// Biased batch variance.
    pub var: Vec<f64>,
    pub count: usize,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(channels: usize, eps: f64, momentum: f64) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            eps,
            momentum,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor5<T>) -> Result<()> {
        if x.channels() != self.channels() {
            return Err(NnError::Shape(format!(
                "batchnorm over {} channels got {}",
                self.channels(),
                x.channels()
            )));
        }
        Ok(())
    }

    pub fn forward_train(&self, x: &Tensor5<T>) -> Result<(Tensor5<T>, BnCache<T>)> {
        self.check(x)?;
        let channels = self.channels();
        let count = x.batch() * x.voxels();
        let mut mean = vec![0.0f64; channels];
        let mut var = vec![0.0f64; channels];
        for c in 0..channels {
            let mut sum = 0.0;
            for n in 0..x.batch() {
                sum += x.plane(n, c).iter().map(|v| v.f64()).sum::<f64>();
            }
            let mu = sum / count as f64;
            let mut sq = 0.0;
            for n in 0..x.batch() {
                sq += x.plane(n, c).iter().map(|v| (v.f64() - mu).powi(2)).sum::<f64>();
            }
            mean[c] = mu;
            var[c] = sq / count as f64;
        }
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let mut xhat = Tensor5::zeros(x.shape());
        let mut y = Tensor5::zeros(x.shape());
        for n in 0..x.batch() {
            for c in 0..channels {
                let (m, s) = (T::of(mean[c]), T::of(inv_std[c]));
                let (g, b) = (self.gamma[c], self.beta[c]);
                let src = x.plane(n, c);
                for (dst, &v) in xhat.plane_mut(n, c).iter_mut().zip(src) {
                    *dst = (v - m) * s;
                }
                let xh = xhat.plane(n, c).to_vec();
                for (dst, v) in y.plane_mut(n, c).iter_mut().zip(xh) {
                    *dst = g * v + b;
                }
            }
        }
        Ok((
            y,
            BnCache {
                xhat,
                inv_std,
                mean,
                var,
                count,
            },
        ))
    }

    pub fn forward_eval(&self, x: &Tensor5<T>) -> Result<Tensor5<T>> {
        self.check(x)?;
        let mut y = Tensor5::zeros(x.shape());
        for c in 0..self.channels() {
            let inv = T::of(1.0 / (self.running_var[c].f64() + self.eps).sqrt());
            let scale = self.gamma[c] * inv;
            let shift = self.beta[c] - self.running_mean[c] * scale;
            for n in 0..x.batch() {
                for (dst, &v) in y.plane_mut(n, c).iter_mut().zip(x.plane(n, c)) {
                    *dst = v * scale + shift;
                }
            }
        }
        Ok(y)
    }

    /// Returns `(dx, dgamma, dbeta)`.
    pub fn backward(&self, cache: &BnCache<T>, dy: &Tensor5<T>) -> Result<(Tensor5<T>, Vec<T>, Vec<T>)> {
        if dy.shape() != cache.xhat.shape() {
            return Err(NnError::Shape(format!("batchnorm upstream gradient {:?}", dy.shape())));
        }
        let channels = self.channels();
        let m = cache.count as f64;
        let mut dgamma = vec![T::zero(); channels];
        let mut dbeta = vec![T::zero(); channels];
        let mut dx = Tensor5::zeros(dy.shape());
        for c in 0..channels {
            let mut sum_dy = 0.0f64;
            let mut sum_dy_xhat = 0.0f64;
            for n in 0..dy.batch() {
                for (&g, &xh) in dy.plane(n, c).iter().zip(cache.xhat.plane(n, c)) {
                    sum_dy += g.f64();
                    sum_dy_xhat += g.f64() * xh.f64();
                }
            }
            dgamma[c] = T::of(sum_dy_xhat);
            dbeta[c] = T::of(sum_dy);
            let gamma = self.gamma[c].f64();
            let k = gamma * cache.inv_std[c] / m;
            let (mean_dy, mean_dy_xhat) = (T::of(sum_dy), T::of(sum_dy_xhat));
            let (k, m_t) = (T::of(k), T::of(m));
            for n in 0..dy.batch() {
                let xh = cache.xhat.plane(n, c).to_vec();
                let g = dy.plane(n, c).to_vec();
                for ((dst, g), xh) in dx.plane_mut(n, c).iter_mut().zip(g).zip(xh) {
                    *dst = k * (m_t * g - mean_dy - xh * mean_dy_xhat);
                }
            }
        }
        Ok((dx, dgamma, dbeta))
    }

    /// Exponential moving average of the batch statistics; the running
    /// variance uses the unbiased estimate.
    pub fn update_running(&mut self, cache: &BnCache<T>) {
        let m = self.momentum;
        let correction = if cache.count > 1 {
            cache.count as f64 / (cache.count - 1) as f64
        } else {
            1.0
        };
        for c in 0..self.channels() {
            let rm = self.running_mean[c].f64();
            let rv = self.running_var[c].f64();
            self.running_mean[c] = T::of((1.0 - m) * rm + m * cache.mean[c]);
            self.running_var[c] = T::of((1.0 - m) * rv + m * cache.var[c] * correction);
        }
    }
}
