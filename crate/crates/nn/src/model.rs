//! The shallow 3D CNN: `blocks` blocks of two 3x3x3 convolutions (stride 1
//! then stride 2), each convolution followed by dropout, batch
//! normalization and ReLU; then global average pooling and a dense softmax
//! head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::layers::dropout::{apply_mask, sample_mask};
use crate::layers::pool::{global_avg_pool, global_avg_pool_backward};
use crate::layers::relu::{relu_backward_inplace, relu_inplace};
use crate::layers::{softmax, softmax_cross_entropy, BatchNorm, BnCache, Conv3d, Dense};
use crate::scalar::Scalar;
use crate::tensor::{Matrix, Tensor5};

pub const STRIDES: [usize; 2] = [1, 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub input_channels: usize,
    pub num_classes: usize,
    /// Output channels of both convolutions in each block; its length is the
    /// number of blocks.
    pub filters: Vec<usize>,
    pub dropout_p: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_init: f64,
    pub lr_decay: f64,
    pub seed: u64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl ClassifierConfig {
    pub fn new(input_channels: usize, num_classes: usize) -> Self {
        Self {
            input_channels,
            num_classes,
            filters: vec![32, 64, 128],
            dropout_p: 0.25,
            epochs: 100,
            batch_size: 16,
            lr_init: 1e-3,
            lr_decay: 0.97,
            seed: 0,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }

    pub fn blocks(&self) -> usize {
        self.filters.len()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(NnError::Config(msg));
        if self.input_channels == 0 {
            return fail("input_channels must be > 0".into());
        }
        if self.num_classes < 2 {
            return fail(format!("num_classes {} must be >= 2", self.num_classes));
        }
        if self.filters.is_empty() || self.filters.contains(&0) {
            return fail(format!("filters {:?} must be nonempty and positive", self.filters));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return fail(format!("dropout_p {} must lie in [0, 1)", self.dropout_p));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be > 0".into());
        }
        if !(self.lr_init > 0.0 && self.lr_init.is_finite()) {
            return fail(format!("lr_init {} must be > 0", self.lr_init));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail(format!("lr_decay {} must lie in (0, 1]", self.lr_decay));
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) || !(self.bn_eps > 0.0) {
            return fail("batchnorm momentum must lie in (0, 1] and eps be > 0".into());
        }
        Ok(())
    }

    /// Each spatial extent must be 1 or divisible by `2^blocks`.
    pub fn check_spatial(&self, dims: [usize; 3]) -> Result<()> {
        let m = 1usize << self.blocks();
        if dims.iter().all(|&n| n == 1 || (n > 0 && n % m == 0)) {
            Ok(())
        } else {
            Err(NnError::Shape(format!(
                "spatial dims {dims:?} must each be 1 or divisible by {m}"
            )))
        }
    }
}

/// One convolution with its batch normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvUnit<T> {
    pub conv: Conv3d<T>,
    pub bn: BatchNorm<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub config: ClassifierConfig,
    pub units: Vec<ConvUnit<T>>,
    pub dense: Dense<T>,
}

fn xavier_fill<T: Scalar, R: Rng>(values: &mut [T], fan_in: usize, fan_out: usize, rng: &mut R) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in values {
        *v = T::of(rng.random_range(-bound..=bound));
    }
}

/// Builds a model with Xavier-uniform weights, zero biases and identity
/// batch normalization.
pub fn init_model<T: Scalar>(config: &ClassifierConfig, seed: u64) -> Result<Model<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut units = Vec::with_capacity(2 * config.blocks());
    let mut channels = config.input_channels;
    for &filters in &config.filters {
        for stride in STRIDES {
            let mut conv = Conv3d::zeros(channels, filters, stride);
            let (fi, fo) = (conv.fan_in(), conv.fan_out());
            xavier_fill(&mut conv.weight, fi, fo, &mut rng);
            units.push(ConvUnit {
                conv,
                bn: BatchNorm::new(filters, config.bn_eps, config.bn_momentum),
            });
            channels = filters;
        }
    }
    let mut dense = Dense::zeros(channels, config.num_classes);
    xavier_fill(&mut dense.weight, channels, config.num_classes, &mut rng);
    Ok(Model {
        config: config.clone(),
        units,
        dense,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Intermediates of one convolution unit in training mode.
pub struct UnitCache<T> {
    pub mask: Vec<T>,
    pub bn: BnCache<T>,
    /// Post-ReLU output.
    pub output: Tensor5<T>,
}

pub struct ForwardPass<T> {
    pub mode: Mode,
    /// Empty in eval mode.
    pub units: Vec<UnitCache<T>>,
    pub last_shape: [usize; 5],
    pub pooled: Matrix<T>,
    pub logits: Matrix<T>,
    pub probs: Vec<Vec<f64>>,
}

/// Dropout masks for one training forward pass, one per unit.
pub type Masks<T> = Vec<Vec<T>>;

pub struct Gradients<T> {
    /// In [`Model::params`] order.
    pub params: Vec<Vec<T>>,
    pub loss: f64,
}

fn check_finite<T: Scalar>(values: &[T], what: impl FnOnce() -> String) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::NonFinite(what()))
    }
}

impl<T: Scalar> Model<T> {
    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    /// Trainable parameters in a fixed order: per unit conv weight, conv
    /// bias, batchnorm gamma, batchnorm beta; then dense weight and bias.
    pub fn params(&self) -> Vec<&Vec<T>> {
        let mut out = Vec::with_capacity(4 * self.units.len() + 2);
        for u in &self.units {
            out.extend([&u.conv.weight, &u.conv.bias, &u.bn.gamma, &u.bn.beta]);
        }
        out.extend([&self.dense.weight, &self.dense.bias]);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Vec<T>> {
        let mut out = Vec::with_capacity(4 * self.units.len() + 2);
        for u in &mut self.units {
            out.push(&mut u.conv.weight);
            out.push(&mut u.conv.bias);
            out.push(&mut u.bn.gamma);
            out.push(&mut u.bn.beta);
        }
        out.push(&mut self.dense.weight);
        out.push(&mut self.dense.bias);
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.units.len() {
            for p in ["conv.weight", "conv.bias", "bn.gamma", "bn.beta"] {
                out.push(format!("unit{i}.{p}"));
            }
        }
        out.push("dense.weight".into());
        out.push("dense.bias".into());
        out
    }

    pub fn check_input(&self, x: &Tensor5<T>) -> Result<()> {
        if x.channels() != self.config.input_channels {
            return Err(NnError::Shape(format!(
                "model expects {} input channels, got {}",
                self.config.input_channels,
                x.channels()
            )));
        }
        if x.batch() == 0 {
            return Err(NnError::Shape("empty batch".into()));
        }
        self.config.check_spatial(x.spatial())
    }

    /// Draws one dropout mask per unit for an input of spatial size `dims`.
    pub fn sample_masks<R: Rng>(&self, batch: usize, dims: [usize; 3], rng: &mut R) -> Masks<T> {
        let mut dims = dims;
        self.units
            .iter()
            .map(|u| {
                dims = u.conv.output_dims(dims);
                let len = batch * u.conv.out_channels * dims.iter().product::<usize>();
                sample_mask(len, self.config.dropout_p, rng)
            })
            .collect()
    }

    /// Forward pass. Passing dropout masks selects training mode (batch
    /// statistics, caches kept for [`Model::backward`]); `None` is eval mode.
    pub fn forward(&self, x: &Tensor5<T>, masks: Option<&Masks<T>>) -> Result<ForwardPass<T>> {
        self.check_input(x)?;
        if let Some(m) = masks {
            if m.len() != self.units.len() {
                return Err(NnError::Shape(format!("{} dropout masks for {} units", m.len(), self.units.len())));
            }
        }
        let mode = if masks.is_some() { Mode::Train } else { Mode::Eval };
        let mut caches: Vec<UnitCache<T>> = Vec::new();
        let mut h: Option<Tensor5<T>> = None;
        for (i, unit) in self.units.iter().enumerate() {
            let input = h.as_ref().unwrap_or(x);
            let mut z = unit.conv.forward(input)?;
            let (mut y, cache) = match masks {
                Some(m) => {
                    if m[i].len() != z.data().len() {
                        return Err(NnError::Shape(format!("dropout mask {i} has the wrong length")));
                    }
                    apply_mask(z.data_mut(), &m[i]);
                    let (y, bn) = unit.bn.forward_train(&z)?;
                    (y, Some(bn))
                }
                None => (unit.bn.forward_eval(&z)?, None),
            };
            relu_inplace(y.data_mut());
            if cfg!(debug_assertions) {
                check_finite(y.data(), || format!("conv unit {i}"))?;
            }
            if let Some(bn) = cache {
                caches.push(UnitCache {
                    mask: masks.expect("train mode")[i].clone(),
                    bn,
                    output: y.clone(),
                });
            }
            h = Some(y);
        }
        let last = h.expect("at least one unit");
        let pooled = global_avg_pool(&last);
        let logits = self.dense.forward(&pooled)?;
        check_finite(&logits.data, || "dense head".into())?;
        let probs = (0..logits.rows).map(|r| softmax(logits.row(r))).collect();
        Ok(ForwardPass {
            mode,
            units: caches,
            last_shape: last.shape(),
            pooled,
            logits,
            probs,
        })
    }

    /// Mean cross-entropy gradients for a training-mode pass over `x`.
    pub fn backward(&self, x: &Tensor5<T>, pass: &ForwardPass<T>, labels: &[usize]) -> Result<Gradients<T>> {
        if pass.mode != Mode::Train || pass.units.len() != self.units.len() {
            return Err(NnError::Shape("backward needs a training-mode forward pass".into()));
        }
        let ce = softmax_cross_entropy(&pass.logits, labels)?;
        let (dpooled, dw_dense, db_dense) = self.dense.backward(&pass.pooled, &ce.dlogits)?;
        let mut grad = global_avg_pool_backward(&dpooled, pass.last_shape);
        let mut per_unit = Vec::with_capacity(self.units.len());
        for i in (0..self.units.len()).rev() {
            let unit = &self.units[i];
            let cache = &pass.units[i];
            relu_backward_inplace(cache.output.data(), grad.data_mut());
            let (mut dz, dgamma, dbeta) = unit.bn.backward(&cache.bn, &grad)?;
            apply_mask(dz.data_mut(), &cache.mask);
            let input = if i == 0 { x } else { &pass.units[i - 1].output };
            let g = unit.conv.backward(input, &dz, i > 0)?;
            per_unit.push([g.weight, g.bias, dgamma, dbeta]);
            if let Some(dx) = g.input {
                grad = dx;
            }
        }
        let mut params = Vec::with_capacity(4 * self.units.len() + 2);
        for group in per_unit.into_iter().rev() {
            params.extend(group);
        }
        params.push(dw_dense);
        params.push(db_dense);
        Ok(Gradients { params, loss: ce.loss })
    }

    /// Folds the batch statistics of a training pass into the running
    /// averages.
    pub fn update_running_stats(&mut self, pass: &ForwardPass<T>) {
        for (unit, cache) in self.units.iter_mut().zip(&pass.units) {
            unit.bn.update_running(&cache.bn);
        }
    }

    /// Eval-mode class probabilities, one row per sample.
    pub fn predict_batch(&self, x: &Tensor5<T>) -> Result<Vec<Vec<f64>>> {
        Ok(self.forward(x, None)?.probs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ClassifierConfig {
        ClassifierConfig {
            filters: vec![3, 4],
            ..ClassifierConfig::new(2, 3)
        }
    }

    #[test]
    fn shapes_through_the_blocks() {
        let cfg = ClassifierConfig {
            filters: vec![2, 2, 2],
            ..ClassifierConfig::new(1, 2)
        };
        let model = init_model::<f32>(&cfg, 0).unwrap();
        let mut dims = [16, 16, 16];
        let mut seen = Vec::new();
        for u in &model.units {
            dims = u.conv.output_dims(dims);
            seen.push(dims[0]);
        }
        assert_eq!(seen, [16, 8, 8, 4, 4, 2]);
        let x = Tensor5::zeros([2, 1, 16, 16, 16]);
        let out = model.forward(&x, None).unwrap();
        assert_eq!((out.logits.rows, out.logits.cols), (2, 2));
        for p in &out.probs {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert!(model.forward(&Tensor5::zeros([1, 1, 12, 16, 16]), None).is_err());
        assert!(model.forward(&Tensor5::zeros([1, 2, 16, 16, 16]), None).is_err());
        assert!(model.forward(&Tensor5::zeros([1, 1, 16, 16, 1]), None).is_ok());
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_model::<f32>(&tiny(), 7).unwrap();
        assert_eq!(a, init_model::<f32>(&tiny(), 7).unwrap());
        assert_ne!(a, init_model::<f32>(&tiny(), 8).unwrap());
        for u in &a.units {
            let bound = (6.0 / (u.conv.fan_in() + u.conv.fan_out()) as f64).sqrt() as f32;
            assert!(u.conv.weight.iter().all(|w| w.abs() <= bound));
            assert!(u.conv.bias.iter().all(|&b| b == 0.0));
            assert!(u.bn.gamma.iter().all(|&g| g == 1.0));
            assert!(u.bn.running_var.iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn config_validation() {
        assert!(tiny().validate().is_ok());
        for bad in [
            ClassifierConfig { filters: vec![], ..tiny() },
            ClassifierConfig { filters: vec![4, 0], ..tiny() },
            ClassifierConfig { dropout_p: 1.0, ..tiny() },
            ClassifierConfig { lr_init: 0.0, ..tiny() },
            ClassifierConfig { lr_decay: 1.5, ..tiny() },
            ClassifierConfig { num_classes: 1, ..tiny() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn duplicated_batch_keeps_mean_loss() {
        let model = init_model::<f64>(&tiny(), 1).unwrap();
        let n = 2 * 8 * 8 * 8;
        let data: Vec<f64> = (0..n).map(|i| ((i * 31) % 17) as f64 / 17.0).collect();
        let x = Tensor5::from_vec([1, 2, 8, 8, 8], data.clone()).unwrap();
        let x2 = Tensor5::from_vec([2, 2, 8, 8, 8], [data.clone(), data].concat()).unwrap();
        let single = model.forward(&x, None).unwrap();
        let double = model.forward(&x2, None).unwrap();
        let l1 = softmax_cross_entropy(&single.logits, &[2]).unwrap().loss;
        let l2 = softmax_cross_entropy(&double.logits, &[2, 2]).unwrap().loss;
        assert!((l1 - l2).abs() < 1e-12);
    }
}
