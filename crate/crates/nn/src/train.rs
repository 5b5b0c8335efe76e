//! Mini-batch training with augmentation and Adam, plus eval-mode
//! prediction. Every random stream derives from `ClassifierConfig::seed`
//! and iteration order is fixed, so equal seeds give bit-identical models.

use dapotion_core::encoder::ChannelVolume;
use dapotion_core::fusion::ScoreVector;
use dapotion_core::synth::mix_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augment::{augment, AugmentConfig, ChannelLayout};
use crate::error::{NnError, Result};
use crate::model::{init_model, ClassifierConfig, Model};
use crate::optim::{lr_at_epoch, Adam};
use crate::tensor::Tensor5;

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub volume: ChannelVolume,
    pub label: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean training cross-entropy over the epoch's mini-batches.
    pub train_loss: f64,
    /// NaN without a validation set.
    pub val_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,val_accuracy\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", r.epoch, r.lr, r.train_loss, r.val_accuracy));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }
}

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;
const AUGMENT_STREAM: u64 = 3;

/// Stacks volumes into a `(batch, C, W, H, D)` tensor.
pub fn batch_tensor<'a>(volumes: impl IntoIterator<Item = &'a ChannelVolume>) -> Result<Tensor5<f32>> {
    let mut data = Vec::new();
    let mut shape: Option<([usize; 3], usize)> = None;
    let mut n = 0;
    for v in volumes {
        match shape {
            None => shape = Some((v.dims(), v.channels())),
            Some(s) if s != (v.dims(), v.channels()) => {
                return Err(NnError::Shape(format!(
                    "volume {:?} x {} in a batch of {:?} x {}",
                    v.dims(),
                    v.channels(),
                    s.0,
                    s.1
                )))
            }
            Some(_) => {}
        }
        data.extend_from_slice(v.data());
        n += 1;
    }
    let (dims, channels) = shape.ok_or(NnError::EmptyDataset)?;
    Tensor5::from_vec([n, channels, dims[0], dims[1], dims[2]], data)
}

fn check_examples(examples: &[Example], config: &ClassifierConfig, dims: [usize; 3]) -> Result<()> {
    for e in examples {
        if e.volume.dims() != dims || e.volume.channels() != config.input_channels {
            return Err(NnError::Shape(format!(
                "descriptor {:?} x {} differs from {dims:?} x {}",
                e.volume.dims(),
                e.volume.channels(),
                config.input_channels
            )));
        }
        if e.label >= config.num_classes {
            return Err(NnError::Label {
                label: e.label,
                classes: config.num_classes,
            });
        }
    }
    Ok(())
}

/// Trains a fresh model. `val` may be empty. Without `aug` the volumes are
/// used as they are.
pub fn train(
    train_set: &[Example],
    val: &[Example],
    layout: &ChannelLayout,
    config: &ClassifierConfig,
    aug: Option<&AugmentConfig>,
) -> Result<(Model<f32>, History)> {
    config.validate()?;
    let first = train_set.first().ok_or(NnError::EmptyDataset)?;
    let dims = first.volume.dims();
    config.check_spatial(dims)?;
    check_examples(train_set, config, dims)?;
    check_examples(val, config, dims)?;
    layout.validate(config.input_channels)?;
    if let Some(a) = aug {
        a.validate()?;
    }

    let mut model = init_model::<f32>(config, mix_seed(config.seed, INIT_STREAM))?;
    let mut adam = Adam::new(&model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, SHUFFLE_STREAM));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, DROPOUT_STREAM));
    let mut augment_rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, AUGMENT_STREAM));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(config.lr_init, config.lr_decay, epoch);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let volumes: Vec<ChannelVolume> = chunk
                .iter()
                .map(|&i| match aug {
                    Some(a) => augment(&train_set[i].volume, layout, a, &mut augment_rng),
                    None => train_set[i].volume.clone(),
                })
                .collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| train_set[i].label).collect();
            let x = batch_tensor(&volumes)?;
            let masks = model.sample_masks(x.batch(), dims, &mut dropout_rng);
            let pass = model.forward(&x, Some(&masks))?;
            let grads = model.backward(&x, &pass, &labels)?;
            if !grads.loss.is_finite() {
                return Err(NnError::NonFinite(format!("loss at epoch {epoch}")));
            }
            adam.update(&mut model, &grads.params, lr)?;
            model.update_running_stats(&pass);
            loss_sum += grads.loss * chunk.len() as f64;
        }
        let val_accuracy = if val.is_empty() { f64::NAN } else { accuracy(&model, val)? };
        history.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train_set.len() as f64,
            val_accuracy,
        });
    }
    Ok((model, history))
}

/// Eval-mode class probabilities for one volume (a batch of one).
pub fn predict(model: &Model<f32>, volume: &ChannelVolume) -> Result<ScoreVector> {
    let x = batch_tensor([volume])?;
    let probs = model.predict_batch(&x)?.pop().expect("one row");
    Ok(ScoreVector::new(probs)?)
}

/// Fraction of examples whose argmax prediction equals the label.
pub fn accuracy(model: &Model<f32>, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut correct = 0;
    for e in examples {
        if predict(model, &e.volume)?.argmax() == e.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}
