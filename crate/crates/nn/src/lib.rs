//! A small 3D convolutional classifier written from scratch: layers with
//! hand-derived backward passes, Xavier initialization, Adam, volumetric
//! augmentation, a deterministic training loop and a binary checkpoint
//! format.

pub mod augment;
pub mod checkpoint;
pub mod error;
pub mod layers;
pub mod model;
pub mod optim;
pub mod scalar;
pub mod tensor;
pub mod train;

pub use error::{NnError, Result};
pub use model::{init_model, ClassifierConfig, Model};
pub use tensor::{Matrix, Tensor5};
pub use augment::{AugmentConfig, ChannelLayout};
pub use train::{predict, train, Example, History};
