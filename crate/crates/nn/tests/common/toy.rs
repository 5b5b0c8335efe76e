//! Small, easily separated training sets built from the synthetic generator.

#![allow(dead_code)]

use dapotion_core::encoder::{encode_clip, EncoderConfig, Scheme};
use dapotion_core::pose_io::prepare_for_grid;
use dapotion_core::synth::{generate_clip, mix_seed, SynthClass, SynthSpec};
use dapotion_nn::train::Example;
use dapotion_nn::{ChannelLayout, ClassifierConfig};

/// `per_class` descriptors of an in-plane circle class and a depth zigzag
/// class on an 8^3 grid, two joints, C = 3, NUI.
pub fn two_class_set(per_class: usize, seed: u64) -> (Vec<Example>, ChannelLayout) {
    let encoder = EncoderConfig {
        scheme: Scheme::Nui,
        channels: 3,
        ..EncoderConfig::cube(8)
    };
    let mut examples = Vec::new();
    let mut layout = None;
    for (label, class) in [SynthClass::CircleXy, SynthClass::ZigzagXz].into_iter().enumerate() {
        for i in 0..per_class {
            let spec = SynthSpec {
                joints: 2,
                frames: 12,
                seed: mix_seed(seed, ((label as u64) << 32) | i as u64),
                ..SynthSpec::new(class)
            };
            let clip = prepare_for_grid(generate_clip(&spec).unwrap(), encoder.dims).unwrap();
            let d = encode_clip(&clip, &encoder).unwrap();
            layout.get_or_insert_with(|| ChannelLayout::of(&d));
            examples.push(Example { volume: d.volume, label });
        }
    }
    (examples, layout.unwrap())
}

/// A small network for the toy set.
pub fn small_config(channels: usize, seed: u64, epochs: usize) -> ClassifierConfig {
    ClassifierConfig {
        filters: vec![4, 8],
        epochs,
        batch_size: 4,
        seed,
        ..ClassifierConfig::new(channels, 2)
    }
}
