//! Depth-slice rendering of descriptors as binary PGM / PPM images.
//!
//! Image column `x` and row `y` show voxel `(x, y, depth)`. Values are
//! clamped to `[0, 1]` and scaled to `[0, 255]`.

use crate::encoder::{ChannelVolume, DAPotion, Scheme};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnmKind {
    /// One channel, `P5`.
    Gray,
    /// Three channels, `P6`.
    Rgb,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pnm {
    pub kind: PnmKind,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pnm {
    pub fn extension(&self) -> &'static str {
        match self.kind {
            PnmKind::Gray => "pgm",
            PnmKind::Rgb => "ppm",
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let magic = match self.kind {
            PnmKind::Gray => "P5",
            PnmKind::Rgb => "P6",
        };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    /// Gray level of pixel `(x, y)`; for RGB images, the channel maximum.
    pub fn intensity(&self, x: usize, y: usize) -> u8 {
        let i = y * self.width + x;
        match self.kind {
            PnmKind::Gray => self.pixels[i],
            PnmKind::Rgb => *self.pixels[3 * i..3 * i + 3].iter().max().unwrap(),
        }
    }
}

fn to_byte(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Renders `channels` (one or three) of `v` at depth index `depth`, each
/// channel multiplied by the matching entry of `scale` first.
pub fn render_channels(v: &ChannelVolume, channels: &[usize], scale: &[f32], depth: usize) -> Result<Pnm> {
    let [w, h, d] = v.dims();
    if depth >= d {
        return Err(Error::Shape(format!("depth index {depth} outside 0..{d}")));
    }
    if let Some(&c) = channels.iter().find(|&&c| c >= v.channels()) {
        return Err(Error::Shape(format!("channel {c} outside 0..{}", v.channels())));
    }
    let kind = match channels.len() {
        1 => PnmKind::Gray,
        3 => PnmKind::Rgb,
        n => return Err(Error::Shape(format!("cannot render {n} channels"))),
    };
    let mut pixels = Vec::with_capacity(w * h * channels.len());
    for y in 0..h {
        for x in 0..w {
            for (&c, &s) in channels.iter().zip(scale) {
                pixels.push(to_byte(v.get(c, x, y, depth) * s));
            }
        }
    }
    Ok(Pnm {
        kind,
        width: w,
        height: h,
        pixels,
    })
}

/// Renders joint `joint` of a descriptor at one depth index.
///
/// Three-channel color codes become RGB images (for `NUI`, the `U` part);
/// otherwise the joint's intensity channel is drawn in gray, scaled by
/// `1/C`, or for `U`/`N` the first code channel.
pub fn render_slice(d: &DAPotion, joint: usize, depth: usize) -> Result<Pnm> {
    if joint >= d.joints {
        return Err(Error::Shape(format!("joint {joint} outside 0..{}", d.joints)));
    }
    let base = d.joint_block(joint).start;
    let c = d.code_channels;
    let inv_c = 1.0 / c as f32;
    let (channels, scale): (Vec<usize>, Vec<f32>) = match (d.scheme, c) {
        (Scheme::U | Scheme::N, 3) => ((base..base + 3).collect(), vec![1.0; 3]),
        (Scheme::Nui, 3) => ((base + 3..base + 6).collect(), vec![1.0; 3]),
        (Scheme::U | Scheme::N, _) => (vec![base], vec![1.0]),
        (Scheme::I, _) => (vec![base], vec![inv_c]),
        (Scheme::Nui, _) => (vec![base + 2 * c], vec![inv_c]),
    };
    render_channels(&d.volume, &channels, &scale, depth)
}
