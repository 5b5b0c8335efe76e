//! Training-time augmentation of descriptor volumes: a random rotation and
//! translation about the volume center (trilinear, zero outside), then
//! independent flips along y and z.

use dapotion_core::encoder::{ChannelVolume, DAPotion};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Largest rotation about each axis, in degrees.
    pub max_rotation_deg: f64,
    /// Largest translation along each axis, in voxels.
    pub max_translation: f64,
    pub flip_prob_y: f64,
    pub flip_prob_z: f64,
}

impl AugmentConfig {
    /// Defaults scaled to a cubic grid of side `grid`: 15 degrees, 4 voxels
    /// at 64 (proportionally less on smaller grids), flips with p = 0.5.
    pub fn for_grid(grid: usize) -> Self {
        Self {
            max_rotation_deg: 15.0,
            max_translation: 4.0 * grid as f64 / 64.0,
            flip_prob_y: 0.5,
            flip_prob_z: 0.5,
        }
    }

    pub fn identity() -> Self {
        Self {
            max_rotation_deg: 0.0,
            max_translation: 0.0,
            flip_prob_y: 0.0,
            flip_prob_z: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let magnitudes = [self.max_rotation_deg, self.max_translation];
        if magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(NnError::Config("augmentation magnitudes must be finite and >= 0".into()));
        }
        if ![self.flip_prob_y, self.flip_prob_z].iter().all(|p| (0.0..=1.0).contains(p)) {
            return Err(NnError::Config("flip probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// How a descriptor's channels are organized: per-joint blocks of equal
/// size, the legal upper bound of every channel and the joint pairs to swap
/// on a y flip.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelLayout {
    pub channels_per_joint: usize,
    pub upper_bounds: Vec<f32>,
    pub mirror_pairs: Vec<(usize, usize)>,
}

impl ChannelLayout {
    pub fn of(d: &DAPotion) -> Self {
        Self {
            channels_per_joint: d.channels_per_joint(),
            upper_bounds: d.channel_upper_bounds(),
            mirror_pairs: Vec::new(),
        }
    }

    pub fn with_mirror_pairs(mut self, pairs: Vec<(usize, usize)>) -> Self {
        self.mirror_pairs = pairs;
        self
    }

    /// Layout after summing out a depth axis of `depth` voxels.
    pub fn collapsed(&self, depth: usize) -> Self {
        Self {
            upper_bounds: self.upper_bounds.iter().map(|b| b * depth as f32).collect(),
            ..self.clone()
        }
    }

    pub fn channels(&self) -> usize {
        self.upper_bounds.len()
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        let joints = self.channels() / self.channels_per_joint.max(1);
        if self.channels() != channels
            || self.channels_per_joint == 0
            || joints * self.channels_per_joint != channels
        {
            return Err(NnError::Shape(format!(
                "channel layout of {} channels does not fit {channels}",
                self.channels()
            )));
        }
        for &(a, b) in &self.mirror_pairs {
            if a >= joints || b >= joints || a == b {
                return Err(NnError::Config(format!("mirror pair ({a}, {b}) for {joints} joints")));
            }
        }
        Ok(())
    }
}

/// Rotation `Rz * Ry * Rx` for angles in degrees about x, y, z.
fn rotation(deg: [f64; 3]) -> [[f64; 3]; 3] {
    let [a, b, c] = deg.map(f64::to_radians);
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sc, cc) = c.sin_cos();
    [
        [cc * cb, cc * sb * sa - sc * ca, cc * sb * ca + sc * sa],
        [sc * cb, sc * sb * sa + cc * ca, sc * sb * ca - cc * sa],
        [-sb, cb * sa, cb * ca],
    ]
}

/// Rotates by `rot_deg` about the volume center and then translates by
/// `translation` voxels. Each output voxel pulls its value from the inverse
/// mapped source position by trilinear interpolation, with zeros outside.
pub fn affine_warp(v: &ChannelVolume, rot_deg: [f64; 3], translation: [f64; 3]) -> ChannelVolume {
    let dims = v.dims();
    let [w, h, d] = dims;
    let center = dims.map(|n| (n as f64 - 1.0) / 2.0);
    let r = rotation(rot_deg);
    let voxels = v.voxels();
    let mut out = ChannelVolume::zeros(dims, v.channels());
    let mut taps: Vec<(usize, f32)> = Vec::with_capacity(8);
    for x in 0..w {
        for y in 0..h {
            for z in 0..d {
                let p = [x as f64, y as f64, z as f64];
                let rel: [f64; 3] = std::array::from_fn(|a| p[a] - center[a] - translation[a]);
                // Inverse rotation is the transpose.
                let q: [f64; 3] = std::array::from_fn(|a| {
                    center[a] + r[0][a] * rel[0] + r[1][a] * rel[1] + r[2][a] * rel[2]
                });
                taps.clear();
                trilinear_taps(q, dims, &mut taps);
                if taps.is_empty() {
                    continue;
                }
                let dst = (x * h + y) * d + z;
                for c in 0..v.channels() {
                    let src = &v.data()[c * voxels..(c + 1) * voxels];
                    let value: f32 = taps.iter().map(|&(i, wt)| wt * src[i]).sum();
                    out.data_mut()[c * voxels + dst] = value;
                }
            }
        }
    }
    out
}

/// In-grid corners and weights of the trilinear stencil at `q`.
fn trilinear_taps(q: [f64; 3], dims: [usize; 3], taps: &mut Vec<(usize, f32)>) {
    let mut base = [0isize; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        if !(q[a] > -1.0 && q[a] < dims[a] as f64) {
            return;
        }
        let f = q[a].floor();
        base[a] = f as isize;
        frac[a] = q[a] - f;
    }
    for corner in 0..8 {
        let mut idx = 0usize;
        let mut wt = 1.0;
        let mut inside = true;
        for a in 0..3 {
            let step = (corner >> (2 - a)) & 1;
            let i = base[a] + step as isize;
            wt *= if step == 1 { frac[a] } else { 1.0 - frac[a] };
            if i < 0 || i >= dims[a] as isize {
                inside = false;
            }
            idx = idx * dims[a] + i.max(0) as usize;
        }
        if inside && wt != 0.0 {
            taps.push((idx, wt as f32));
        }
    }
}

/// Mirrors the volume along `axis` (0 = x, 1 = y, 2 = z).
pub fn flip_axis(v: &ChannelVolume, axis: usize) -> ChannelVolume {
    let dims = v.dims();
    let mut out = ChannelVolume::zeros(dims, v.channels());
    for c in 0..v.channels() {
        for x in 0..dims[0] {
            for y in 0..dims[1] {
                for z in 0..dims[2] {
                    let mut m = [x, y, z];
                    m[axis] = dims[axis] - 1 - m[axis];
                    out.set(c, m[0], m[1], m[2], v.get(c, x, y, z));
                }
            }
        }
    }
    out
}

/// Exchanges the channel blocks of each mirror pair of joints.
pub fn swap_mirror_blocks(v: &mut ChannelVolume, layout: &ChannelLayout) {
    let n = layout.channels_per_joint;
    let voxels = v.voxels();
    for &(a, b) in &layout.mirror_pairs {
        for k in 0..n {
            let (ca, cb) = ((a * n + k) * voxels, (b * n + k) * voxels);
            for i in 0..voxels {
                v.data_mut().swap(ca + i, cb + i);
            }
        }
    }
}

/// Draws one random augmentation and applies it. Every call consumes the
/// same number of draws from `rng`, whatever the volume shape.
pub fn augment<R: Rng + ?Sized>(
    v: &ChannelVolume,
    layout: &ChannelLayout,
    aug: &AugmentConfig,
    rng: &mut R,
) -> ChannelVolume {
    let dims = v.dims();
    let mut uniform = |max: f64| {
        let u: f64 = rng.random_range(-1.0..=1.0);
        u * max
    };
    let mut rot = [0.0; 3];
    let mut shift = [0.0; 3];
    for a in 0..3 {
        rot[a] = uniform(aug.max_rotation_deg);
    }
    for a in 0..3 {
        shift[a] = uniform(aug.max_translation);
    }
    let flip_y = rng.random::<f64>() < aug.flip_prob_y;
    let flip_z = rng.random::<f64>() < aug.flip_prob_z;
    for a in 0..3 {
        // A rotation about axis a mixes the other two axes.
        if (0..3).any(|b| b != a && dims[b] == 1) {
            rot[a] = 0.0;
        }
        if dims[a] == 1 {
            shift[a] = 0.0;
        }
    }

    let mut out = if rot == [0.0; 3] && shift == [0.0; 3] {
        v.clone()
    } else {
        affine_warp(v, rot, shift)
    };
    if flip_y {
        out = flip_axis(&out, 1);
        swap_mirror_blocks(&mut out, layout);
    }
    if flip_z {
        out = flip_axis(&out, 2);
    }
    let voxels = out.voxels();
    for (c, &hi) in layout.upper_bounds.iter().enumerate() {
        for x in &mut out.data_mut()[c * voxels..(c + 1) * voxels] {
            *x = x.clamp(0.0, hi);
        }
    }
    out
}
