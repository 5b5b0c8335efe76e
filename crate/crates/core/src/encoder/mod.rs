//! Volumetric descriptor encoding.
//!
//! For each joint the encoder rasterizes one Gaussian heatmap per frame,
//! weights it by the frame's temporal code vector, sums the colorized
//! heatmaps over the clip and normalizes the sum:
//!
//! * `U`: every channel divided by its own maximum,
//! * `I`: the channel sum of `U`,
//! * `N`: `U / (epsilon + I)`,
//! * `NUI`: `N`, `U` and `I` stacked in that order.
//!
//! Joint blocks are stacked in joint order.

mod resample;

pub use resample::{collapse_depth, resample, sample_trilinear};

use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose_io::GridPoseSequence;

/// Temporal code `o(t)`: `C` nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeVector(Vec<f64>);

impl CodeVector {
    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Code vector of frame `t` (1-based) in a clip of `frames` frames.
///
/// With `s = (t-1)/(T-1)`, channel `c` (1-based) is a hat function peaking
/// at `s_c = (C-c)/(C-1)`: `o_c = max(0, 1 - |s - s_c| (C-1))`. For two
/// channels this is exactly `(s, 1-s)`.
pub fn color_code(t: usize, frames: usize, channels: usize) -> Result<CodeVector> {
    if frames < 2 {
        return Err(Error::TooFewFrames(frames));
    }
    if channels < 2 {
        return Err(Error::Config(format!("channels {channels} must be >= 2")));
    }
    if t < 1 || t > frames {
        return Err(Error::Config(format!("frame index {t} outside 1..={frames}")));
    }
    let s = (t - 1) as f64 / (frames - 1) as f64;
    if channels == 2 {
        return Ok(CodeVector(vec![s, 1.0 - s]));
    }
    let span = (channels - 1) as f64;
    Ok(CodeVector(
        (1..=channels)
            .map(|c| {
                let node = (channels - c) as f64 / span;
                (1.0 - (s - node).abs() * span).max(0.0)
            })
            .collect(),
    ))
}

/// Dense `W x H x D` grid with `C'` channels, stored channel-major with the
/// depth index varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelVolume {
    dims: [usize; 3],
    channels: usize,
    data: Vec<f32>,
}

impl ChannelVolume {
    pub fn zeros(dims: [usize; 3], channels: usize) -> Self {
        Self {
            dims,
            channels,
            data: vec![0.0; channels * dims.iter().product::<usize>()],
        }
    }

    pub fn from_data(dims: [usize; 3], channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * dims.iter().product::<usize>() {
            return Err(Error::Shape(format!(
                "{} values for {channels} channels of {dims:?}",
                data.len()
            )));
        }
        Ok(Self {
            dims,
            channels,
            data,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn voxels(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, x: usize, y: usize, z: usize) -> usize {
        ((c * self.dims[0] + x) * self.dims[1] + y) * self.dims[2] + z
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(c, x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, x: usize, y: usize, z: usize, v: f32) {
        let i = self.index(c, x, y, z);
        self.data[i] = v;
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.voxels();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.voxels();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies a contiguous channel range into a new volume.
    pub fn channel_range(&self, range: Range<usize>) -> Self {
        let n = self.voxels();
        Self {
            dims: self.dims,
            channels: range.len(),
            data: self.data[range.start * n..range.end * n].to_vec(),
        }
    }

    /// Concatenates volumes of equal dims along the channel axis.
    pub fn stack(parts: &[&ChannelVolume]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("nothing to stack".into()))?;
        let mut out = Self::zeros(first.dims, 0);
        for p in parts {
            if p.dims != first.dims {
                return Err(Error::Shape(format!("stacking {:?} onto {:?}", p.dims, first.dims)));
            }
            out.data.extend_from_slice(&p.data);
            out.channels += p.channels;
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.dims == other.dims && self.channels == other.channels
    }
}

/// Unnormalized isotropic Gaussian heatmap with peak 1 at `center`,
/// zero beyond `truncation_radius * sigma`.
pub fn rasterize_heatmap(
    center: [f64; 3],
    dims: [usize; 3],
    sigma: f64,
    truncation_radius: f64,
) -> ChannelVolume {
    let mut out = ChannelVolume::zeros(dims, 1);
    for_each_support_voxel(center, dims, sigma, truncation_radius, |i, h| {
        out.data[i] = h;
    });
    out
}

/// Visits every voxel inside the truncated Gaussian support with its flat
/// single-channel index and heatmap value.
#[inline]
fn for_each_support_voxel(
    center: [f64; 3],
    dims: [usize; 3],
    sigma: f64,
    truncation_radius: f64,
    mut f: impl FnMut(usize, f32),
) {
    let radius = truncation_radius * sigma;
    let radius_sq = radius * radius;
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    if (0..3).any(|a| center[a] - radius > (dims[a] - 1) as f64 || center[a] + radius < 0.0) {
        return;
    }
    let bounds: [(usize, usize); 3] = std::array::from_fn(|a| {
        let lo = (center[a] - radius).ceil().max(0.0);
        let hi = (center[a] + radius).floor().min((dims[a] - 1) as f64);
        (lo as usize, hi as usize)
    });
    for x in bounds[0].0..=bounds[0].1 {
        let dx = x as f64 - center[0];
        for y in bounds[1].0..=bounds[1].1 {
            let dy = y as f64 - center[1];
            let row = (x * dims[1] + y) * dims[2];
            for z in bounds[2].0..=bounds[2].1 {
                let dz = z as f64 - center[2];
                let d2 = dx * dx + dy * dy + dz * dz;
                if d2 <= radius_sq {
                    f(row + z, (-d2 * inv_two_var).exp() as f32);
                }
            }
        }
    }
}

/// `out[c] = h * o_c`.
pub fn colorize(h: &ChannelVolume, code: &CodeVector) -> Result<ChannelVolume> {
    if h.channels != 1 {
        return Err(Error::Shape(format!("colorize expects 1 channel, got {}", h.channels)));
    }
    let mut out = ChannelVolume::zeros(h.dims, code.len());
    for (c, &o) in code.0.iter().enumerate() {
        let o = o as f32;
        for (dst, &src) in out.channel_mut(c).iter_mut().zip(&h.data) {
            *dst = src * o;
        }
    }
    Ok(out)
}

/// Elementwise sum of colorized heatmaps over time.
pub fn aggregate_sum(colorized: &[ChannelVolume]) -> Result<ChannelVolume> {
    let first = colorized
        .first()
        .ok_or_else(|| Error::Shape("cannot aggregate an empty sequence".into()))?;
    let mut sum = ChannelVolume::zeros(first.dims, first.channels);
    for v in colorized {
        if !v.same_shape(first) {
            return Err(Error::Shape(format!(
                "aggregating {:?}x{} with {:?}x{}",
                v.dims, v.channels, first.dims, first.channels
            )));
        }
        for (acc, &x) in sum.data.iter_mut().zip(&v.data) {
            *acc += x;
        }
    }
    Ok(sum)
}

/// Divides each channel by its own maximum; all-zero channels stay zero.
pub fn normalize_u(s: &ChannelVolume) -> ChannelVolume {
    let mut out = s.clone();
    for c in 0..out.channels {
        let ch = out.channel_mut(c);
        let max = ch.iter().copied().fold(0.0f32, f32::max);
        if max > 0.0 {
            for v in ch {
                *v /= max;
            }
        }
    }
    out
}

/// Channel sum of a `U` volume.
pub fn intensity_i(u: &ChannelVolume) -> ChannelVolume {
    let mut out = ChannelVolume::zeros(u.dims, 1);
    for c in 0..u.channels {
        for (acc, &x) in out.data.iter_mut().zip(u.channel(c)) {
            *acc += x;
        }
    }
    out
}

/// `N = U / (epsilon + I)` voxelwise.
pub fn normalize_n(u: &ChannelVolume, i: &ChannelVolume, epsilon: f64) -> Result<ChannelVolume> {
    if i.channels != 1 || i.dims != u.dims {
        return Err(Error::Shape(format!(
            "intensity {:?}x{} does not match {:?}",
            i.dims, i.channels, u.dims
        )));
    }
    let eps = epsilon as f32;
    let mut out = u.clone();
    for c in 0..out.channels {
        for (v, &int) in out.channel_mut(c).iter_mut().zip(&i.data) {
            *v /= eps + int;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    U,
    I,
    N,
    Nui,
}

impl Scheme {
    pub fn tag(self) -> u8 {
        match self {
            Scheme::U => 0,
            Scheme::I => 1,
            Scheme::N => 2,
            Scheme::Nui => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        [Scheme::U, Scheme::I, Scheme::N, Scheme::Nui]
            .into_iter()
            .find(|s| s.tag() == tag)
    }

    /// Channels contributed by one joint.
    pub fn channels_per_joint(self, code_channels: usize) -> usize {
        match self {
            Scheme::U | Scheme::N => code_channels,
            Scheme::I => 1,
            Scheme::Nui => 2 * code_channels + 1,
        }
    }

    /// Largest legal voxel value of a channel at `offset` within a joint block.
    pub fn channel_upper_bound(self, code_channels: usize, offset: usize) -> f32 {
        let is_intensity = match self {
            Scheme::I => true,
            Scheme::Nui => offset == 2 * code_channels,
            Scheme::U | Scheme::N => false,
        };
        if is_intensity {
            code_channels as f32
        } else {
            1.0
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" => Ok(Scheme::U),
            "i" => Ok(Scheme::I),
            "n" => Ok(Scheme::N),
            "nui" | "n+u+i" => Ok(Scheme::Nui),
            _ => Err(Error::Config(format!("unknown scheme {s:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::U => "u",
            Scheme::I => "i",
            Scheme::N => "n",
            Scheme::Nui => "nui",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dims: [usize; 3],
    /// Gaussian standard deviation in voxels.
    pub sigma: f64,
    pub channels: usize,
    pub scheme: Scheme,
    /// Support cutoff in multiples of `sigma`.
    pub truncation_radius: f64,
    pub epsilon: f64,
}

impl EncoderConfig {
    /// Defaults for a cubic grid of side `grid`: `sigma = 4 * grid / 64`,
    /// three channels, `NUI`, 3-sigma truncation, `epsilon = 1`.
    pub fn cube(grid: usize) -> Self {
        Self {
            dims: [grid; 3],
            sigma: Self::default_sigma(grid),
            channels: 3,
            scheme: Scheme::Nui,
            truncation_radius: 3.0,
            epsilon: 1.0,
        }
    }

    pub fn default_sigma(grid: usize) -> f64 {
        4.0 * grid as f64 / 64.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < crate::pose_io::GridSpec::MIN_DIM) {
            return Err(Error::Config(format!("grid {:?} too small", self.dims)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma {} must be > 0", self.sigma)));
        }
        if self.channels < 2 {
            return Err(Error::Config(format!("channels {} must be >= 2", self.channels)));
        }
        if self.channels > u8::MAX as usize {
            return Err(Error::Config(format!("channels {} too large", self.channels)));
        }
        if !(self.truncation_radius >= 1.0) {
            return Err(Error::Config(format!(
                "truncation radius {} must be >= 1",
                self.truncation_radius
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {} must be > 0", self.epsilon)));
        }
        Ok(())
    }

    /// Stable 64-bit digest of the configuration.
    pub fn hash(&self) -> u64 {
        use std::hash::Hasher;
        let mut h = fnv::FnvHasher::default();
        h.write(serde_json::to_string(self).expect("config serializes").as_bytes());
        h.finish()
    }
}

/// Stacked per-joint descriptor of one clip.
#[derive(Clone, Debug, PartialEq)]
pub struct DAPotion {
    pub scheme: Scheme,
    pub joints: usize,
    pub code_channels: usize,
    pub volume: ChannelVolume,
    pub source_id: String,
    pub config_hash: u64,
}

impl DAPotion {
    pub fn new(
        scheme: Scheme,
        joints: usize,
        code_channels: usize,
        volume: ChannelVolume,
    ) -> Result<Self> {
        let expected = joints * scheme.channels_per_joint(code_channels);
        if volume.channels() != expected {
            return Err(Error::Shape(format!(
                "{scheme} with J={joints}, C={code_channels} needs {expected} channels, got {}",
                volume.channels()
            )));
        }
        Ok(Self {
            scheme,
            joints,
            code_channels,
            volume,
            source_id: String::new(),
            config_hash: 0,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.volume.dims()
    }

    pub fn channels(&self) -> usize {
        self.volume.channels()
    }

    pub fn channels_per_joint(&self) -> usize {
        self.scheme.channels_per_joint(self.code_channels)
    }

    /// Channel range of joint `j`.
    pub fn joint_block(&self, j: usize) -> Range<usize> {
        let n = self.channels_per_joint();
        j * n..(j + 1) * n
    }

    /// Upper bound of the legal value range of every channel.
    pub fn channel_upper_bounds(&self) -> Vec<f32> {
        let n = self.channels_per_joint();
        (0..self.channels())
            .map(|ch| self.scheme.channel_upper_bound(self.code_channels, ch % n))
            .collect()
    }
}

/// Temporal sum `S_j` of one joint's colorized heatmaps, accumulated only
/// over each frame's truncated support. Produces the same values as
/// rasterize -> colorize -> aggregate_sum on full volumes.
fn joint_temporal_sum(
    poses: &GridPoseSequence,
    joint: usize,
    codes: &[Vec<f32>],
    config: &EncoderConfig,
) -> ChannelVolume {
    let c = config.channels;
    let mut sum = ChannelVolume::zeros(config.dims, c);
    let n = sum.voxels();
    for (t, code) in codes.iter().enumerate() {
        let center = poses.position(t, joint);
        let data = &mut sum.data;
        for_each_support_voxel(center, config.dims, config.sigma, config.truncation_radius, |i, h| {
            for (ch, &o) in code.iter().enumerate() {
                data[ch * n + i] += h * o;
            }
        });
    }
    sum
}

/// One joint's block for the configured scheme.
fn joint_block(s: &ChannelVolume, config: &EncoderConfig) -> Result<ChannelVolume> {
    let u = normalize_u(s);
    Ok(match config.scheme {
        Scheme::U => u,
        Scheme::I => intensity_i(&u),
        Scheme::N => normalize_n(&u, &intensity_i(&u), config.epsilon)?,
        Scheme::Nui => {
            let i = intensity_i(&u);
            let n = normalize_n(&u, &i, config.epsilon)?;
            ChannelVolume::stack(&[&n, &u, &i])?
        }
    })
}

/// Encodes one clip already mapped onto the voxel grid.
pub fn encode_clip(poses: &GridPoseSequence, config: &EncoderConfig) -> Result<DAPotion> {
    config.validate()?;
    if poses.grid.dims != config.dims {
        return Err(Error::Shape(format!(
            "poses on grid {:?}, encoder configured for {:?}",
            poses.grid.dims, config.dims
        )));
    }
    let frames = poses.num_frames();
    let codes = (1..=frames)
        .map(|t| {
            color_code(t, frames, config.channels)
                .map(|o| o.0.iter().map(|&w| w as f32).collect::<Vec<f32>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let blocks = (0..poses.num_joints())
        .map(|j| joint_block(&joint_temporal_sum(poses, j, &codes, config), config))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ChannelVolume> = blocks.iter().collect();
    let mut out = DAPotion::new(
        config.scheme,
        poses.num_joints(),
        config.channels,
        ChannelVolume::stack(&refs)?,
    )?;
    out.config_hash = config.hash();
    out.source_id = poses.label.clone().unwrap_or_default();
    Ok(out)
}

/// Encodes clips on a pool of `workers` threads; output order follows input.
pub fn encode_many(
    clips: &[GridPoseSequence],
    config: &EncoderConfig,
    workers: usize,
) -> Result<Vec<Result<DAPotion>>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| clips.par_iter().map(|c| encode_clip(c, config)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose_io::GridSpec;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn two_channel_code_endpoints() {
        assert_eq!(color_code(1, 10, 2).unwrap().weights(), &[0.0, 1.0]);
        assert_eq!(color_code(10, 10, 2).unwrap().weights(), &[1.0, 0.0]);
        assert_eq!(color_code(5, 9, 2).unwrap().weights(), &[0.5, 0.5]);
    }

    #[test]
    fn three_channel_hat_values() {
        assert!(close(color_code(5, 9, 3).unwrap().weights(), &[0.0, 1.0, 0.0], 1e-15));
        assert!(close(color_code(3, 9, 3).unwrap().weights(), &[0.0, 0.5, 0.5], 1e-15));
    }

    #[test]
    fn color_code_errors() {
        assert!(color_code(0, 5, 2).is_err());
        assert!(color_code(6, 5, 2).is_err());
        assert!(matches!(color_code(1, 1, 2), Err(Error::TooFewFrames(1))));
        assert!(color_code(1, 5, 1).is_err());
    }

    #[test]
    fn heatmap_peak_sigma_and_truncation() {
        let h = rasterize_heatmap([3.0, 4.0, 5.0], [8, 8, 8], 1.5, 3.0);
        assert_eq!(h.get(0, 3, 4, 5), 1.0);
        let at_sigma = rasterize_heatmap([3.0, 4.0, 5.0], [8, 8, 8], 1.0, 3.0).get(0, 4, 4, 5);
        assert!((at_sigma as f64 - (-0.5f64).exp()).abs() < 1e-7);
        let narrow = rasterize_heatmap([3.0, 4.0, 5.0], [8, 8, 8], 1.0, 1.0);
        assert_eq!(narrow.get(0, 5, 4, 5), 0.0);
        assert!(narrow.get(0, 4, 4, 5) > 0.0);
    }

    #[test]
    fn colorize_examples() {
        let h = rasterize_heatmap([2.0, 2.0, 2.0], [6, 6, 6], 1.0, 3.0);
        let c = colorize(&h, &CodeVector(vec![1.0, 0.0])).unwrap();
        assert_eq!(c.channel(0), h.data());
        assert!(c.channel(1).iter().all(|&v| v == 0.0));
        let c = colorize(&h, &CodeVector(vec![0.5, 0.5])).unwrap();
        for (a, &b) in c.channel(1).iter().zip(h.data()) {
            assert_eq!(*a, b / 2.0);
        }
    }

    #[test]
    fn static_joint_sum_matches_code_total() {
        // T=3, C=2: codes (0,1), (0.5,0.5), (1,0).
        let frames: Vec<ChannelVolume> = (1..=3)
            .map(|t| {
                let h = rasterize_heatmap([2.0, 2.0, 2.0], [5, 5, 5], 1.0, 3.0);
                colorize(&h, &color_code(t, 3, 2).unwrap()).unwrap()
            })
            .collect();
        let s = aggregate_sum(&frames).unwrap();
        assert_eq!((s.get(0, 2, 2, 2), s.get(1, 2, 2, 2)), (1.5, 1.5));
        assert!(aggregate_sum(&[]).is_err());
        let odd = ChannelVolume::zeros([5, 5, 5], 3);
        assert!(aggregate_sum(&[frames[0].clone(), odd]).is_err());
    }

    #[test]
    fn u_normalization_guards_empty_channels() {
        let mut s = ChannelVolume::zeros([4, 4, 4], 2);
        s.set(0, 1, 1, 1, 3.0);
        s.set(0, 2, 1, 1, 1.5);
        let u = normalize_u(&s);
        assert_eq!(u.get(0, 1, 1, 1), 1.0);
        assert_eq!(u.get(0, 2, 1, 1), 0.5);
        assert!(u.channel(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn n_normalization_example() {
        let mut u = ChannelVolume::zeros([4, 4, 4], 2);
        u.set(0, 0, 0, 0, 1.0);
        u.set(1, 0, 0, 0, 1.0);
        let i = intensity_i(&u);
        assert_eq!(i.get(0, 0, 0, 0), 2.0);
        let n = normalize_n(&u, &i, 1.0).unwrap();
        assert!((n.get(0, 0, 0, 0) - 1.0 / 3.0).abs() < 1e-7);
        assert_eq!(n.get(0, 1, 0, 0), 0.0);
        assert!(normalize_n(&u, &u, 1.0).is_err());
    }

    #[test]
    fn channel_counts_follow_scheme() {
        assert_eq!(Scheme::Nui.channels_per_joint(3) * 2, 14);
        assert_eq!(Scheme::U.channels_per_joint(3) * 16, 48);
        assert_eq!(Scheme::I.channels_per_joint(3), 1);
        let grid = GridSpec::fit_image([8, 8, 8], (8, 8)).unwrap();
        let poses = GridPoseSequence::new(2, 2, vec![[3.0, 3.0, 3.0]; 4], grid).unwrap();
        let mut cfg = EncoderConfig::cube(8);
        for (scheme, expected) in [(Scheme::U, 6), (Scheme::I, 2), (Scheme::N, 6), (Scheme::Nui, 14)] {
            cfg.scheme = scheme;
            assert_eq!(encode_clip(&poses, &cfg).unwrap().channels(), expected);
        }
    }

    #[test]
    fn encode_rejects_mismatched_grid() {
        let grid = GridSpec::fit_image([8, 8, 8], (8, 8)).unwrap();
        let poses = GridPoseSequence::new(2, 1, vec![[3.0, 3.0, 3.0]; 2], grid).unwrap();
        assert!(encode_clip(&poses, &EncoderConfig::cube(16)).is_err());
        let mut cfg = EncoderConfig::cube(8);
        cfg.channels = 1;
        assert!(encode_clip(&poses, &cfg).is_err());
    }

    #[test]
    fn scheme_parsing_and_tags() {
        for s in [Scheme::U, Scheme::I, Scheme::N, Scheme::Nui] {
            assert_eq!(Scheme::from_tag(s.tag()), Some(s));
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("x".parse::<Scheme>().is_err());
    }
}
