//! Labeled synthetic clips.
//!
//! Every class traces a parametric path per joint. The `*_xy` and `*_xz`
//! variants of the circle and zigzag share their image-plane trajectory and
//! differ only in depth: the `_xz` variant lets depth follow the path's
//! vertical swing while the `_xy` variant keeps it constant. A depth-collapsed
//! encoder therefore cannot tell the members of a pair apart.
//!
//! All random draws (clip placement, per-joint offsets, noise) happen in the
//! same order for every class, so two specs that differ only in class get the
//! same draws.

use std::f64::consts::TAU;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fsutil::{create_dir_all, write_atomic};
use crate::manifest::{Manifest, Record};
use crate::pose_io::{CoordFrame, PoseSequence, COORD_BINS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SynthClass {
    CircleXy,
    CircleXz,
    LineX,
    LineZ,
    ZigzagXy,
    ZigzagXz,
}

impl SynthClass {
    pub const ALL: [SynthClass; 6] = [
        SynthClass::CircleXy,
        SynthClass::CircleXz,
        SynthClass::LineX,
        SynthClass::LineZ,
        SynthClass::ZigzagXy,
        SynthClass::ZigzagXz,
    ];

    /// The four classes forming the two depth-only pairs.
    pub const DEPTH_PAIRS: [SynthClass; 4] = [
        SynthClass::CircleXy,
        SynthClass::CircleXz,
        SynthClass::ZigzagXy,
        SynthClass::ZigzagXz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthClass::CircleXy => "circle_xy",
            SynthClass::CircleXz => "circle_xz",
            SynthClass::LineX => "line_x",
            SynthClass::LineZ => "line_z",
            SynthClass::ZigzagXy => "zigzag_xy",
            SynthClass::ZigzagXz => "zigzag_xz",
        }
    }
}

impl FromStr for SynthClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

impl std::fmt::Display for SynthClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub class: SynthClass,
    pub frames: usize,
    pub joints: usize,
    pub amplitude: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(class: SynthClass) -> Self {
        Self {
            class,
            frames: 24,
            joints: 4,
            amplitude: 60.0,
            noise_std: 2.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::TooFewFrames(self.frames));
        }
        if self.joints == 0 {
            return Err(Error::Config("synthetic clips need at least one joint".into()));
        }
        if !(self.amplitude > 0.0) || !self.amplitude.is_finite() {
            return Err(Error::Config(format!("amplitude {} must be > 0", self.amplitude)));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(Error::Config(format!("noise_std {} must be >= 0", self.noise_std)));
        }
        Ok(())
    }
}

/// Triangle wave with period 1 and range [-1, 1].
fn triangle(u: f64) -> f64 {
    let f = u - u.floor();
    4.0 * (f - 0.5).abs() - 1.0
}

const MAX_COORD: f64 = COORD_BINS - 1.0;

/// Generates one labeled clip in the image frame of a 256x256 image.
pub fn generate_clip(spec: &SynthSpec) -> Result<PoseSequence> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a = spec.amplitude;

    let center = [
        rng.random_range(96.0..160.0),
        rng.random_range(96.0..160.0),
        rng.random_range(96.0..160.0),
    ];
    let phase0 = rng.random_range(0.0..TAU);
    let direction = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let joint_params: Vec<([f64; 3], f64)> = (0..spec.joints)
        .map(|_| {
            let offset = [
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            ];
            (offset, rng.random_range(0.0..0.6))
        })
        .collect();
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;

    let mut positions = Vec::with_capacity(spec.frames * spec.joints);
    for t in 0..spec.frames {
        let s = t as f64 / (spec.frames - 1) as f64;
        for (offset, lag) in &joint_params {
            let theta = phase0 + direction * TAU * s + lag;
            let sweep = direction * (2.0 * s - 1.0);
            let wave = 0.5 * triangle(3.0 * s + lag / TAU);
            // (dx, dy, dz) relative to the joint's rest position.
            let d = match spec.class {
                SynthClass::CircleXy => [a * theta.cos(), a * theta.sin(), 0.0],
                SynthClass::CircleXz => [a * theta.cos(), a * theta.sin(), a * theta.sin()],
                SynthClass::LineX => [a * sweep, 0.0, 0.0],
                SynthClass::LineZ => [0.0, 0.0, a * sweep],
                SynthClass::ZigzagXy => [a * sweep, a * wave, 0.0],
                SynthClass::ZigzagXz => [a * sweep, a * wave, a * wave],
            };
            let jitter = [
                noise.sample(&mut rng),
                noise.sample(&mut rng),
                noise.sample(&mut rng),
            ];
            positions.push(std::array::from_fn(|k| {
                (center[k] + offset[k] + d[k] + jitter[k]).clamp(0.0, MAX_COORD)
            }));
        }
    }
    let mut clip = PoseSequence::new(spec.frames, spec.joints, positions, (256, 256))?;
    clip.frame = CoordFrame::Image;
    Ok(clip.with_label(spec.class.name()))
}

/// SplitMix64 finalizer; derives independent per-clip seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct DatasetSplit {
    pub train: Manifest,
    pub test: Manifest,
}

/// Writes `n_per_class` clips per template under `out_dir/clips/` and the
/// `train.tsv` / `test.tsv` manifests. Each class contributes
/// `round(n_per_class * split)` clips to the training side.
pub fn generate_dataset(
    templates: &[SynthSpec],
    n_per_class: usize,
    split: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<DatasetSplit> {
    if templates.is_empty() {
        return Err(Error::Config("empty class list".into()));
    }
    if n_per_class < 2 {
        return Err(Error::Config(format!("n_per_class {n_per_class} must be >= 2")));
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::Config(format!("split {split} must lie in (0, 1)")));
    }
    let n_train = ((n_per_class as f64 * split).round() as usize).clamp(1, n_per_class - 1);

    let clip_dir = out_dir.join("clips");
    create_dir_all(&clip_dir)?;
    let mut train = Manifest::default();
    let mut test = Manifest::default();
    for (k, template) in templates.iter().enumerate() {
        for i in 0..n_per_class {
            let spec = SynthSpec {
                seed: mix_seed(seed, ((k as u64) << 32) | i as u64),
                ..template.clone()
            };
            let clip = generate_clip(&spec)?;
            let path = clip_dir.join(format!("{}_{i:04}.json", spec.class.name()));
            write_atomic(&path, clip.to_json().as_bytes())?;
            let record = Record {
                path,
                label: spec.class.name().to_string(),
            };
            if i < n_train {
                train.records.push(record);
            } else {
                test.records.push(record);
            }
        }
    }
    write_atomic(&out_dir.join("train.tsv"), train.to_text(out_dir).as_bytes())?;
    write_atomic(&out_dir.join("test.tsv"), test.to_text(out_dir).as_bytes())?;
    Ok(DatasetSplit { train, test })
}
