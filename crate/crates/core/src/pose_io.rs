//! Pose-sequence ingestion and coordinate transforms.
//!
//! Pose files are JSON documents, one clip per file:
//!
//! ```json
//! {"frames": 2, "joints": 1, "image_size": [320, 240],
//!  "positions": [[[10.0, 20.0, 128.0]], [[11.0, 21.0, 127.5]]],
//!  "bboxes": [[0, 0, 320, 240], [0, 0, 320, 240]],
//!  "label": "wave", "joint_names": ["wrist_L"]}
//! ```
//!
//! `x`/`y` are bins of the pose regressor's bounding-box frame and `z` is the
//! discretized absolute camera depth; all three live in `[0, 256)`.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of discretization bins of every regressor coordinate.
pub const COORD_BINS: f64 = 256.0;

/// Which frame the `x`/`y` components of a [`PoseSequence`] are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordFrame {
    BoundingBox,
    Image,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x_ul: f64,
    pub y_ul: f64,
    pub width: f64,
    pub height: f64,
}

/// One bounding box per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BBoxSequence(Vec<BBox>);

impl BBoxSequence {
    pub fn new(boxes: Vec<BBox>) -> Result<Self> {
        for (frame, b) in boxes.iter().enumerate() {
            let vals = [b.x_ul, b.y_ul, b.width, b.height];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidBox {
                    frame,
                    reason: "non-finite value".into(),
                });
            }
            if b.width <= 0.0 || b.height <= 0.0 {
                return Err(Error::InvalidBox {
                    frame,
                    reason: format!("non-positive size {}x{}", b.width, b.height),
                });
            }
        }
        Ok(Self(boxes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn boxes(&self) -> &[BBox] {
        &self.0
    }
}

/// A clip of `T` frames with `J` joints per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseSequence {
    num_frames: usize,
    num_joints: usize,
    /// Row-major `T x J` joint positions.
    positions: Vec<[f64; 3]>,
    pub image_size: (u32, u32),
    pub label: Option<String>,
    pub joint_names: Option<Vec<String>>,
    pub bboxes: Option<BBoxSequence>,
    pub frame: CoordFrame,
}

impl PoseSequence {
    /// Builds a sequence in the regressor's coordinate range, checking every
    /// invariant a parsed file must satisfy.
    pub fn new(
        num_frames: usize,
        num_joints: usize,
        positions: Vec<[f64; 3]>,
        image_size: (u32, u32),
    ) -> Result<Self> {
        if num_frames < 2 {
            return Err(Error::TooFewFrames(num_frames));
        }
        if num_joints == 0 {
            return Err(Error::Malformed("joints must be at least 1".into()));
        }
        if positions.len() != num_frames * num_joints {
            return Err(Error::RowLength(format!(
                "expected {} positions, got {}",
                num_frames * num_joints,
                positions.len()
            )));
        }
        for (i, p) in positions.iter().enumerate() {
            for &value in p {
                if !value.is_finite() || !(0.0..COORD_BINS).contains(&value) {
                    return Err(Error::CoordinateOutOfRange {
                        frame: i / num_joints,
                        joint: i % num_joints,
                        value,
                    });
                }
            }
        }
        Ok(Self {
            num_frames,
            num_joints,
            positions,
            image_size,
            label: None,
            joint_names: None,
            bboxes: None,
            frame: CoordFrame::BoundingBox,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_joints(&self) -> usize {
        self.num_joints
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, frame: usize, joint: usize) -> [f64; 3] {
        self.positions[frame * self.num_joints + joint]
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Pairs of joint indices whose names differ only by an `_L`/`_R` suffix.
    pub fn mirror_pairs(&self) -> Vec<(usize, usize)> {
        self.joint_names
            .as_deref()
            .map(mirror_pairs)
            .unwrap_or_default()
    }

    /// Applies the carried bounding boxes, if any; clips without boxes are
    /// already in the image frame.
    pub fn into_image_frame(self) -> Result<Self> {
        match (&self.bboxes, self.frame) {
            (Some(boxes), CoordFrame::BoundingBox) => bbox_to_image_frame(&self, boxes),
            _ => Ok(Self {
                frame: CoordFrame::Image,
                ..self
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = PoseDoc {
            frames: self.num_frames,
            joints: self.num_joints,
            image_size: [self.image_size.0, self.image_size.1],
            positions: self
                .positions
                .chunks(self.num_joints)
                .map(|row| row.iter().map(|p| p.to_vec()).collect())
                .collect(),
            bboxes: self.bboxes.as_ref().map(|b| {
                b.boxes()
                    .iter()
                    .map(|b| vec![b.x_ul, b.y_ul, b.width, b.height])
                    .collect()
            }),
            label: self.label.clone(),
            joint_names: self.joint_names.clone(),
        };
        let mut s = serde_json::to_string(&doc).expect("pose document serializes");
        s.push('\n');
        s
    }
}

pub fn mirror_pairs(names: &[String]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, name) in names.iter().enumerate() {
        if let Some(base) = name.strip_suffix("_L") {
            let partner = format!("{base}_R");
            if let Some(j) = names.iter().position(|n| *n == partner) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

#[derive(Serialize, Deserialize)]
struct PoseDoc {
    frames: usize,
    joints: usize,
    image_size: [u32; 2],
    positions: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bboxes: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joint_names: Option<Vec<String>>,
}

/// Reads one pose document. Unknown fields are ignored.
pub fn parse_pose_sequence<R: Read>(stream: R) -> Result<PoseSequence> {
    let doc: PoseDoc =
        serde_json::from_reader(stream).map_err(|e| Error::Malformed(e.to_string()))?;
    if doc.frames < 2 {
        return Err(Error::TooFewFrames(doc.frames));
    }
    if doc.positions.len() != doc.frames {
        return Err(Error::RowLength(format!(
            "declared {} frames, found {} position rows",
            doc.frames,
            doc.positions.len()
        )));
    }
    let mut positions = Vec::with_capacity(doc.frames * doc.joints);
    for (t, row) in doc.positions.iter().enumerate() {
        if row.len() != doc.joints {
            return Err(Error::RowLength(format!(
                "frame {t} has {} joints, expected {}",
                row.len(),
                doc.joints
            )));
        }
        for (j, p) in row.iter().enumerate() {
            let p: [f64; 3] = p.as_slice().try_into().map_err(|_| {
                Error::RowLength(format!(
                    "frame {t}, joint {j} has {} coordinates, expected 3",
                    p.len()
                ))
            })?;
            positions.push(p);
        }
    }
    let mut seq = PoseSequence::new(
        doc.frames,
        doc.joints,
        positions,
        (doc.image_size[0], doc.image_size[1]),
    )?;

    if let Some(names) = doc.joint_names {
        if names.len() != doc.joints {
            return Err(Error::RowLength(format!(
                "{} joint names for {} joints",
                names.len(),
                doc.joints
            )));
        }
        seq.joint_names = Some(names);
    }
    if let Some(rows) = doc.bboxes {
        if rows.len() != doc.frames {
            return Err(Error::FrameMismatch {
                poses: doc.frames,
                boxes: rows.len(),
            });
        }
        let boxes = rows
            .iter()
            .enumerate()
            .map(|(t, r)| match r.as_slice() {
                &[x_ul, y_ul, width, height] => Ok(BBox {
                    x_ul,
                    y_ul,
                    width,
                    height,
                }),
                _ => Err(Error::RowLength(format!(
                    "bbox {t} has {} values, expected 4",
                    r.len()
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        seq.bboxes = Some(BBoxSequence::new(boxes)?);
    } else {
        seq.frame = CoordFrame::Image;
    }
    seq.label = doc.label;
    Ok(seq)
}

pub fn read_pose_file(path: &std::path::Path) -> Result<PoseSequence> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_pose_sequence(std::io::BufReader::new(file))
}

/// Moves `x`/`y` from the bounding-box frame into image pixels:
/// `x_img = x_ul + (x / 256) * width`, likewise for `y`. Depth is untouched.
pub fn bbox_to_image_frame(poses: &PoseSequence, boxes: &BBoxSequence) -> Result<PoseSequence> {
    if boxes.len() != poses.num_frames {
        return Err(Error::FrameMismatch {
            poses: poses.num_frames,
            boxes: boxes.len(),
        });
    }
    // BBoxSequence::new already rejects these, but boxes may come from elsewhere.
    let boxes = BBoxSequence::new(boxes.0.clone())?;

    let mut positions = poses.positions.clone();
    for (row, b) in positions.chunks_mut(poses.num_joints).zip(boxes.boxes()) {
        for p in row {
            p[0] = b.x_ul + (p[0] / COORD_BINS) * b.width;
            p[1] = b.y_ul + (p[1] / COORD_BINS) * b.height;
        }
    }
    Ok(PoseSequence {
        positions,
        bboxes: None,
        frame: CoordFrame::Image,
        ..poses.clone()
    })
}

/// Affine map from an image/camera coordinate to a continuous voxel coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisMap {
    pub scale: f64,
    pub offset: f64,
}

impl AxisMap {
    pub fn forward(&self, v: f64) -> f64 {
        v * self.scale + self.offset
    }

    pub fn inverse(&self, voxel: f64) -> f64 {
        (voxel - self.offset) / self.scale
    }
}

/// A `W x H x D` voxel grid and the per-axis maps onto it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub axes: [AxisMap; 3],
}

impl GridSpec {
    pub const MIN_DIM: usize = 4;

    pub fn new(dims: [usize; 3], axes: [AxisMap; 3]) -> Result<Self> {
        check_dims(dims)?;
        if axes.iter().any(|a| !(a.scale > 0.0) || !a.offset.is_finite()) {
            return Err(Error::Config("grid axis scales must be positive".into()));
        }
        Ok(Self { dims, axes })
    }

    /// Default map: the image extent onto `[0, W-1] x [0, H-1]` and the
    /// regressor depth range `[0, 256)` onto `[0, D-1]`.
    pub fn fit_image(dims: [usize; 3], image_size: (u32, u32)) -> Result<Self> {
        check_dims(dims)?;
        let (w, h) = image_size;
        if w == 0 || h == 0 {
            return Err(Error::DegenerateImage(w, h));
        }
        let axis = |n: usize, extent: f64| AxisMap {
            scale: (n - 1) as f64 / extent,
            offset: 0.0,
        };
        Self::new(
            dims,
            [
                axis(dims[0], w as f64),
                axis(dims[1], h as f64),
                axis(dims[2], COORD_BINS),
            ],
        )
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Maps and clamps one point into `[0, dim-1]` per axis.
    pub fn to_voxel(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| {
            let v = self.axes[a].forward(p[a]);
            v.clamp(0.0, (self.dims[a] - 1) as f64)
        })
    }

    pub fn from_voxel(&self, v: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.axes[a].inverse(v[a]))
    }
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&d| d < GridSpec::MIN_DIM) {
        return Err(Error::Config(format!(
            "grid dims {dims:?} must be at least {} per axis",
            GridSpec::MIN_DIM
        )));
    }
    Ok(())
}

/// Joint positions in continuous voxel coordinates, clamped into the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoseSequence {
    num_frames: usize,
    num_joints: usize,
    positions: Vec<[f64; 3]>,
    pub grid: GridSpec,
    pub label: Option<String>,
    pub joint_names: Option<Vec<String>>,
}

impl GridPoseSequence {
    /// Wraps voxel-space positions, clamping each into the grid.
    pub fn new(
        num_frames: usize,
        num_joints: usize,
        positions: Vec<[f64; 3]>,
        grid: GridSpec,
    ) -> Result<Self> {
        if num_frames < 2 {
            return Err(Error::TooFewFrames(num_frames));
        }
        if num_joints == 0 || positions.len() != num_frames * num_joints {
            return Err(Error::RowLength(format!(
                "{} positions for {num_frames} frames x {num_joints} joints",
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("non-finite voxel coordinate".into()));
        }
        let positions = positions
            .into_iter()
            .map(|p| std::array::from_fn(|a| p[a].clamp(0.0, (grid.dims[a] - 1) as f64)))
            .collect();
        Ok(Self {
            num_frames,
            num_joints,
            positions,
            grid,
            label: None,
            joint_names: None,
        })
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_joints(&self) -> usize {
        self.num_joints
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, frame: usize, joint: usize) -> [f64; 3] {
        self.positions[frame * self.num_joints + joint]
    }

    /// The same clip played backwards.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.positions = self
            .positions
            .chunks(self.num_joints)
            .rev()
            .flatten()
            .copied()
            .collect();
        out
    }
}

/// Applies the grid's affine map and clamps out-of-grid joints to the boundary.
pub fn normalize_to_grid(poses: &PoseSequence, grid: &GridSpec) -> Result<GridPoseSequence> {
    let (w, h) = poses.image_size;
    if w == 0 || h == 0 {
        return Err(Error::DegenerateImage(w, h));
    }
    let positions = poses.positions.iter().map(|&p| grid.to_voxel(p)).collect();
    Ok(GridPoseSequence {
        num_frames: poses.num_frames,
        num_joints: poses.num_joints,
        positions,
        grid: *grid,
        label: poses.label.clone(),
        joint_names: poses.joint_names.clone(),
    })
}

/// Full ingestion path for one clip: bounding boxes (when present), then the
/// default grid fit for the clip's image size.
pub fn prepare_for_grid(poses: PoseSequence, dims: [usize; 3]) -> Result<GridPoseSequence> {
    let poses = poses.into_image_frame()?;
    let grid = GridSpec::fit_image(dims, poses.image_size)?;
    normalize_to_grid(&poses, &grid)
}
