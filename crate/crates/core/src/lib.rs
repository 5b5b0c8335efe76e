//! Depth-aware pose motion (DA-PoTion) descriptors.
//!
//! The pipeline turns per-frame 3D joint trajectories into a fixed-size
//! volumetric descriptor:
//!
//! 1. [`pose_io`] parses clips, moves joints from bounding-box to image
//!    coordinates and maps them onto a voxel grid.
//! 2. [`encoder`] rasterizes one Gaussian heatmap per joint and frame,
//!    colorizes it with a temporal code, sums over time and normalizes the
//!    result with one of the U / I / N aggregation schemes.
//! 3. [`descriptor`] and [`render`] persist and visualize descriptors.
//! 4. [`fusion`] averages per-class scores from independent models.
//!
//! [`synth`] generates labeled clips whose classes can differ only in depth.

pub mod descriptor;
pub mod encoder;
pub mod error;
pub mod fsutil;
pub mod fusion;
pub mod manifest;
pub mod pose_io;
pub mod render;
pub mod synth;

pub use encoder::{ChannelVolume, CodeVector, DAPotion, EncoderConfig, Scheme};
pub use error::{Error, Result};
pub use pose_io::{BBox, BBoxSequence, GridPoseSequence, GridSpec, PoseSequence};
