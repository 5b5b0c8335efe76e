use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed pose document: {0}")]
    Malformed(String),

    #[error("too few frames: {0} (need at least 2)")]
    TooFewFrames(usize),

    #[error("coordinate out of range at frame {frame}, joint {joint}: {value}")]
    CoordinateOutOfRange { frame: usize, joint: usize, value: f64 },

    #[error("inconsistent row length: {0}")]
    RowLength(String),

    #[error("frame count mismatch: poses have {poses}, boxes have {boxes}")]
    FrameMismatch { poses: usize, boxes: usize },

    #[error("invalid bounding box at frame {frame}: {reason}")]
    InvalidBox { frame: usize, reason: String },

    #[error("degenerate image size {0}x{1}")]
    DegenerateImage(u32, u32),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown synthetic class: {0}")]
    UnknownClass(String),

    #[error("descriptor format: {0}")]
    Format(String),

    #[error("score sets: {0}")]
    Scores(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
