pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite activation after {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid label {label} for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Core(#[from] dapotion_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}
