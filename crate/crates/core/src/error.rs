use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{layer}: dimension mismatch: {detail}")]
    Dimension { layer: String, detail: String },

    #[error("{layer}: non-finite value in input")]
    NonFinite { layer: String },

    #[error("input of {samples} samples is not a multiple of the {hop}-sample hop; buffer the stream first")]
    PartialHop { samples: usize, hop: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Container(#[from] ContainerError),

    #[error("embedding has zero norm")]
    ZeroNorm,

    #[error("no pseudo-speaker found after {attempts} attempts (best cosine distance {best_distance:.4}, required > {required:.4})")]
    MaxAttempts {
        attempts: usize,
        best_distance: f32,
        required: f32,
    },

    #[error("session already flushed")]
    SessionClosed,

    #[error("label {label} at frame {frame} outside [0, {num_units})")]
    LabelOutOfRange {
        label: usize,
        frame: usize,
        num_units: usize,
    },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("malformed {what}: {detail}")]
    Malformed { what: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Problems with the on-disk tensor container.
#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("truncated at byte {0}")]
    Truncated(usize),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("config block: {0}")]
    Config(String),
    #[error("tensor {0:?} missing")]
    MissingTensor(String),
    #[error("unexpected tensor {0:?}")]
    UnexpectedTensor(String),
    #[error("tensor {name:?} has shape {found:?}, expected {expected:?}")]
    Shape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor directory: {0}")]
    Directory(String),
    #[error("{0} trailing bytes after checksum")]
    Trailing(usize),
}

impl Error {
    pub(crate) fn dim(layer: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Dimension {
            layer: layer.into(),
            detail: detail.into(),
        }
    }
}
