use std::path::PathBuf;

/// Errors for the whole crate. Variants are grouped by how a caller should
/// react: configuration problems, malformed or inconsistent data, and
/// numeric degeneracies.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("json error on {path}: {msg}")]
    Json { path: PathBuf, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("face index {index} out of range for {count} vertices")]
    FaceIndex { index: usize, count: usize },

    #[error("degenerate rotation input: {0}")]
    DegenerateRotation(String),

    #[error("matrix is not orthonormal (max deviation {dev:.3e})")]
    NotOrthonormal { dev: f64 },

    /// Projection was asked for points at non-positive depth. `indices`
    /// lists every offending point.
    #[error("{} point(s) behind the camera, indices {indices:?}", indices.len())]
    BehindCamera { indices: Vec<usize> },

    #[error("size mismatch for {what}: expected {expected}, got {got}")]
    SizeMismatch { what: String, expected: usize, got: usize },

    #[error("segment {segment} has no merge-map entry (map covers {len} segments)")]
    UnmappedSegment { segment: usize, len: usize },

    #[error("part {part} ({name}) has no vertices after merging")]
    EmptyPart { part: usize, name: String },

    #[error("invalid part id {id} (template set has {count} parts)")]
    InvalidPartId { id: usize, count: usize },

    #[error("degenerate point configuration: {0}")]
    DegenerateFit(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("no visible part")]
    NoVisiblePart,

    #[error("inconsistent data: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model bundle error: {0}")]
    Bundle(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn json(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Json { path: path.into(), msg: err.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
