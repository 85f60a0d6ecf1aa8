use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("degenerate contour (zero area or zero length)")]
    DegenerateContour,

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid texture vector: expected 24 components, got {0}")]
    TextureLength(usize),

    #[error("color component out of range [0, 255]: {0}")]
    ColorRange(f64),

    #[error("description `{0}` has no components")]
    EmptyDescription(String),

    #[error("description `{id}` is unsatisfiable: components {first} and {second} overlap")]
    Unsatisfiable {
        id: String,
        first: usize,
        second: usize,
    },

    #[error("image `{0}` has no regions")]
    EmptyImage(String),

    #[error("regions {first} and {second} of image `{image}` overlap")]
    OverlappingRegions {
        image: String,
        first: usize,
        second: usize,
    },

    #[error("degenerate anchor: source or target points coincide")]
    DegenerateAnchor,

    #[error("zero-energy Fourier descriptor")]
    ZeroEnergy,

    #[error("descriptor length mismatch: {0} vs {1}")]
    DescriptorMismatch(usize, usize),

    #[error("not enough boundary points: need at least {need}, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("empty pixel set")]
    EmptyRegion,

    #[error("instance too large for exhaustive search (n = {n}, m = {m}, limit {limit})")]
    InstanceTooLarge { n: usize, m: usize, limit: usize },

    #[error("unknown shape `{0}`")]
    UnknownShape(String),

    #[error("unknown description `{0}`")]
    UnknownDescription(String),

    #[error("unknown image `{0}`")]
    UnknownImage(String),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("no foreground region found in raster")]
    NoForeground,

    #[error("ranking has no strict preference pairs")]
    NoPreferencePairs,

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("store integrity error: {0}")]
    Integrity(String),

    #[error("unsupported store version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image decode error: {0}")]
    Decode(String),
}
