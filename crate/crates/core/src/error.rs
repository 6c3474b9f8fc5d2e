use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown item id `{0}`")]
    UnknownId(String),
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("empty item id")]
    EmptyId,
    #[error("unknown level `{0}`")]
    UnknownLevel(String),
    #[error("duplicate level `{0}` in level order")]
    DuplicateLevel(String),
    #[error("invalid level pair ({0}, {1}): the first level must be strictly easier")]
    InvalidLevelPair(usize, usize),
    #[error("level `{0}` has no items")]
    EmptyLevel(String),
    #[error("fewer than two distinct levels are present")]
    SingleLevel,
    #[error("constraint mode yields no pairs")]
    EmptyConstraintSet,
    #[error("constraint index {index} out of bounds for {len} items")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate direction: difference vectors cancel (norm {norm:e})")]
    DegenerateDirection { norm: f64 },
    #[error("anchor `{0}` has no items in other levels to compare against")]
    NoReferenceItems(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("input is constant; rank correlation is undefined")]
    ConstantInput,
    #[error("at least {needed} samples required, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("level pair ({0}, {1}) missing from report `{2}`")]
    MissingPair(String, String, String),
    #[error("each class needs at least two examples")]
    SingleClass,
    #[error("train, validation and test splits share item `{0}`")]
    OverlappingSplits(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: expected dimension {expected}, found {found}")]
    DimMismatch { line: usize, expected: usize, found: usize },
    #[error("item `{0}` has a zero vector, which cannot be normalized")]
    ZeroVector(String),
    #[error("item `{id}` has norm {norm}, not unit length")]
    NotUnitNorm { id: String, norm: f64 },
    #[error("{0} is empty")]
    EmptyFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
