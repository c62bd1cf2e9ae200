use thiserror::Error;

pub type SquareKey = (i64, i64, i32);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate point at index {index}")]
    DuplicatePoint { index: usize },
    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },
    #[error("negative data value {value} at index {index}")]
    NegativeValue { index: usize, value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty knot list")]
    EmptyKnots,
    #[error("knots must be strictly increasing (position {index})")]
    UnsortedKnots { index: usize },
    #[error("direction_samples must be at least 6, got {0}")]
    TooFewDirections(usize),
    #[error("quadtree depth limit exceeded at square {0:?}")]
    MaxDepthExceeded(SquareKey),
    #[error("data in 2Q of square {0:?} is not graph-like after rotation")]
    NotGraphLike(SquareKey),
    #[error("no representative point at distance >= delta/8 from the data in square {0:?}")]
    RepresentativePoint(SquareKey),
    #[error("empty square {0:?} has no data point in its parent's double")]
    MuUndefined(SquareKey),
    #[error("infinite nonnegativity cushion")]
    InfiniteCushion,
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("instance too large for the oracle: {n} points (limit {limit})")]
    SizeCap { n: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
