use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two nodes coincide (or nearly so), or a path is otherwise geometrically
    /// unusable.
    #[error("degenerate geometry: {0}")]
    Geometry(String),

    /// A matrix that has to be inverted is singular to working precision.
    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
