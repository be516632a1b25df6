use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("out-of-sequence update: expected t = {expected}, got t = {got}")]
    Sequencing { expected: usize, got: usize },

    #[error("block {index}: {source}")]
    Block {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_block(self, index: usize) -> Self {
        Error::Block {
            index,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "regularization parameter must be positive and finite, got {lambda}"
        )))
    }
}
