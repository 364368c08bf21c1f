use thiserror::Error;

#[derive(Debug, Error)]
pub enum VemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("incompatible data: {0}")]
    Incompatible(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<VemError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl VemError {
    pub fn context(self, context: impl Into<String>) -> Self {
        VemError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, VemError>;
