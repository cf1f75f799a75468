use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Template, lexicon, or experiment configuration is malformed.
    #[error("configuration error: {0}")]
    Config(String),

    /// A predictor refers to a slot or position feature the corpus lacks.
    #[error("schema error: {0}")]
    Schema(String),

    /// A pair could not be assigned a unique level of a categorical code.
    #[error("coding error: {0}")]
    Coding(String),

    #[error("design matrix is rank deficient: column `{column}` is a linear combination of {depends_on:?}")]
    RankDeficient {
        column: String,
        depends_on: Vec<String>,
    },

    #[error("not enough observations: {rows} rows for {columns} columns leaves no residual degrees of freedom")]
    NoDegreesOfFreedom { rows: usize, columns: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("cannot standardize: {0}")]
    ZeroVariance(String),

    #[error("no embedding for sentence {id} ({text:?})")]
    MissingEmbedding { id: usize, text: String },

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("fit schemas differ: {0}")]
    SchemaMismatch(String),

    /// The encoder answered, but not in the shape the wire protocol requires.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("encoder `{encoder}` unavailable ({reason}); {} texts missing from cache, first: {:?}", missing.len(), missing.first())]
    EncoderUnavailable {
        encoder: String,
        reason: String,
        missing: Vec<String>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }
}
