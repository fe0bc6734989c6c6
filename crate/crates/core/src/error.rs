use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the retrieval core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("id collision `{0}` between relevant and distractor documents")]
    IdCollision(String),
    #[error("document `{0}` has no text after normalization")]
    EmptyText(String),
    #[error("empty id")]
    EmptyId,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("unknown document id `{0}`")]
    UnknownDocument(String),
    #[error("unknown query id `{0}`")]
    UnknownQuery(String),
    #[error("invalid relevance grade {grade} for ({query}, {doc}) in binary mode")]
    NonBinaryGrade { query: String, doc: String, grade: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector `{0}` has dimension {1}, expected {2}")]
    VectorDimension(String, usize, usize),
    #[error("vector `{id}` has norm {norm}, expected 1")]
    NotNormalized { id: String, norm: f64 },
    #[error("non-finite value in vector")]
    NonFinite,
    #[error("zero vector")]
    ZeroVector,
    #[error("embedding provider: {0}")]
    Provider(String),
    #[error("empty token stream: no direction defined")]
    EmptyTokens,
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch size mismatch: {0} queries vs {1} positives")]
    BatchMismatch(usize, usize),
    #[error("ranking for query `{0}` is invalid: {1}")]
    InvalidRanking(String, String),
    #[error("zero evaluable queries")]
    NoEvaluableQueries,
    #[error("relevant set of query `{0}` is empty")]
    EmptyRelevantSet(String),
    #[error("paired samples have mismatched query sets")]
    MismatchedQueries,
    #[error("paired sample needs at least 2 observations, got {0}")]
    TooFewObservations(usize),
    #[error("no nonzero differences")]
    NoNonzeroDifferences,
    #[error("p-value {0} outside [0, 1]")]
    InvalidPValue(f64),
    #[error("vocabulary of {available} tokens cannot hold the {required} required for disjoint regions")]
    VocabularyTooSmall { available: usize, required: usize },
}
