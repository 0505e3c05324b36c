use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed circuit: {0}")]
    MalformedCircuit(String),

    #[error("circuit failed validation ({0} violation(s)); first: {1}")]
    InvalidCircuit(usize, String),

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error("conditioning event has zero density")]
    UndefinedConditional,

    #[error("variable `{0}` is continuous and cannot be a free design variable")]
    UnsupportedFreeVariable(String),

    #[error("epsilon must lie in (0, 1], got {0}; use a hard constraint for epsilon = 0")]
    InvalidEpsilon(f64),

    #[error("design prior is not uniform; encode the denominator with the circuit instead")]
    NonUniformPrior,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no hyperparameter candidate could be trained: {0}")]
    AllCandidatesFailed(String),

    #[error("dataset schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
