use thiserror::Error;

/// Service failures. `code()` is the stable machine-readable name sent to clients.
#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{what} `{id}` does not exist")]
    NotFound { what: &'static str, id: String },
    #[error("invalid poll definition: {0}")]
    InvalidDefinition(String),
    #[error("invalid ballot: {0}")]
    InvalidPayload(String),
    #[error("poll `{0}` is closed")]
    PollClosed(String),
    #[error("operation does not apply to a `{kind}` poll")]
    WrongKind { kind: String },
    #[error("poll `{0}` has no ballots")]
    NoBallots(String),
    #[error("issue `{issue}` is missing live votes from: {}", voters.join(", "))]
    MissingVotes { issue: String, voters: Vec<String> },
    #[error("invalid matching instance: {0}")]
    InvalidInstance(String),
    #[error("matching session `{0}` has no instance yet")]
    NoInstance(String),
    #[error("matching session `{0}` has not been run yet")]
    NoRuns(String),
    #[error("results could not be computed: {0}")]
    Compute(String),
    #[error("storage failure: {0}")]
    Storage(#[from] std::io::Error),
    #[error("log is corrupt at line {line}: {message}")]
    CorruptLog { line: usize, message: String },
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound { .. } => "not_found",
            ServiceError::InvalidDefinition(_) => "invalid_definition",
            ServiceError::InvalidPayload(_) => "invalid_payload",
            ServiceError::PollClosed(_) => "poll_closed",
            ServiceError::WrongKind { .. } => "wrong_kind",
            ServiceError::NoBallots(_) => "no_ballots",
            ServiceError::MissingVotes { .. } => "missing_votes",
            ServiceError::InvalidInstance(_) => "invalid_instance",
            ServiceError::NoInstance(_) => "no_instance",
            ServiceError::NoRuns(_) => "no_runs",
            ServiceError::Compute(_) => "compute_failed",
            ServiceError::Storage(_) => "storage",
            ServiceError::CorruptLog { .. } => "corrupt_log",
        }
    }

    pub(crate) fn poll(id: &str) -> Self {
        ServiceError::NotFound { what: "poll", id: id.to_string() }
    }

    pub(crate) fn matching(id: &str) -> Self {
        ServiceError::NotFound { what: "matching session", id: id.to_string() }
    }
}
