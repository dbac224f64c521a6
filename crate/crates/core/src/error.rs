use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("choice {choice} out of range for d = {d}")]
    ChoiceOutOfRange { choice: usize, d: usize },

    /// A numeric argument is outside the region where a formula or
    /// operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("resource limit: phi = {phi} exceeds cap {cap} (raise it with --phi-cap)")]
    ResourceLimit { phi: u64, cap: u64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("incompatible memo table: {0}")]
    Incompatible(String),

    #[error("potential violates its certificate at state {state} with decomposition {dec}: last probability {p_last}")]
    CertificationViolation {
        state: String,
        dec: String,
        p_last: f64,
    },

    #[error("protocol error in round {round}: {msg}")]
    Protocol { round: usize, msg: String },

    #[error("strict monotonicity violated: l{state} <= l{successor}")]
    Monotonicity { state: String, successor: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceLimit { .. } => 3,
            Error::InvalidState(_)
            | Error::InvalidDecomposition(_)
            | Error::ChoiceOutOfRange { .. }
            | Error::Domain(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Incompatible(_) => 2,
            _ => 1,
        }
    }
}
