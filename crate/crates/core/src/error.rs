use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("objective is not strongly convex (mu = 0)")]
    NotStronglyConvex,

    #[error("invalid state at round {round}{}: {reason}", agent.map(|a| format!(", agent {a}")).unwrap_or_default())]
    InvalidState {
        round: u64,
        agent: Option<usize>,
        reason: String,
    },

    #[error("attack output for agent {agent} at round {round} is not finite")]
    AttackOutputInvalid { agent: usize, round: u64 },

    #[error("series not fittable: {0}")]
    NotFittable(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Parse { .. }
            | Error::InvalidArgument(_)
            | Error::PreconditionViolation(_)
            | Error::NotStronglyConvex => 2,
            Error::NumericalFailure(_)
            | Error::InvalidState { .. }
            | Error::AttackOutputInvalid { .. }
            | Error::NotFittable(_) => 3,
            Error::Io(_) | Error::Csv(_) => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            }
        }
    }
}
