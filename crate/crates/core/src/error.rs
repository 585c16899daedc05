use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible experiment: {0}")]
    Infeasible(String),

    #[error("resource {resource} outside 1..={n_resources}")]
    ResourceOutOfRange { resource: usize, n_resources: usize },

    #[error("context {context} outside 1..={context_size}")]
    ContextOutOfRange { context: usize, context_size: usize },

    #[error("unknown agent {0}")]
    UnknownAgent(usize),

    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("reward {0} outside the declared range")]
    RewardOutOfRange(f64),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("no admissible value on the grid: {0}")]
    GridLimit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Process exit status for command-line front ends: 2 for invalid
    /// configuration, 3 for infeasible experiments, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 3,
            Error::InvalidConfig(_)
            | Error::ResourceOutOfRange { .. }
            | Error::ContextOutOfRange { .. }
            | Error::LengthMismatch { .. }
            | Error::Toml(_) => 2,
            _ => 1,
        }
    }
}
