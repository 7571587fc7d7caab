use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid arguments or model parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A coupling matrix entry violates its declared envelope.
    #[error("coupling ({i}, {j}) = {value} violates the {kind} bound {bound}")]
    CouplingBound {
        i: usize,
        j: usize,
        value: f64,
        bound: f64,
        kind: &'static str,
    },

    /// Configuration validation; every problem is listed.
    #[error("configuration errors: {}", .0.join("; "))]
    Config(Vec<String>),

    /// A Hilbert-space dimension or graph size exceeds a configured cap.
    #[error("{what} requires {required}, allowed {allowed}")]
    ResourceCap {
        what: String,
        required: usize,
        allowed: usize,
    },

    /// Eigensolver failure or a non-finite intermediate.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::CouplingBound { .. } => 2,
            Error::ResourceCap { .. } => 3,
            Error::Numerical(_) => 4,
            Error::Io(_) => 1,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::CouplingBound { .. } => "coupling_bound",
            Error::Config(_) => "config",
            Error::ResourceCap { .. } => "resource_cap",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
