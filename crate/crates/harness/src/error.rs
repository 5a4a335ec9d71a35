use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("spec line {line}: {msg}")]
    SpecSyntax { line: usize, msg: String },

    #[error(transparent)]
    Core(#[from] cwglauber::Error),

    #[error("resource cap: {0}")]
    ResourceCap(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 1 check failure, 2 invalid input, 3 resource cap.
    pub fn exit_code(&self) -> i32 {
        use cwglauber::Error as E;
        match self {
            HarnessError::Invalid(_) | HarnessError::SpecSyntax { .. } | HarnessError::Io { .. } => 2,
            HarnessError::ResourceCap(_) => 3,
            HarnessError::Core(e) => match e {
                E::InvalidParams(_) | E::OutOfRange { .. } | E::NoPositiveRoot { .. } | E::Degenerate(_) => 2,
                E::TooLarge { .. } => 3,
                E::Inconsistent { .. } | E::Numerical { .. } => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
