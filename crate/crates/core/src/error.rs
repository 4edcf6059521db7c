use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the domain of a model or operation.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A value violates a type invariant on construction.
    #[error("invalid {kind}: {msg}")]
    Invalid { kind: &'static str, msg: String },

    /// A generated design breaks a fabrication rule.
    #[error("design rule violated: {0}")]
    DesignRule(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(kind: &'static str, msg: impl Into<String>) -> Self {
        Error::Invalid {
            kind,
            msg: msg.into(),
        }
    }
}
