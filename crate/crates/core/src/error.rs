use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants are grouped so the command-line front end can map them onto
/// exit codes: [`Error::Parse`] is a parse failure, [`Error::Unknown`] is an
/// undecided comparison, everything else is a precondition failure.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A system descriptor is malformed (wrong dimensions, exhausted tables, ...).
    #[error("descriptor error: {0}")]
    Descriptor(String),

    /// A named hypothesis of an operation is certifiably false.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A hypothesis could not be decided from the available enclosures.
    #[error("undecided comparison: {0}")]
    Unknown(String),

    /// The operation is not supported for this kind of input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Caller violated an interface contract (sizes do not add up, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Text or JSON input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn descriptor(msg: impl Into<String>) -> Self {
        Error::Descriptor(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn unknown(msg: impl Into<String>) -> Self {
        Error::Unknown(msg.into())
    }
}
