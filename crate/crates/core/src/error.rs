use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("classifier failed on {atom}: {reason}")]
    Classifier { atom: String, reason: String },
    #[error("atom {0} is outside the grounded vocabulary")]
    VocabularyMismatch(String),
    #[error("operator {0} is not applicable")]
    Inapplicable(String),
    #[error("replay miss: {0}")]
    ReplayMiss(String),
    #[error("environment error: {0}")]
    Environment(String),
    #[error("oracle error: {0}")]
    Oracle(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
