use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input data; `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// Base columns referenced by a transform are absent from the input.
    #[error("schema error: missing columns [{}]", .0.join(", "))]
    Schema(Vec<String>),

    /// Expression text did not match the grammar; `offset` is a byte offset.
    #[error("expression error at byte {offset}: {message}")]
    Expr { offset: usize, message: String },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A caller broke an API precondition (shape or schema mismatch).
    #[error("contract error: {0}")]
    Contract(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("transform spec format error at line {line}: {message}")]
    SpecFormat { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// True for errors caused by caller configuration rather than the data itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Unsupported(_))
    }
}
