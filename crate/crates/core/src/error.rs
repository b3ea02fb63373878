use thiserror::Error;

/// Errors produced by the library.
///
/// The variants map onto the stable CLI exit-code contract: parameter
/// errors (2), lookup errors (3), validation errors (4), format errors
/// (5); everything else is internal (1).
#[derive(Debug, Error)]
pub enum CoreError {
    /// An argument is out of range or otherwise unusable.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A word is not present in the vocabulary.
    #[error("unknown word: {word:?}")]
    Lookup { word: String },

    /// Every token of a text fell outside the vocabulary.
    #[error("no token of the text is in the vocabulary")]
    AllTokensOutOfVocabulary,

    /// Inputs are well-formed but semantically unacceptable.
    #[error("validation error: {0}")]
    Validation(String),

    /// A file or stream does not conform to its declared format.
    #[error("format error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Format { line: Option<usize>, msg: String },

    /// The corpus contains no paragraphs.
    #[error("corpus is empty")]
    EmptyCorpus,

    /// An operation was applied in the wrong object state.
    #[error("state error: {0}")]
    State(String),

    /// An incremental structure was fed out-of-order input.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// Cosine similarity is undefined for a zero vector.
    #[error("similarity is undefined for a zero vector")]
    UndefinedSimilarity,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    pub fn format(line: impl Into<Option<usize>>, msg: impl Into<String>) -> Self {
        CoreError::Format {
            line: line.into(),
            msg: msg.into(),
        }
    }
}
