use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("category `{0}` is not in the {1} inventory")]
    UnknownCategory(String, String),

    #[error("spans overlap at token {0}")]
    OverlappingSpans(usize),

    #[error("span {0}..{1} is out of range for {2} tokens")]
    SpanOutOfRange(usize, usize, usize),

    #[error("label id {0} is out of range (label count {1})")]
    LabelOutOfRange(usize, usize),

    #[error("inventory `{name}` has {got} symbols, expected {expected}")]
    InventorySize {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("duplicate symbol `{0}` in inventory `{1}`")]
    DuplicateSymbol(String, String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("token id {0} is out of range for vocabulary of size {1}")]
    TokenIdOutOfRange(usize, usize),

    #[error("no legal label path under the transition mask")]
    NoLegalPath,

    #[error("gold label path is illegal under the transition mask at step {0}")]
    IllegalGoldPath(usize),

    #[error("sequence must be non-empty")]
    EmptySequence,

    #[error("input word is empty{0}")]
    EmptyWord(String),

    #[error("training diverged (non-finite loss) at epoch {0}")]
    TrainingDiverged(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("prosody level {0} is not one of 1, 2, 3")]
    UnknownProsodyLevel(usize),

    #[error("word `{0}` is not a registered polyphone")]
    NotAPolyphone(String),

    #[error("empty phoneme sequence for word `{0}`")]
    EmptyPhonemes(String),

    #[error("model for task `{0}` is not loaded")]
    ModelNotLoaded(String),

    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },

    #[error("checkpoint inventory hash mismatch for `{0}`: model was trained against a different inventory")]
    InventoryHashMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),

    #[error("cannot verbalize `{text}` as {category}: {msg}")]
    Verbalize {
        text: String,
        category: String,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
