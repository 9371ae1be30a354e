use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("value `{value}` is not in the domain of `{var}`")]
    ValueOutsideDomain { var: String, value: String },

    #[error("duplicate value `{value}` in the domain of `{var}`")]
    DuplicateValue { var: String, value: String },

    #[error("domain of `{var}` has {size} values; at most {max} are supported")]
    DomainTooLarge { var: String, size: usize, max: usize },

    #[error("duplicate tuple {tuple} in table `{table}`")]
    DuplicateTuple { table: String, tuple: String },

    #[error("tuple {tuple} in table `{table}` has arity {found}, expected {expected}")]
    TupleArity {
        table: String,
        tuple: String,
        found: usize,
        expected: usize,
    },

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("not a permutation of [1..{0}]")]
    InvalidPermutation(usize),

    #[error("variable `{0}` occurs more than once")]
    RepeatedVariable(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("conflicting definitions for table `{0}`")]
    ConflictingTable(String),

    #[error("unknown corpus entry `{0}`")]
    UnknownCorpusEntry(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("cannot compare rules: {0}")]
    IncomparableRules(String),

    #[error("rule does not fire on this CSP")]
    RuleDoesNotFire,

    #[error("table `{0}` has no tuples")]
    EmptyTable(String),

    #[error("premise cap {cap} is out of range for arity {arity}")]
    InvalidPremiseCap { cap: usize, arity: usize },

    #[error("generation exceeded its deadline")]
    Timeout,

    #[error("variable sequences differ")]
    VariableMismatch,

    #[error("empty interface")]
    EmptyInterface,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn parse(file: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}
