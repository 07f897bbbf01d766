use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("duplicate record id `{id}` (row {row})")]
    DuplicateId { id: String, row: usize },

    #[error("record `{id}` has {found} values, schema has {expected} attributes")]
    SchemaLength {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("ground truth references unknown record `{id}` in {database}")]
    UnknownRecord { id: String, database: String },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config value out of range: {0}")]
    ConfigRange(String),

    #[error("unknown transform `{0}`")]
    UnknownTransform(String),

    #[error("unknown relational feature `{0}`")]
    UnknownFeature(String),

    #[error("invalid combination: {0}")]
    InvalidCombination(String),

    #[error("vertex {0} is not in the record graph")]
    UnknownVertex(usize),

    #[error("occurrence count must be at least 1, got {0}")]
    InvalidOccurrence(usize),

    #[error("signature databases were built with different settings: {0}")]
    IncompatibleSignatures(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
