// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

/// Fatal ingest failures. Per-row and per-record problems are not errors;
/// they are collected in the ingest report.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{table} table is missing required column `{column}`")]
    MissingColumn { table: &'static str, column: String },
    #[error("{table} table has no header line")]
    MissingHeader { table: &'static str },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to read {table} table: {source}")]
    Stream {
        table: &'static str,
        #[source]
        source: csv::Error,
    },
    #[error("mapping config line {line}: {message}")]
    Mapping { line: usize, message: String },
    #[error("cohort metadata line {line}: {message}")]
    CohortMeta { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("denominator zero at year {year}")]
    ZeroDenominator { year: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: String, message: String },
}

impl QueryError {
    pub(crate) fn invalid(name: &str, message: impl Into<String>) -> Self {
        Self::InvalidArgument { name: name.to_owned(), message: message.into() }
    }
}
