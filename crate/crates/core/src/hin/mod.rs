//! Heterogeneous information networks: schema, storage, CSV ingestion and
//! time-window filtering.

mod graph;
mod io;
mod schema;

use std::fmt;

use thiserror::Error;

pub use graph::{Direction, Edge, EdgeIdx, Hin, HinBuilder, Node, NodeIdx, RiskLabel, Traversal};
pub use io::{discretize_numeric_attributes, load_hin, write_hin, HinSources, LoadOptions, NamedText, DEFAULT_QUANTILE_BINS};
pub use schema::{
    default_sme_schema, ObjectType, ObjectTypeId, RelationId, RelationType, Schema, SchemaBuilder, COMMODITY,
    ENTERPRISE, NEWS, PERSON,
};

/// Position of a problem inside an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: String,
    pub line: u64,
    pub column: String,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{} (column `{}`)", self.file, self.line, self.column)
    }
}

struct At<'a>(&'a Option<Location>);

impl fmt::Display for At<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(loc) => write!(f, " at {loc}"),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HinError {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("unknown type `{name}`{}", At(location))]
    UnknownType { location: Option<Location>, name: String },
    #[error("edge `{edge}` references missing node `{node}`{}", At(location))]
    DanglingEdge {
        location: Option<Location>,
        edge: String,
        node: String,
    },
    #[error("duplicate id `{id}`{}", At(location))]
    DuplicateId { location: Option<Location>, id: String },
    #[error("edge `{edge}` does not type-check: {detail}{}", At(location))]
    TypeMismatch {
        location: Option<Location>,
        edge: String,
        detail: String,
    },
    #[error("malformed value `{value}`: {reason}{}", At(location))]
    Parse {
        location: Option<Location>,
        value: String,
        reason: String,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid window: start {start} is after end {end}")]
    InvalidWindow { start: i64, end: i64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl HinError {
    pub(crate) fn at(self, loc: Location) -> HinError {
        let l = Some(loc);
        match self {
            HinError::UnknownType { name, .. } => HinError::UnknownType { location: l, name },
            HinError::DanglingEdge { edge, node, .. } => HinError::DanglingEdge { location: l, edge, node },
            HinError::DuplicateId { id, .. } => HinError::DuplicateId { location: l, id },
            HinError::TypeMismatch { edge, detail, .. } => HinError::TypeMismatch { location: l, edge, detail },
            HinError::Parse { value, reason, .. } => HinError::Parse { location: l, value, reason },
            other => other,
        }
    }
}
