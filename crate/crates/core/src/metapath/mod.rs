//! Meta paths: the typed relation sequences that give each feature its meaning.

mod dsl;
mod enumerate;
mod matching;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{NodeIdx, ObjectTypeId, RelationId, Schema};

pub use dsl::{format_metapath, parse_metapath, parse_metapaths_file};
pub use enumerate::{enumerate_metapaths, enumerate_metapaths_with, EnumerateOptions};
pub use matching::{match_instances, reachable_targets, PathInstance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetaPathError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation {index} does not connect its adjacent types")]
    IncompatibleEndpoint { index: usize },
    #[error("meta path needs at least one relation")]
    Empty,
    #[error("start node type does not match the meta path root")]
    TypeMismatch,
    #[error("line {line}: {source}")]
    InFile {
        line: usize,
        #[source]
        source: Box<MetaPathError>,
    },
}

/// `A1 -R1-> A2 -R2-> ... -Rn-> A(n+1)`, checked against a schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetaPath {
    types: Vec<ObjectTypeId>,
    relations: Vec<RelationId>,
}

impl MetaPath {
    /// Builds a meta path from its relation sequence; the object types follow.
    pub fn from_relations(schema: &Schema, relations: Vec<RelationId>) -> Result<Self, MetaPathError> {
        let first = relations.first().ok_or(MetaPathError::Empty)?;
        let mut types = vec![schema.relation(*first).source];
        for (i, &r) in relations.iter().enumerate() {
            let rel = schema.relation(r);
            if rel.source != types[i] {
                return Err(MetaPathError::IncompatibleEndpoint { index: i + 1 });
            }
            types.push(rel.target);
        }
        Ok(MetaPath { types, relations })
    }

    pub fn types(&self) -> &[ObjectTypeId] {
        &self.types
    }

    pub fn relations(&self) -> &[RelationId] {
        &self.relations
    }

    /// Number of relations.
    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn root(&self) -> ObjectTypeId {
        self.types[0]
    }

    pub fn terminal(&self) -> ObjectTypeId {
        *self.types.last().expect("non-empty")
    }

    /// The same composite relation read backwards.
    pub fn inverse(&self, schema: &Schema) -> MetaPath {
        MetaPath {
            types: self.types.iter().rev().copied().collect(),
            relations: self.relations.iter().rev().map(|&r| schema.inverse(r)).collect(),
        }
    }

    pub fn format(&self, schema: &Schema) -> String {
        format_metapath(self, schema)
    }

    /// Ordering key: relation count first, then relation names and target types.
    pub(crate) fn sort_key(&self, schema: &Schema) -> (usize, Vec<(String, String)>) {
        (
            self.len(),
            self.relations
                .iter()
                .map(|&r| {
                    let rel = schema.relation(r);
                    (rel.name.clone(), schema.object(rel.target).name.clone())
                })
                .collect(),
        )
    }
}

pub(crate) fn check_start(
    hin: &crate::hin::Hin,
    start: NodeIdx,
    mp: &MetaPath,
) -> Result<(), MetaPathError> {
    if start.index() >= hin.node_count() || hin.node_type(start) != mp.root() {
        return Err(MetaPathError::TypeMismatch);
    }
    Ok(())
}
