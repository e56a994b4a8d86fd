//! Typed universe of a heterogeneous information network.
//!
//! A relation is identified by the triple `(name, source, target)`, so the
//! same name may be registered once per direction. The default SME schema
//! uses this to give `control`, `shareholder` and friends a reverse
//! direction under the same name, which is how meta paths such as
//! `E-[control]->P-[shareholder]->E` are written.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::HinError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectTypeId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u16);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectType {
    pub name: String,
    /// Single-letter code used by the meta-path DSL.
    pub code: char,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub name: String,
    pub source: ObjectTypeId,
    pub target: ObjectTypeId,
    pub inverse_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    object_types: Vec<ObjectType>,
    relations: Vec<RelationType>,
    inverse: Vec<RelationId>,
    by_triple: HashMap<(String, ObjectTypeId, ObjectTypeId), RelationId>,
    /// Relations leaving each object type, sorted by relation name.
    outgoing: Vec<Vec<RelationId>>,
}

impl Schema {
    pub fn builder() -> SchemaBuilder {
        SchemaBuilder::default()
    }

    pub fn object_types(&self) -> &[ObjectType] {
        &self.object_types
    }

    pub fn relations(&self) -> &[RelationType] {
        &self.relations
    }

    pub fn object(&self, id: ObjectTypeId) -> &ObjectType {
        &self.object_types[id.0 as usize]
    }

    pub fn relation(&self, id: RelationId) -> &RelationType {
        &self.relations[id.0 as usize]
    }

    pub fn object_type(&self, name: &str) -> Option<ObjectTypeId> {
        self.object_types
            .iter()
            .position(|t| t.name == name)
            .map(|i| ObjectTypeId(i as u16))
    }

    pub fn object_type_by_code(&self, code: char) -> Option<ObjectTypeId> {
        self.object_types
            .iter()
            .position(|t| t.code == code)
            .map(|i| ObjectTypeId(i as u16))
    }

    pub fn relation_id(&self, name: &str, source: ObjectTypeId, target: ObjectTypeId) -> Option<RelationId> {
        self.by_triple.get(&(name.to_string(), source, target)).copied()
    }

    /// All relations registered under `name`, in any direction.
    pub fn relations_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = RelationId> + 'a {
        self.relations
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.name == name)
            .map(|(i, _)| RelationId(i as u16))
    }

    /// Relations whose source is `otype`, sorted by name then target type name.
    pub fn relations_from(&self, otype: ObjectTypeId) -> &[RelationId] {
        &self.outgoing[otype.0 as usize]
    }

    pub fn inverse(&self, id: RelationId) -> RelationId {
        self.inverse[id.0 as usize]
    }

    pub fn is_self_inverse(&self, id: RelationId) -> bool {
        self.inverse(id) == id
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn object_type_count(&self) -> usize {
        self.object_types.len()
    }
}

#[derive(Debug, Default, Clone)]
pub struct SchemaBuilder {
    object_types: Vec<ObjectType>,
    relations: Vec<(String, String, String, String)>,
}

impl SchemaBuilder {
    pub fn object_type(mut self, name: &str, code: char) -> Self {
        self.object_types.push(ObjectType {
            name: name.to_string(),
            code,
        });
        self
    }

    /// Registers `name: source -> target` whose reverse traversal is
    /// `inverse_name: target -> source`. The inverse must be registered too.
    pub fn relation(mut self, name: &str, source: &str, target: &str, inverse_name: &str) -> Self {
        self.relations.push((
            name.to_string(),
            source.to_string(),
            target.to_string(),
            inverse_name.to_string(),
        ));
        self
    }

    /// Registers a relation together with its reverse direction.
    pub fn relation_pair(self, name: &str, source: &str, target: &str, inverse_name: &str) -> Self {
        if source == target && name == inverse_name {
            return self.relation(name, source, target, inverse_name);
        }
        self.relation(name, source, target, inverse_name)
            .relation(inverse_name, target, source, name)
    }

    pub fn build(self) -> Result<Schema, HinError> {
        let mut object_types = Vec::with_capacity(self.object_types.len());
        for t in self.object_types {
            if object_types.iter().any(|o: &ObjectType| o.name == t.name) {
                return Err(HinError::InvalidSchema(format!("duplicate object type `{}`", t.name)));
            }
            if object_types.iter().any(|o: &ObjectType| o.code == t.code) {
                return Err(HinError::InvalidSchema(format!("duplicate type code `{}`", t.code)));
            }
            object_types.push(t);
        }
        let lookup = |name: &str| -> Result<ObjectTypeId, HinError> {
            object_types
                .iter()
                .position(|t| t.name == name)
                .map(|i| ObjectTypeId(i as u16))
                .ok_or_else(|| HinError::InvalidSchema(format!("relation endpoint `{name}` is not an object type")))
        };

        let mut relations = Vec::new();
        let mut by_triple = HashMap::new();
        for (name, source, target, inverse_name) in &self.relations {
            let rel = RelationType {
                name: name.clone(),
                source: lookup(source)?,
                target: lookup(target)?,
                inverse_name: inverse_name.clone(),
            };
            let key = (rel.name.clone(), rel.source, rel.target);
            if by_triple.contains_key(&key) {
                return Err(HinError::InvalidSchema(format!(
                    "relation `{name}: {source} -> {target}` registered twice"
                )));
            }
            by_triple.insert(key, RelationId(relations.len() as u16));
            relations.push(rel);
        }

        let mut inverse = Vec::with_capacity(relations.len());
        for rel in &relations {
            let inv = by_triple
                .get(&(rel.inverse_name.clone(), rel.target, rel.source))
                .copied()
                .ok_or_else(|| {
                    HinError::InvalidSchema(format!(
                        "inverse `{}` of relation `{}` is not registered",
                        rel.inverse_name, rel.name
                    ))
                })?;
            if relations[inv.0 as usize].inverse_name != rel.name {
                return Err(HinError::InvalidSchema(format!(
                    "inverse of `{}` does not point back to it",
                    rel.name
                )));
            }
            inverse.push(inv);
        }

        let mut outgoing = vec![Vec::new(); object_types.len()];
        for (i, rel) in relations.iter().enumerate() {
            outgoing[rel.source.0 as usize].push(RelationId(i as u16));
        }
        for list in &mut outgoing {
            list.sort_by(|a, b| {
                let ra = &relations[a.0 as usize];
                let rb = &relations[b.0 as usize];
                ra.name
                    .cmp(&rb.name)
                    .then_with(|| object_types[ra.target.0 as usize].name.cmp(&object_types[rb.target.0 as usize].name))
            });
        }

        Ok(Schema {
            object_types,
            relations,
            inverse,
            by_triple,
            outgoing,
        })
    }
}

pub const ENTERPRISE: &str = "enterprise";
pub const PERSON: &str = "person";
pub const COMMODITY: &str = "commodity";
pub const NEWS: &str = "news";

/// The four SME object types and their relations.
///
/// `parent`/`subsidiary` and `supply`/`sales` are mutual inverses, `relate`
/// is its own inverse, and every enterprise-to-other relation has a reverse
/// direction registered under the same name.
pub fn default_sme_schema() -> Schema {
    Schema::builder()
        .object_type(ENTERPRISE, 'E')
        .object_type(PERSON, 'P')
        .object_type(COMMODITY, 'C')
        .object_type(NEWS, 'N')
        .relation_pair("parent", ENTERPRISE, ENTERPRISE, "subsidiary")
        .relation_pair("supply", ENTERPRISE, ENTERPRISE, "sales")
        .relation_pair("control", ENTERPRISE, PERSON, "control")
        .relation_pair("shareholder", ENTERPRISE, PERSON, "shareholder")
        .relation_pair("manager", ENTERPRISE, PERSON, "manager")
        .relation_pair("employee", ENTERPRISE, PERSON, "employee")
        .relation_pair("boardmember", ENTERPRISE, PERSON, "boardmember")
        .relation_pair("produce", ENTERPRISE, COMMODITY, "produce")
        .relation_pair("report", ENTERPRISE, NEWS, "report")
        .relation_pair("relate", PERSON, PERSON, "relate")
        .build()
        .expect("default schema is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_has_four_object_types() {
        let s = default_sme_schema();
        assert_eq!(s.object_type_count(), 4);
        for name in [ENTERPRISE, PERSON, COMMODITY, NEWS] {
            assert!(s.object_type(name).is_some(), "{name}");
        }
    }

    #[test]
    fn parent_and_subsidiary_are_mutual_inverses() {
        let s = default_sme_schema();
        let e = s.object_type(ENTERPRISE).unwrap();
        let parent = s.relation_id("parent", e, e).unwrap();
        let sub = s.relation_id("subsidiary", e, e).unwrap();
        assert_eq!(s.inverse(parent), sub);
        assert_eq!(s.inverse(sub), parent);
        let supply = s.relation_id("supply", e, e).unwrap();
        assert_eq!(s.relation(s.inverse(supply)).name, "sales");
    }

    #[test]
    fn relate_is_self_inverse() {
        let s = default_sme_schema();
        let p = s.object_type(PERSON).unwrap();
        let relate = s.relation_id("relate", p, p).unwrap();
        assert!(s.is_self_inverse(relate));
    }

    #[test]
    fn boardmember_links_enterprise_to_person() {
        let s = default_sme_schema();
        let e = s.object_type(ENTERPRISE).unwrap();
        let p = s.object_type(PERSON).unwrap();
        assert!(s.relation_id("boardmember", e, p).is_some());
    }

    #[test]
    fn every_relation_has_an_involutive_inverse() {
        let s = default_sme_schema();
        for i in 0..s.relation_count() {
            let r = RelationId(i as u16);
            assert_eq!(s.inverse(s.inverse(r)), r);
            let (a, b) = (s.relation(r), s.relation(s.inverse(r)));
            assert_eq!((a.source, a.target), (b.target, b.source));
        }
    }

    #[test]
    fn twelve_relation_names() {
        let s = default_sme_schema();
        let mut names: Vec<_> = s.relations().iter().map(|r| r.name.as_str()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 12);
    }

    #[test]
    fn missing_inverse_is_rejected() {
        let err = Schema::builder()
            .object_type("a", 'A')
            .relation("r", "a", "a", "q")
            .build()
            .unwrap_err();
        assert!(matches!(err, HinError::InvalidSchema(_)));
    }

    #[test]
    fn unknown_endpoint_is_rejected() {
        let err = Schema::builder()
            .object_type("a", 'A')
            .relation_pair("r", "a", "b", "s")
            .build()
            .unwrap_err();
        assert!(matches!(err, HinError::InvalidSchema(_)));
    }
}
