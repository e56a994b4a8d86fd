use crate::hin::{ObjectTypeId, RelationId, Schema};

use super::MetaPath;

#[derive(Debug, Clone, Copy, Default)]
pub struct EnumerateOptions {
    /// Permit `R(i+1) = inverse(R(i))`, e.g. `E-[control]->P-[control]->E`.
    pub allow_backtracking: bool,
    /// Stop once this many paths have been produced (shortest first).
    pub limit: Option<usize>,
}

/// All schema-valid meta paths rooted at `root` with `1..=max_relations`
/// relations and no immediate backtracking, ordered by relation count and
/// then lexicographically by relation name and target type.
pub fn enumerate_metapaths(schema: &Schema, root: ObjectTypeId, max_relations: usize) -> Vec<MetaPath> {
    enumerate_metapaths_with(schema, root, max_relations, EnumerateOptions::default(), |_| true)
}

/// Breadth-first enumeration. Paths rejected by `keep` are neither returned
/// nor extended, which is sound for any predicate closed under prefixes
/// (such as "has at least one instance in the network").
pub fn enumerate_metapaths_with(
    schema: &Schema,
    root: ObjectTypeId,
    max_relations: usize,
    options: EnumerateOptions,
    mut keep: impl FnMut(&MetaPath) -> bool,
) -> Vec<MetaPath> {
    let limit = options.limit.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<RelationId>> = vec![Vec::new()];
    for depth in 1..=max_relations {
        let mut next = Vec::new();
        for prefix in &frontier {
            let at = prefix
                .last()
                .map_or(root, |&r| schema.relation(r).target);
            for &r in schema.relations_from(at) {
                if !options.allow_backtracking && prefix.last().is_some_and(|&last| schema.inverse(last) == r) {
                    continue;
                }
                let mut rels = prefix.clone();
                rels.push(r);
                let mp = MetaPath::from_relations(schema, rels).expect("extension follows the schema");
                debug_assert_eq!(mp.len(), depth);
                if keep(&mp) {
                    next.push(mp);
                }
            }
        }
        next.sort_by_cached_key(|mp| mp.sort_key(schema));
        for mp in &next {
            if out.len() >= limit {
                return out;
            }
            out.push(mp.clone());
        }
        frontier = next.into_iter().map(|mp| mp.relations().to_vec()).collect();
        if frontier.is_empty() {
            break;
        }
    }
    out
}
