use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::schema::{ObjectTypeId, RelationId, Schema};
use super::HinError;

/// Dense index of a node inside one [`Hin`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeIdx(pub u32);

impl EdgeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Observed or imputed risk label attached to a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskLabel {
    pub risky: bool,
    pub imputed: bool,
}

impl RiskLabel {
    pub fn observed(risky: bool) -> Self {
        RiskLabel { risky, imputed: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub otype: ObjectTypeId,
    pub attributes: BTreeMap<String, String>,
    pub timestamp: Option<i64>,
    pub label: Option<RiskLabel>,
}

impl Node {
    pub fn observed_label(&self) -> Option<bool> {
        self.label.filter(|l| !l.imputed).map(|l| l.risky)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub src: NodeIdx,
    pub dst: NodeIdx,
    pub rtype: RelationId,
    pub timestamp: Option<i64>,
}

/// Direction in which a stored edge is walked by a traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Backward,
}

/// One step from a node along a relation: the edge used and the node reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Traversal {
    pub relation: RelationId,
    pub other: NodeIdx,
    pub edge: EdgeIdx,
    pub direction: Direction,
}

/// Immutable heterogeneous information network.
///
/// Each edge is stored once. The traversal index lists every edge twice,
/// once from its source under its own relation and once from its target
/// under the inverse relation, so `neighbors(b, inverse(r))` sees every
/// `r` edge ending at `b`.
#[derive(Debug, Clone)]
pub struct Hin {
    schema: Arc<Schema>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    ids: HashMap<String, NodeIdx>,
    traversals: Vec<Vec<Traversal>>,
    out_degree: Vec<u32>,
    in_degree: Vec<u32>,
}

impl PartialEq for Hin {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Hin {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.index()]
    }

    pub fn edge(&self, idx: EdgeIdx) -> &Edge {
        &self.edges[idx.index()]
    }

    pub fn node_idx(&self, id: &str) -> Option<NodeIdx> {
        self.ids.get(id).copied()
    }

    pub fn node_type(&self, idx: NodeIdx) -> ObjectTypeId {
        self.nodes[idx.index()].otype
    }

    pub fn node_indices(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len() as u32).map(NodeIdx)
    }

    /// Nodes of one type, in index order.
    pub fn nodes_of_type(&self, otype: ObjectTypeId) -> Vec<NodeIdx> {
        self.node_indices().filter(|&n| self.node_type(n) == otype).collect()
    }

    /// Stored edges leaving `node`, over all relations.
    pub fn out_degree(&self, node: NodeIdx) -> usize {
        self.out_degree[node.index()] as usize
    }

    /// Stored edges arriving at `node`, over all relations.
    pub fn in_degree(&self, node: NodeIdx) -> usize {
        self.in_degree[node.index()] as usize
    }

    /// Every way of leaving `node` along `rtype`, sorted by neighbor then edge.
    pub fn traversals(&self, node: NodeIdx, rtype: RelationId) -> &[Traversal] {
        let list = &self.traversals[node.index()];
        let lo = list.partition_point(|t| t.relation < rtype);
        let hi = list.partition_point(|t| t.relation <= rtype);
        &list[lo..hi]
    }

    /// All traversals from `node`, grouped by relation.
    pub fn all_traversals(&self, node: NodeIdx) -> &[Traversal] {
        &self.traversals[node.index()]
    }

    /// Distinct nodes reachable from `node` in one `rtype` step, sorted.
    pub fn neighbors(&self, node: NodeIdx, rtype: RelationId) -> Vec<NodeIdx> {
        let mut out: Vec<NodeIdx> = self.traversals(node, rtype).iter().map(|t| t.other).collect();
        out.dedup();
        out
    }

    /// Same as [`Hin::neighbors`] but addressed by string ids.
    pub fn neighbors_by_id(&self, node: &str, rtype: RelationId) -> Result<Vec<&str>, HinError> {
        let idx = self
            .node_idx(node)
            .ok_or_else(|| HinError::UnknownNode(node.to_string()))?;
        Ok(self
            .neighbors(idx, rtype)
            .into_iter()
            .map(|n| self.node(n).id.as_str())
            .collect())
    }

    /// Sub-network restricted to elements whose timestamp is absent or lies
    /// in `[start, end]`. Edges touching a dropped node are dropped.
    pub fn as_of(&self, start: i64, end: i64) -> Result<Hin, HinError> {
        if start > end {
            return Err(HinError::InvalidWindow { start, end });
        }
        let keep = |ts: Option<i64>| ts.is_none_or(|t| start <= t && t <= end);
        let mut builder = HinBuilder::new(self.schema_arc());
        let mut remap = vec![None; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if keep(node.timestamp) {
                remap[i] = Some(builder.push_node(node.clone())?);
            }
        }
        for edge in &self.edges {
            if !keep(edge.timestamp) {
                continue;
            }
            if let (Some(src), Some(dst)) = (remap[edge.src.index()], remap[edge.dst.index()]) {
                builder.push_edge(Edge {
                    src,
                    dst,
                    ..edge.clone()
                })?;
            }
        }
        Ok(builder.build())
    }

    /// Copy of this network with node labels replaced.
    pub fn with_labels(&self, labels: &[Option<RiskLabel>]) -> Hin {
        assert_eq!(labels.len(), self.nodes.len());
        let mut out = self.clone();
        for (node, label) in out.nodes.iter_mut().zip(labels) {
            node.label = *label;
        }
        out
    }

    /// Copy of this network with node attributes replaced.
    pub fn with_attributes(&self, attributes: Vec<BTreeMap<String, String>>) -> Hin {
        assert_eq!(attributes.len(), self.nodes.len());
        let mut out = self.clone();
        for (node, attrs) in out.nodes.iter_mut().zip(attributes) {
            node.attributes = attrs;
        }
        out
    }

    /// Checks the type-safety and inverse-closure invariants.
    pub fn validate(&self) -> Result<(), HinError> {
        for edge in &self.edges {
            let rel = self.schema.relation(edge.rtype);
            if self.node_type(edge.src) != rel.source || self.node_type(edge.dst) != rel.target {
                return Err(HinError::TypeMismatch {
                    location: None,
                    edge: edge.id.clone(),
                    detail: format!("relation `{}` endpoints do not match node types", rel.name),
                });
            }
        }
        for a in self.node_indices() {
            for t in self.all_traversals(a) {
                let back = self.schema.inverse(t.relation);
                if !self.traversals(t.other, back).iter().any(|u| u.other == a && u.edge == t.edge) {
                    return Err(HinError::Invariant(format!(
                        "traversal {} -> {} has no inverse",
                        self.node(a).id,
                        self.node(t.other).id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Single-writer construction of a [`Hin`].
#[derive(Debug, Clone)]
pub struct HinBuilder {
    schema: Arc<Schema>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    ids: HashMap<String, NodeIdx>,
    edge_ids: HashMap<String, EdgeIdx>,
}

impl HinBuilder {
    pub fn new(schema: Arc<Schema>) -> Self {
        HinBuilder {
            schema,
            nodes: Vec::new(),
            edges: Vec::new(),
            ids: HashMap::new(),
            edge_ids: HashMap::new(),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn node_idx(&self, id: &str) -> Option<NodeIdx> {
        self.ids.get(id).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn add_node(&mut self, id: &str, otype: &str, timestamp: Option<i64>) -> Result<NodeIdx, HinError> {
        let otype_id = self
            .schema
            .object_type(otype)
            .ok_or_else(|| HinError::UnknownType {
                location: None,
                name: otype.to_string(),
            })?;
        self.push_node(Node {
            id: id.to_string(),
            otype: otype_id,
            attributes: BTreeMap::new(),
            timestamp,
            label: None,
        })
    }

    pub fn push_node(&mut self, node: Node) -> Result<NodeIdx, HinError> {
        if self.ids.contains_key(&node.id) {
            return Err(HinError::DuplicateId {
                location: None,
                id: node.id,
            });
        }
        let idx = NodeIdx(self.nodes.len() as u32);
        self.ids.insert(node.id.clone(), idx);
        self.nodes.push(node);
        Ok(idx)
    }

    pub fn set_attribute(&mut self, node: NodeIdx, name: &str, value: &str) {
        self.nodes[node.index()]
            .attributes
            .insert(name.to_string(), value.to_string());
    }

    pub fn set_label(&mut self, node: NodeIdx, label: Option<RiskLabel>) {
        self.nodes[node.index()].label = label;
    }

    /// Adds an edge, resolving `relation` by name against the endpoint types.
    pub fn add_edge(
        &mut self,
        id: &str,
        src: &str,
        dst: &str,
        relation: &str,
        timestamp: Option<i64>,
    ) -> Result<EdgeIdx, HinError> {
        let src_idx = self.node_idx(src).ok_or_else(|| HinError::DanglingEdge {
            location: None,
            edge: id.to_string(),
            node: src.to_string(),
        })?;
        let dst_idx = self.node_idx(dst).ok_or_else(|| HinError::DanglingEdge {
            location: None,
            edge: id.to_string(),
            node: dst.to_string(),
        })?;
        let rtype = self.resolve_relation(id, relation, src_idx, dst_idx)?;
        self.push_edge(Edge {
            id: id.to_string(),
            src: src_idx,
            dst: dst_idx,
            rtype,
            timestamp,
        })
    }

    pub(crate) fn resolve_relation(
        &self,
        edge_id: &str,
        relation: &str,
        src: NodeIdx,
        dst: NodeIdx,
    ) -> Result<RelationId, HinError> {
        let (st, dt) = (self.nodes[src.index()].otype, self.nodes[dst.index()].otype);
        if let Some(r) = self.schema.relation_id(relation, st, dt) {
            return Ok(r);
        }
        if self.schema.relations_named(relation).next().is_none() {
            return Err(HinError::UnknownType {
                location: None,
                name: relation.to_string(),
            });
        }
        Err(HinError::TypeMismatch {
            location: None,
            edge: edge_id.to_string(),
            detail: format!(
                "relation `{relation}` is not defined from `{}` to `{}`",
                self.schema.object(st).name,
                self.schema.object(dt).name
            ),
        })
    }

    pub fn push_edge(&mut self, edge: Edge) -> Result<EdgeIdx, HinError> {
        let rel = self.schema.relation(edge.rtype);
        if self.nodes[edge.src.index()].otype != rel.source || self.nodes[edge.dst.index()].otype != rel.target {
            return Err(HinError::TypeMismatch {
                location: None,
                edge: edge.id.clone(),
                detail: format!("relation `{}` endpoints do not match node types", rel.name),
            });
        }
        if self.edge_ids.contains_key(&edge.id) {
            return Err(HinError::DuplicateId {
                location: None,
                id: edge.id,
            });
        }
        let idx = EdgeIdx(self.edges.len() as u32);
        self.edge_ids.insert(edge.id.clone(), idx);
        self.edges.push(edge);
        Ok(idx)
    }

    pub fn build(self) -> Hin {
        let n = self.nodes.len();
        let mut traversals: Vec<Vec<Traversal>> = vec![Vec::new(); n];
        let mut out_degree = vec![0u32; n];
        let mut in_degree = vec![0u32; n];
        for (i, e) in self.edges.iter().enumerate() {
            let edge = EdgeIdx(i as u32);
            out_degree[e.src.index()] += 1;
            in_degree[e.dst.index()] += 1;
            traversals[e.src.index()].push(Traversal {
                relation: e.rtype,
                other: e.dst,
                edge,
                direction: Direction::Forward,
            });
            traversals[e.dst.index()].push(Traversal {
                relation: self.schema.inverse(e.rtype),
                other: e.src,
                edge,
                direction: Direction::Backward,
            });
        }
        for list in &mut traversals {
            list.sort_unstable();
        }
        Hin {
            schema: self.schema,
            nodes: self.nodes,
            edges: self.edges,
            ids: self.ids,
            traversals,
            out_degree,
            in_degree,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::schema::default_sme_schema;

    fn small() -> Hin {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        b.add_node("a", "enterprise", None).unwrap();
        b.add_node("b", "enterprise", None).unwrap();
        b.add_node("p", "person", None).unwrap();
        b.add_node("q", "person", None).unwrap();
        b.add_node("lonely", "commodity", None).unwrap();
        b.add_edge("e1", "a", "b", "parent", Some(1)).unwrap();
        b.add_edge("e2", "a", "p", "control", Some(2)).unwrap();
        b.add_edge("e3", "p", "q", "relate", Some(3)).unwrap();
        b.add_edge("e4", "b", "p", "shareholder", Some(4)).unwrap();
        b.add_edge("e5", "b", "a", "supply", Some(5)).unwrap();
        b.build()
    }

    fn rel(h: &Hin, name: &str, s: &str, t: &str) -> RelationId {
        let sc = h.schema();
        sc.relation_id(name, sc.object_type(s).unwrap(), sc.object_type(t).unwrap())
            .unwrap()
    }

    #[test]
    fn inverse_traversal_is_implicit() {
        let h = small();
        let a = h.node_idx("a").unwrap();
        let b = h.node_idx("b").unwrap();
        assert_eq!(h.neighbors(a, rel(&h, "parent", "enterprise", "enterprise")), vec![b]);
        assert_eq!(h.neighbors(b, rel(&h, "subsidiary", "enterprise", "enterprise")), vec![a]);
        assert_eq!(h.neighbors(a, rel(&h, "sales", "enterprise", "enterprise")), vec![b]);
        assert_eq!(h.edge_count(), 5);
    }

    #[test]
    fn self_inverse_relation_is_walkable_both_ways() {
        let h = small();
        let p = h.node_idx("p").unwrap();
        let q = h.node_idx("q").unwrap();
        let relate = rel(&h, "relate", "person", "person");
        assert_eq!(h.neighbors(p, relate), vec![q]);
        assert_eq!(h.neighbors(q, relate), vec![p]);
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let h = small();
        let lonely = h.node_idx("lonely").unwrap();
        for r in 0..h.schema().relation_count() {
            assert!(h.neighbors(lonely, RelationId(r as u16)).is_empty());
        }
    }

    #[test]
    fn unknown_node_lookup_fails() {
        let h = small();
        let r = rel(&h, "parent", "enterprise", "enterprise");
        assert!(matches!(h.neighbors_by_id("zz", r), Err(HinError::UnknownNode(_))));
    }

    #[test]
    fn add_edge_rejects_mismatched_endpoints() {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        b.add_node("a", "enterprise", None).unwrap();
        b.add_node("p", "person", None).unwrap();
        let err = b.add_edge("e", "a", "p", "parent", None).unwrap_err();
        assert!(matches!(err, HinError::TypeMismatch { .. }));
        let err = b.add_edge("e", "a", "p", "bogus", None).unwrap_err();
        assert!(matches!(err, HinError::UnknownType { .. }));
        let err = b.add_edge("e", "a", "v99", "control", None).unwrap_err();
        assert!(matches!(err, HinError::DanglingEdge { .. }));
    }

    #[test]
    fn duplicate_node_id_is_rejected() {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        b.add_node("a", "enterprise", None).unwrap();
        assert!(matches!(
            b.add_node("a", "person", None),
            Err(HinError::DuplicateId { .. })
        ));
    }

    #[test]
    fn as_of_keeps_edges_inside_window() {
        let h = small();
        let w = h.as_of(2, 3).unwrap();
        let ids: Vec<_> = w.edges().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["e2", "e3"]);
        assert_eq!(w.node_count(), h.node_count());
        w.validate().unwrap();
    }

    #[test]
    fn as_of_identity_and_empty_windows() {
        let h = small();
        assert_eq!(h.as_of(i64::MIN, i64::MAX).unwrap(), h);
        let none = h.as_of(100, 200).unwrap();
        assert_eq!(none.edge_count(), 0);
        assert_eq!(none.node_count(), 5);
        assert!(matches!(h.as_of(3, 2), Err(HinError::InvalidWindow { .. })));
    }

    #[test]
    fn as_of_drops_edges_of_dropped_nodes() {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        b.add_node("a", "enterprise", Some(10)).unwrap();
        b.add_node("b", "enterprise", None).unwrap();
        b.add_edge("e", "a", "b", "parent", None).unwrap();
        let h = b.build();
        let w = h.as_of(0, 5).unwrap();
        assert_eq!(w.node_count(), 1);
        assert_eq!(w.edge_count(), 0);
    }

    #[test]
    fn degrees_count_stored_edges() {
        let h = small();
        let a = h.node_idx("a").unwrap();
        let p = h.node_idx("p").unwrap();
        assert_eq!(h.out_degree(a), 2);
        assert_eq!(h.in_degree(a), 1);
        assert_eq!(h.in_degree(p), 2);
        assert_eq!(h.out_degree(p), 1);
    }
}
