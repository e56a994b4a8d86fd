use crate::hin::{EdgeIdx, Hin, NodeIdx};

use super::{check_start, MetaPath, MetaPathError};

/// A concrete walk `v1 e1 v2 ... en v(n+1)` following a meta path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathInstance {
    pub nodes: Vec<NodeIdx>,
    pub edges: Vec<EdgeIdx>,
}

impl PathInstance {
    pub fn terminal(&self) -> NodeIdx {
        *self.nodes.last().expect("instances are non-empty")
    }
}

/// Every instance of `mp` starting at `start`. Interior nodes may repeat;
/// the final node never equals `start`.
pub fn match_instances(hin: &Hin, start: NodeIdx, mp: &MetaPath) -> Result<Vec<PathInstance>, MetaPathError> {
    check_start(hin, start, mp)?;
    let mut out = Vec::new();
    let mut nodes = vec![start];
    let mut edges = Vec::with_capacity(mp.len());
    extend(hin, mp, &mut nodes, &mut edges, &mut out);
    Ok(out)
}

fn extend(hin: &Hin, mp: &MetaPath, nodes: &mut Vec<NodeIdx>, edges: &mut Vec<EdgeIdx>, out: &mut Vec<PathInstance>) {
    let depth = edges.len();
    let at = *nodes.last().expect("non-empty");
    if depth == mp.len() {
        if at != nodes[0] {
            out.push(PathInstance {
                nodes: nodes.clone(),
                edges: edges.clone(),
            });
        }
        return;
    }
    for t in hin.traversals(at, mp.relations()[depth]) {
        nodes.push(t.other);
        edges.push(t.edge);
        extend(hin, mp, nodes, edges, out);
        nodes.pop();
        edges.pop();
    }
}

/// Distinct terminal nodes over all instances of `mp` from `start`, sorted.
///
/// Computed by set propagation rather than instance enumeration, so the
/// cost stays linear in the number of distinct intermediate nodes.
pub fn reachable_targets(hin: &Hin, start: NodeIdx, mp: &MetaPath) -> Result<Vec<NodeIdx>, MetaPathError> {
    check_start(hin, start, mp)?;
    let mut frontier = vec![start];
    let mut seen = vec![false; hin.node_count()];
    for &r in mp.relations() {
        let mut next = Vec::new();
        for &node in &frontier {
            for t in hin.traversals(node, r) {
                if !seen[t.other.index()] {
                    seen[t.other.index()] = true;
                    next.push(t.other);
                }
            }
        }
        for n in &next {
            seen[n.index()] = false;
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    frontier.retain(|&n| n != start);
    frontier.sort_unstable();
    Ok(frontier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{default_sme_schema, HinBuilder};
    use crate::metapath::parse_metapath;
    use std::sync::Arc;

    fn chain() -> Hin {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        for (id, t) in [("a", "enterprise"), ("b", "enterprise"), ("c", "enterprise"), ("n", "news")] {
            b.add_node(id, t, None).unwrap();
        }
        b.add_edge("e1", "a", "b", "parent", None).unwrap();
        b.add_edge("e2", "b", "n", "report", None).unwrap();
        b.add_edge("e3", "c", "b", "parent", None).unwrap();
        b.build()
    }

    #[test]
    fn finds_parent_report_instance() {
        let h = chain();
        let mp = parse_metapath("E-[parent]->E-[report]->N", h.schema()).unwrap();
        let a = h.node_idx("a").unwrap();
        let inst = match_instances(&h, a, &mp).unwrap();
        assert_eq!(inst.len(), 1);
        let ids: Vec<_> = inst[0].nodes.iter().map(|&n| h.node(n).id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "n"]);
        assert_eq!(reachable_targets(&h, a, &mp).unwrap(), vec![h.node_idx("n").unwrap()]);
    }

    #[test]
    fn excludes_return_to_start_but_allows_interior_revisit() {
        let h = chain();
        let siblings = parse_metapath("E-[parent]->E-[subsidiary]->E", h.schema()).unwrap();
        let a = h.node_idx("a").unwrap();
        let inst = match_instances(&h, a, &siblings).unwrap();
        let ends: Vec<_> = inst.iter().map(|p| h.node(p.terminal()).id.as_str()).collect();
        assert_eq!(ends, ["c"]);
        let round = parse_metapath("E-[parent]->E-[subsidiary]->E-[parent]->E", h.schema()).unwrap();
        let inst = match_instances(&h, a, &round).unwrap();
        assert!(inst.iter().all(|p| p.terminal() != a));
        assert!(inst.iter().any(|p| p.nodes[2] == a), "interior revisit of the start is allowed");
    }

    #[test]
    fn no_out_edges_means_no_instances() {
        let h = chain();
        let mp = parse_metapath("E-[parent]->E", h.schema()).unwrap();
        let b = h.node_idx("b").unwrap();
        assert!(match_instances(&h, b, &mp).unwrap().is_empty());
        assert!(reachable_targets(&h, b, &mp).unwrap().is_empty());
    }

    #[test]
    fn wrong_start_type_is_rejected() {
        let h = chain();
        let mp = parse_metapath("E-[parent]->E", h.schema()).unwrap();
        let n = h.node_idx("n").unwrap();
        assert_eq!(match_instances(&h, n, &mp), Err(MetaPathError::TypeMismatch));
        assert_eq!(reachable_targets(&h, n, &mp), Err(MetaPathError::TypeMismatch));
    }
}
