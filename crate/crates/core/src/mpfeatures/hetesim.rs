//! HeteSim relevance via cached reachable-probability operators.
//!
//! A meta path `R1..Rn` is cut at `ceil(n/2)`. The left half is walked
//! forward from the source, the right half backward from the target. When
//! `n` is odd the middle relation is split into an out-half (node to link
//! object) and an in-half (link object to node), so both walks meet on the
//! same link objects. Relevance is the cosine of the two distributions.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use crate::hin::{Direction, Hin, NodeIdx, RelationId};
use crate::metapath::MetaPath;

use super::FeatureError;

/// One transition of a half walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    /// Node to node along a relation.
    Rel(RelationId),
    /// Node to the link objects of a relation that leave it.
    HalfOut(RelationId),
    /// Node to the link objects of a relation that arrive at it.
    HalfIn(RelationId),
}

/// Sparse row-stochastic (or zero-row) operator. Rows are indexed by node;
/// columns are nodes, or link objects after a half step.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    rows: Vec<Vec<(u32, f64)>>,
    norms: Vec<f64>,
}

impl SparseOp {
    fn new(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let norms = rows
            .iter()
            .map(|r| r.iter().map(|(_, v)| v * v).sum::<f64>().sqrt())
            .collect();
        SparseOp { rows, norms }
    }

    /// Sorted `(column, probability)` pairs of one row.
    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.norms[i]
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Row-by-row product `self * rhs`.
    pub fn multiply(&self, rhs: &SparseOp) -> SparseOp {
        let rows = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc: HashMap<u32, f64> = HashMap::new();
                for &(k, a) in row {
                    if let Some(next) = rhs.rows.get(k as usize) {
                        for &(j, b) in next {
                            *acc.entry(j).or_insert(0.0) += a * b;
                        }
                    }
                }
                let mut out: Vec<(u32, f64)> = acc.into_iter().collect();
                out.sort_unstable_by_key(|e| e.0);
                out
            })
            .collect();
        SparseOp::new(rows)
    }
}

fn dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Left and right step sequences of a meta path.
pub fn split_path(hin: &Hin, mp: &MetaPath) -> (Vec<Step>, Vec<Step>) {
    let schema = hin.schema();
    let rels = mp.relations();
    let n = rels.len();
    let mid = n.div_ceil(2);
    let mut left: Vec<Step> = rels[..mid].iter().map(|&r| Step::Rel(r)).collect();
    let mut right: Vec<Step> = rels[mid..].iter().rev().map(|&r| Step::Rel(schema.inverse(r))).collect();
    if n % 2 == 1 {
        let m = rels[mid - 1];
        *left.last_mut().expect("non-empty") = Step::HalfOut(m);
        right.push(Step::HalfIn(m));
    }
    (left, right)
}

type Slot = Arc<OnceLock<Arc<SparseOp>>>;

/// Operator cache over one network. Each step sequence is built once even
/// under concurrent requests.
pub struct HeteSimEngine<'a> {
    hin: &'a Hin,
    cache: Mutex<HashMap<Vec<Step>, Slot>>,
}

impl<'a> HeteSimEngine<'a> {
    pub fn new(hin: &'a Hin) -> Self {
        HeteSimEngine {
            hin,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn hin(&self) -> &'a Hin {
        self.hin
    }

    /// Number of cached operators, for diagnostics.
    pub fn cached(&self) -> usize {
        self.cache.lock().expect("cache poisoned").len()
    }

    /// The composed operator of `steps` (prefix operator times the last step).
    pub fn operator(&self, steps: &[Step]) -> Arc<SparseOp> {
        assert!(!steps.is_empty(), "operator of an empty step sequence");
        let slot = {
            let mut cache = self.cache.lock().expect("cache poisoned");
            cache.entry(steps.to_vec()).or_default().clone()
        };
        slot.get_or_init(|| {
            let last = self.step_operator(steps[steps.len() - 1]);
            if steps.len() == 1 {
                Arc::new(last)
            } else {
                Arc::new(self.operator(&steps[..steps.len() - 1]).multiply(&last))
            }
        })
        .clone()
    }

    fn step_operator(&self, step: Step) -> SparseOp {
        let hin = self.hin;
        let rows = (0..hin.node_count() as u32)
            .into_par_iter()
            .map(|i| {
                let node = NodeIdx(i);
                let (trav, objects) = match step {
                    Step::Rel(r) => (hin.traversals(node, r), None),
                    Step::HalfOut(r) => (hin.traversals(node, r), Some(Direction::Backward)),
                    Step::HalfIn(r) => (hin.traversals(node, hin.schema().inverse(r)), Some(Direction::Forward)),
                };
                if trav.is_empty() {
                    return Vec::new();
                }
                let w = 1.0 / trav.len() as f64;
                let mut acc: Vec<(u32, f64)> = Vec::with_capacity(trav.len());
                for t in trav {
                    let col = match objects {
                        None => t.other.0,
                        // A link object is the edge read in the middle relation's
                        // orientation; both halves must agree on its id.
                        Some(flip) => t.edge.0 * 2 + u32::from(t.direction == flip),
                    };
                    acc.push((col, w));
                }
                acc.sort_unstable_by_key(|e| e.0);
                let mut out: Vec<(u32, f64)> = Vec::with_capacity(acc.len());
                for (c, v) in acc {
                    match out.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => out.push((c, v)),
                    }
                }
                out
            })
            .collect();
        SparseOp::new(rows)
    }

    /// Normalized HeteSim between `s` and `t` along `mp`.
    pub fn hetesim(&self, s: NodeIdx, t: NodeIdx, mp: &MetaPath) -> Result<f64, FeatureError> {
        let hin = self.hin;
        for (node, want) in [(s, mp.root()), (t, mp.terminal())] {
            if node.index() >= hin.node_count() || hin.node_type(node) != want {
                return Err(FeatureError::TypeMismatch);
            }
        }
        let (left, right) = split_path(hin, mp);
        let l = self.operator(&left);
        let r = self.operator(&right);
        Ok(cosine(&l, s.index(), &r, t.index()))
    }
}

pub(crate) fn cosine(l: &SparseOp, s: usize, r: &SparseOp, t: usize) -> f64 {
    let denom = l.row_norm(s) * r.row_norm(t);
    if denom == 0.0 {
        return 0.0;
    }
    (dot(l.row(s), r.row(t)) / denom).min(1.0)
}

/// Free-function form of [`HeteSimEngine::hetesim`].
pub fn hetesim(engine: &HeteSimEngine<'_>, s: NodeIdx, t: NodeIdx, mp: &MetaPath) -> Result<f64, FeatureError> {
    engine.hetesim(s, t, mp)
}
