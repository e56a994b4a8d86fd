//! Brute-force reference implementations for small inputs.
//!
//! Everything here reads the raw edge list and the schema directly; none of
//! the traversal index, operator cache or matcher code is reused. Self-loop
//! links are outside their domain.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::hin::{Hin, RelationId};
use crate::metapath::MetaPath;
use crate::riskbayes::NaiveBayesModel;

pub const ORACLE_NODE_LIMIT: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle input has {0} nodes, above the limit of {ORACLE_NODE_LIMIT}")]
    OracleLimitExceeded(usize),
    #[error("start or target type does not fit the meta path")]
    TypeMismatch,
}

fn check(hin: &Hin) -> Result<(), OracleError> {
    if hin.node_count() > ORACLE_NODE_LIMIT {
        return Err(OracleError::OracleLimitExceeded(hin.node_count()));
    }
    Ok(())
}

/// `(next node, edge)` pairs for one hop along `r` from `a`, scanning every
/// edge. An edge stored as `r` is walked forward, one stored as the
/// inverse of `r` backward.
fn hop(hin: &Hin, a: usize, r: RelationId) -> Vec<(usize, usize)> {
    let inv = hin.schema().inverse(r);
    let mut out = Vec::new();
    for (i, e) in hin.edges().iter().enumerate() {
        if e.rtype == r && e.src.index() == a {
            out.push((e.dst.index(), i));
        }
        if e.rtype == inv && e.dst.index() == a {
            out.push((e.src.index(), i));
        }
    }
    out
}

/// Path instances as `(node positions, edge positions)`.
pub type InstanceSet = BTreeSet<(Vec<usize>, Vec<usize>)>;

/// Typed depth-first enumeration of path instances.
pub fn oracle_match(hin: &Hin, start: usize, mp: &MetaPath) -> Result<InstanceSet, OracleError> {
    check(hin)?;
    if hin.nodes()[start].otype != mp.types()[0] {
        return Err(OracleError::TypeMismatch);
    }
    let mut out = BTreeSet::new();
    fn dfs(hin: &Hin, mp: &MetaPath, nodes: &mut Vec<usize>, edges: &mut Vec<usize>, out: &mut BTreeSet<(Vec<usize>, Vec<usize>)>) {
        let depth = edges.len();
        if depth == mp.relations().len() {
            if nodes[depth] != nodes[0] {
                out.insert((nodes.clone(), edges.clone()));
            }
            return;
        }
        let want = mp.types()[depth + 1];
        for (next, e) in hop(hin, nodes[depth], mp.relations()[depth]) {
            if hin.nodes()[next].otype != want {
                continue;
            }
            nodes.push(next);
            edges.push(e);
            dfs(hin, mp, nodes, edges, out);
            nodes.pop();
            edges.pop();
        }
    }
    dfs(hin, mp, &mut vec![start], &mut Vec::new(), &mut out);
    Ok(out)
}

fn terminals(hin: &Hin, start: usize, mp: &MetaPath) -> Result<BTreeSet<usize>, OracleError> {
    Ok(oracle_match(hin, start, mp)?.into_iter().map(|(n, _)| *n.last().expect("non-empty")).collect())
}

/// `(risky targets, targets)` from enumerated instances.
pub fn oracle_naive(hin: &Hin, start: usize, mp: &MetaPath, risky: &[bool]) -> Result<(usize, usize), OracleError> {
    let t = terminals(hin, start, mp)?;
    Ok((t.iter().filter(|&&n| risky[n]).count(), t.len()))
}

/// `(targets, out-degree + summed in-degree)` from raw edge counts.
pub fn oracle_countsim(hin: &Hin, start: usize, mp: &MetaPath) -> Result<(usize, usize), OracleError> {
    let t = terminals(hin, start, mp)?;
    let out = hin.edges().iter().filter(|e| e.src.index() == start).count();
    let inn: usize = t
        .iter()
        .map(|&n| hin.edges().iter().filter(|e| e.dst.index() == n).count())
        .sum();
    Ok((t.len(), out + inn))
}

/// Walk objects: nodes, or links read in a relation's orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Obj {
    Node(usize),
    /// `(edge, node the link leaves from)`.
    Link(usize, usize),
}

#[derive(Debug, Clone, Copy)]
enum Atom {
    Rel(RelationId),
    Out(RelationId),
    In(RelationId),
}

#[derive(Debug, Clone, Copy)]
struct OStep {
    atom: Atom,
    inverted: bool,
}

fn forward_raw(hin: &Hin, atom: Atom, o: Obj) -> Vec<Obj> {
    match (atom, o) {
        (Atom::Rel(r), Obj::Node(a)) => hop(hin, a, r).into_iter().map(|(n, _)| Obj::Node(n)).collect(),
        (Atom::Out(r), Obj::Node(a)) => hop(hin, a, r).into_iter().map(|(_, e)| Obj::Link(e, a)).collect(),
        (Atom::In(r), Obj::Link(e, from)) => hop(hin, from, r)
            .into_iter()
            .filter(|&(_, e2)| e2 == e)
            .map(|(n, _)| Obj::Node(n))
            .take(1)
            .collect(),
        _ => Vec::new(),
    }
}

fn backward_raw(hin: &Hin, atom: Atom, o: Obj) -> Vec<Obj> {
    let inv = |r| hin.schema().inverse(r);
    match (atom, o) {
        (Atom::Rel(r), Obj::Node(b)) => hop(hin, b, inv(r)).into_iter().map(|(n, _)| Obj::Node(n)).collect(),
        (Atom::Out(_), Obj::Link(_, from)) => vec![Obj::Node(from)],
        (Atom::In(r), Obj::Node(b)) => hop(hin, b, inv(r)).into_iter().map(|(n, e)| Obj::Link(e, n)).collect(),
        _ => Vec::new(),
    }
}

fn forward(hin: &Hin, s: OStep, o: Obj) -> Vec<Obj> {
    if s.inverted {
        backward_raw(hin, s.atom, o)
    } else {
        forward_raw(hin, s.atom, o)
    }
}

fn backward(hin: &Hin, s: OStep, o: Obj) -> Vec<Obj> {
    if s.inverted {
        forward_raw(hin, s.atom, o)
    } else {
        backward_raw(hin, s.atom, o)
    }
}

/// Pairwise random-walk recursion: peel one step from each end and average
/// over the out-neighbors of `a` and the in-neighbors of `b`.
fn relevance(hin: &Hin, a: Obj, b: Obj, steps: &[OStep]) -> f64 {
    if steps.is_empty() {
        return f64::from(u8::from(a == b));
    }
    debug_assert!(steps.len().is_multiple_of(2), "step sequences are balanced");
    let outs = forward(hin, steps[0], a);
    let ins = backward(hin, steps[steps.len() - 1], b);
    if outs.is_empty() || ins.is_empty() {
        return 0.0;
    }
    let inner = &steps[1..steps.len() - 1];
    let mut sum = 0.0;
    for &o in &outs {
        for &i in &ins {
            sum += relevance(hin, o, i, inner);
        }
    }
    sum / (outs.len() * ins.len()) as f64
}

fn halves(mp: &MetaPath) -> (Vec<OStep>, Vec<OStep>) {
    let rels = mp.relations();
    let n = rels.len();
    let plain = |r: RelationId| OStep {
        atom: Atom::Rel(r),
        inverted: false,
    };
    if n.is_multiple_of(2) {
        (rels[..n / 2].iter().map(|&r| plain(r)).collect(), rels[n / 2..].iter().map(|&r| plain(r)).collect())
    } else {
        let m = n / 2;
        let mut left: Vec<OStep> = rels[..m].iter().map(|&r| plain(r)).collect();
        left.push(OStep {
            atom: Atom::Out(rels[m]),
            inverted: false,
        });
        let mut right = vec![OStep {
            atom: Atom::In(rels[m]),
            inverted: false,
        }];
        right.extend(rels[m + 1..].iter().map(|&r| plain(r)));
        (left, right)
    }
}

fn inverted(steps: &[OStep]) -> Vec<OStep> {
    steps
        .iter()
        .rev()
        .map(|s| OStep {
            atom: s.atom,
            inverted: !s.inverted,
        })
        .collect()
}

/// Normalized HeteSim by the recursive definition.
pub fn oracle_hetesim(hin: &Hin, s: usize, t: usize, mp: &MetaPath) -> Result<f64, OracleError> {
    check(hin)?;
    if hin.nodes()[s].otype != mp.root() || hin.nodes()[t].otype != mp.terminal() {
        return Err(OracleError::TypeMismatch);
    }
    let (left, right) = halves(mp);
    let full: Vec<OStep> = left.iter().chain(&right).copied().collect();
    let raw = relevance(hin, Obj::Node(s), Obj::Node(t), &full);
    let ls: Vec<OStep> = left.iter().copied().chain(inverted(&left)).collect();
    let rs: Vec<OStep> = inverted(&right).into_iter().chain(right.iter().copied()).collect();
    let norm = (relevance(hin, Obj::Node(s), Obj::Node(s), &ls) * relevance(hin, Obj::Node(t), Obj::Node(t), &rs)).sqrt();
    Ok(if norm == 0.0 { 0.0 } else { raw / norm })
}

/// `(risky HeteSim mass, total HeteSim mass)` over enumerated targets.
pub fn oracle_hetesim_mp(hin: &Hin, start: usize, mp: &MetaPath, risky: &[bool]) -> Result<(f64, f64), OracleError> {
    let (mut num, mut den) = (0.0, 0.0);
    for t in terminals(hin, start, mp)? {
        let v = oracle_hetesim(hin, start, t, mp)?;
        den += v;
        if risky[t] {
            num += v;
        }
    }
    Ok((num, den))
}

/// Posterior as the plain product ratio, without logarithms.
pub fn oracle_nb(model: &NaiveBayesModel, attributes: &BTreeMap<String, String>) -> f64 {
    let mut risky = model.prior_risky;
    let mut safe = model.prior_safe;
    for (name, level) in attributes {
        let table = &model.attributes[name];
        match table.levels.iter().position(|l| l == level) {
            Some(i) => {
                risky *= table.risky[i];
                safe *= table.safe[i];
            }
            None => {
                risky *= table.unseen_risky;
                safe *= table.unseen_safe;
            }
        }
    }
    risky / (risky + safe)
}

/// Share of positive/negative pairs ranked correctly, ties counting one half.
pub fn oracle_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// Upper tail of chi-square(1) as the regularized incomplete gamma
/// `Q(1/2, w/2)`: series below `a + 1`, Lentz continued fraction above.
pub fn oracle_chi2_sf_1(w: f64) -> f64 {
    let a = 0.5;
    let x = w / 2.0;
    if x <= 0.0 {
        return 1.0;
    }
    let ln_gamma_half = std::f64::consts::PI.sqrt().ln();
    let prefix = (a * x.ln() - x - ln_gamma_half).exp();
    if x < a + 1.0 {
        let (mut term, mut sum, mut ap) = (1.0 / a, 1.0 / a, a);
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        1.0 - sum * prefix
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        prefix * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metapath::parse_metapath;
    use crate::synthgen::{figure3_fixture, figure5_fixture};

    #[test]
    fn parent_report_instance() {
        let h = figure3_fixture();
        let mp = parse_metapath("E-[parent]->E-[report]->N", h.schema()).unwrap();
        let v1 = h.node_idx("v1").unwrap().index();
        let got = oracle_match(&h, v1, &mp).unwrap();
        let want_nodes: Vec<usize> = ["v1", "v2", "v10"].iter().map(|id| h.node_idx(id).unwrap().index()).collect();
        let e1 = h.edges().iter().position(|e| e.id == "e1").unwrap();
        let e9 = h.edges().iter().position(|e| e.id == "e9").unwrap();
        assert!(got.contains(&(want_nodes, vec![e1, e9])));
    }

    #[test]
    fn controller_example_counts() {
        let h = figure5_fixture();
        let mp = parse_metapath("E-[control]->P-[shareholder]->E", h.schema()).unwrap();
        let risky: Vec<bool> = h.nodes().iter().map(|n| n.label.is_some_and(|l| l.risky)).collect();
        let j = h.node_idx("J").unwrap().index();
        assert_eq!(oracle_match(&h, j, &mp).unwrap().len(), 5);
        assert_eq!(oracle_naive(&h, j, &mp, &risky).unwrap(), (3, 5));
    }

    #[test]
    fn self_relevance_with_one_neighbor() {
        let h = figure3_fixture();
        let mp = parse_metapath("E-[parent]->E-[subsidiary]->E", h.schema()).unwrap();
        let v1 = h.node_idx("v1").unwrap().index();
        assert_eq!(oracle_hetesim(&h, v1, v1, &mp).unwrap(), 1.0);
    }

    #[test]
    fn auc_and_chi2_references() {
        assert_eq!(oracle_auc(&[0.9, 0.8, 0.3, 0.2], &[true, false, true, false]), 0.75);
        assert!((oracle_chi2_sf_1(3.841) - 0.05).abs() < 5e-4);
        assert!((oracle_chi2_sf_1(0.1) - 0.7518296340458492).abs() < 1e-12);
        assert!((oracle_chi2_sf_1(10.0) - 0.001565402258002549).abs() < 1e-14);
    }

    #[test]
    fn limit() {
        let big = crate::synthgen::random_small_hin(1, 31, 10);
        let mp = parse_metapath("E-[parent]->E", big.schema()).unwrap();
        assert_eq!(oracle_match(&big, 0, &mp), Err(OracleError::OracleLimitExceeded(31)));
    }
}
