//! Meta-path features: risky-neighbor share, degree-normalized reach and
//! HeteSim-weighted risky share.

mod export;
mod hetesim;
mod matrix;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{Hin, NodeIdx, Schema};
use crate::metapath::{parse_metapath, reachable_targets, MetaPath, MetaPathError};

pub use export::{write_feature_csv, write_feature_sidecar, FeatureSidecar};
pub use hetesim::{hetesim, split_path, HeteSimEngine, SparseOp, Step};
pub use matrix::{build_feature_matrix, build_feature_matrix_with, FeatureMatrix, ImputationStats};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("no path instances from the node")]
    NoPathInstances,
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("node type does not match the meta path")]
    TypeMismatch,
    #[error("unknown feature kind `{0}`")]
    UnknownKind(String),
    #[error("feature name `{0}` lacks an `@kind` suffix")]
    MissingKind(String),
    #[error(transparent)]
    MetaPath(#[from] MetaPathError),
}

impl FeatureError {
    /// Errors that make a cell undefined rather than invalid.
    pub fn is_missing(&self) -> bool {
        matches!(self, FeatureError::NoPathInstances | FeatureError::ZeroDenominator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Naive,
    CountSim,
    HeteSim,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Naive, FeatureKind::CountSim, FeatureKind::HeteSim];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Naive => "naive",
            FeatureKind::CountSim => "countsim",
            FeatureKind::HeteSim => "hetesim",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(FeatureKind::Naive),
            "countsim" => Ok(FeatureKind::CountSim),
            "hetesim" => Ok(FeatureKind::HeteSim),
            other => Err(FeatureError::UnknownKind(other.to_string())),
        }
    }
}

/// A meta path paired with the formula that turns it into a number.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mp: MetaPath,
    pub kind: FeatureKind,
    /// `<dsl>@<kind>`, e.g. `E-[control]->P@hetesim`.
    pub name: String,
}

impl FeatureSpec {
    pub fn new(schema: &Schema, mp: MetaPath, kind: FeatureKind) -> Self {
        let name = format!("{}@{}", mp.format(schema), kind);
        FeatureSpec { mp, kind, name }
    }

    pub fn parse(name: &str, schema: &Schema) -> Result<Self, FeatureError> {
        let (path, kind) = name
            .rsplit_once('@')
            .ok_or_else(|| FeatureError::MissingKind(name.to_string()))?;
        let mp = parse_metapath(path, schema)?;
        Ok(FeatureSpec::new(schema, mp, kind.parse()?))
    }

    /// The meta path text without the kind suffix.
    pub fn path_text(&self) -> &str {
        self.name.rsplit_once('@').map_or(&self.name, |(p, _)| p)
    }
}

/// Per-node risk indicator, indexed by node position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RiskMap(Vec<bool>);

impl RiskMap {
    /// Risky iff the node carries a risky label, observed or imputed.
    pub fn from_labels(hin: &Hin) -> Self {
        RiskMap(hin.nodes().iter().map(|n| n.label.is_some_and(|l| l.risky)).collect())
    }

    pub fn from_vec(flags: Vec<bool>) -> Self {
        RiskMap(flags)
    }

    pub fn is_risky(&self, node: NodeIdx) -> bool {
        self.0.get(node.index()).copied().unwrap_or(false)
    }

    pub fn set(&mut self, node: NodeIdx, risky: bool) {
        self.0[node.index()] = risky;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn targets(hin: &Hin, x: NodeIdx, mp: &MetaPath) -> Result<Vec<NodeIdx>, FeatureError> {
    reachable_targets(hin, x, mp).map_err(|e| match e {
        MetaPathError::TypeMismatch => FeatureError::TypeMismatch,
        other => other.into(),
    })
}

/// `(risky targets, targets)` as exact counts.
pub fn naive_mp_ratio(hin: &Hin, x: NodeIdx, mp: &MetaPath, risk: &RiskMap) -> Result<(usize, usize), FeatureError> {
    let t = targets(hin, x, mp)?;
    if t.is_empty() {
        return Err(FeatureError::NoPathInstances);
    }
    Ok((t.iter().filter(|&&n| risk.is_risky(n)).count(), t.len()))
}

/// Share of distinct reachable targets that are risky.
pub fn naive_mp(hin: &Hin, x: NodeIdx, mp: &MetaPath, risk: &RiskMap) -> Result<f64, FeatureError> {
    let (num, den) = naive_mp_ratio(hin, x, mp, risk)?;
    Ok(num as f64 / den as f64)
}

/// Distinct reachable targets over `out_degree(x) + sum in_degree(target)`.
pub fn countsim_mp(hin: &Hin, x: NodeIdx, mp: &MetaPath) -> Result<f64, FeatureError> {
    let t = targets(hin, x, mp)?;
    let den = hin.out_degree(x) + t.iter().map(|&n| hin.in_degree(n)).sum::<usize>();
    if den == 0 {
        return Err(FeatureError::ZeroDenominator);
    }
    Ok(t.len() as f64 / den as f64)
}

/// HeteSim mass on risky targets over total HeteSim mass on all targets.
pub fn hetesim_mp(engine: &HeteSimEngine<'_>, x: NodeIdx, mp: &MetaPath, risk: &RiskMap) -> Result<f64, FeatureError> {
    let hin = engine.hin();
    let t = targets(hin, x, mp)?;
    let (left, right) = split_path(hin, mp);
    let (l, r) = (engine.operator(&left), engine.operator(&right));
    let (mut num, mut den) = (0.0, 0.0);
    for n in t {
        let v = hetesim::cosine(&l, x.index(), &r, n.index());
        den += v;
        if risk.is_risky(n) {
            num += v;
        }
    }
    if den == 0.0 {
        return Err(FeatureError::ZeroDenominator);
    }
    Ok(num / den)
}

/// One cell by its spec.
pub fn feature_value(engine: &HeteSimEngine<'_>, x: NodeIdx, spec: &FeatureSpec, risk: &RiskMap) -> Result<f64, FeatureError> {
    match spec.kind {
        FeatureKind::Naive => naive_mp(engine.hin(), x, &spec.mp, risk),
        FeatureKind::CountSim => countsim_mp(engine.hin(), x, &spec.mp),
        FeatureKind::HeteSim => hetesim_mp(engine, x, &spec.mp, risk),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{default_sme_schema, HinBuilder, RiskLabel};
    use std::sync::Arc;

    /// x has three enterprise children, each with in-degree one.
    fn star(risky: &[bool; 3]) -> Hin {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        b.add_node("x", "enterprise", None).unwrap();
        for (i, r) in risky.iter().enumerate() {
            let n = b.add_node(&format!("t{i}"), "enterprise", None).unwrap();
            b.set_label(n, Some(RiskLabel::observed(*r)));
            b.add_edge(&format!("e{i}"), "x", &format!("t{i}"), "parent", None).unwrap();
        }
        b.add_node("lonely", "enterprise", None).unwrap();
        b.build()
    }

    fn parent(h: &Hin) -> MetaPath {
        parse_metapath("E-[parent]->E", h.schema()).unwrap()
    }

    #[test]
    fn countsim_on_star() {
        let h = star(&[false; 3]);
        let x = h.node_idx("x").unwrap();
        assert_eq!(countsim_mp(&h, x, &parent(&h)).unwrap(), 0.5);
        let lonely = h.node_idx("lonely").unwrap();
        assert_eq!(countsim_mp(&h, lonely, &parent(&h)), Err(FeatureError::ZeroDenominator));
    }

    #[test]
    fn naive_boundaries() {
        for (flags, want) in [([false; 3], 0.0), ([true; 3], 1.0), ([true, false, false], 1.0 / 3.0)] {
            let h = star(&flags);
            let risk = RiskMap::from_labels(&h);
            let x = h.node_idx("x").unwrap();
            assert_eq!(naive_mp(&h, x, &parent(&h), &risk).unwrap(), want);
        }
        let h = star(&[true; 3]);
        let lonely = h.node_idx("lonely").unwrap();
        assert_eq!(
            naive_mp(&h, lonely, &parent(&h), &RiskMap::from_labels(&h)),
            Err(FeatureError::NoPathInstances)
        );
    }

    #[test]
    fn symmetric_star_hetesim_equals_naive() {
        let h = star(&[true, false, true]);
        let risk = RiskMap::from_labels(&h);
        let x = h.node_idx("x").unwrap();
        let e = HeteSimEngine::new(&h);
        let mp = parent(&h);
        let hv = hetesim_mp(&e, x, &mp, &risk).unwrap();
        assert!((hv - naive_mp(&h, x, &mp, &risk).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn spec_names_round_trip() {
        let s = default_sme_schema();
        let spec = FeatureSpec::parse("E-[control]->P-[shareholder]->E@hetesim", &s).unwrap();
        assert_eq!(spec.kind, FeatureKind::HeteSim);
        assert_eq!(spec.path_text(), "E-[control]->P-[shareholder]->E");
        assert_eq!(FeatureSpec::parse(&spec.name, &s).unwrap(), spec);
        assert!(matches!(FeatureSpec::parse("E-[parent]->E", &s), Err(FeatureError::MissingKind(_))));
        assert!(matches!(FeatureSpec::parse("E-[parent]->E@x", &s), Err(FeatureError::UnknownKind(_))));
    }
}
