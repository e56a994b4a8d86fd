//! Seeded synthetic SME networks with planted contagion, fixtures and
//! brute-force oracles.

mod fixtures;
pub mod oracle;
mod random;

use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Pareto, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{default_sme_schema, discretize_numeric_attributes, write_hin, Hin, HinBuilder, HinError, NodeIdx, RiskLabel, DEFAULT_QUANTILE_BINS};
use crate::mpfeatures::{feature_value, FeatureSpec, HeteSimEngine, RiskMap};

pub use fixtures::{figure3_fixture, figure5_fixture};
pub use random::random_small_hin;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),
    #[error(transparent)]
    Hin(#[from] HinError),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub enterprises: usize,
    pub persons: usize,
    pub commodities: usize,
    pub news: usize,
    /// Mean links per enterprise for each relation.
    pub control_mean: f64,
    pub shareholder_mean: f64,
    pub manager_mean: f64,
    pub employee_mean: f64,
    pub boardmember_mean: f64,
    pub produce_mean: f64,
    pub report_mean: f64,
    pub supply_mean: f64,
    pub parent_prob: f64,
    /// Chance that a person has a `relate` link.
    pub relate_prob: f64,
    /// Pareto shape of person, commodity and news activity weights.
    pub activity_tail: f64,
    /// Activity multiplier of risky persons.
    pub risky_hub_factor: f64,
    pub person_risk_rate: f64,
    pub commodity_risk_rate: f64,
    pub negative_news_rate: f64,
    /// Share of person and commodity labels withheld for imputation.
    pub hidden_label_fraction: f64,
    /// Scales the enterprise's own attribute effect on default, in [0,1].
    pub attribute_signal: f64,
    /// Scales the planted meta-path effects on default, in [0,1].
    pub contagion_strength: f64,
    /// Features whose standardized values drive default, with unscaled
    /// log-odds per standard deviation.
    pub planted: Vec<PlantedFeature>,
    /// Log-odds per standard deviation of the latent financial health.
    pub attribute_effect: f64,
    pub base_default_rate: f64,
    /// Noise links per current link, stamped before `cutoff`.
    pub stale_fraction: f64,
    pub cutoff: i64,
    pub horizon: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            enterprises: 1200,
            persons: 7200,
            commodities: 350,
            news: 260,
            control_mean: 1.8,
            shareholder_mean: 5.0,
            manager_mean: 1.5,
            employee_mean: 2.0,
            boardmember_mean: 1.5,
            produce_mean: 1.2,
            report_mean: 1.8,
            supply_mean: 0.8,
            parent_prob: 0.15,
            relate_prob: 0.1,
            activity_tail: 1.5,
            risky_hub_factor: 4.0,
            person_risk_rate: 0.12,
            commodity_risk_rate: 0.15,
            negative_news_rate: 0.3,
            hidden_label_fraction: 0.3,
            attribute_signal: 0.5,
            contagion_strength: 0.9,
            planted: vec![
                PlantedFeature::new("E-[shareholder]->P@hetesim", 3.0),
                PlantedFeature::new("E-[report]->N@hetesim", 1.0),
                PlantedFeature::new("E-[control]->P@countsim", -1.6),
            ],
            attribute_effect: 0.6,
            base_default_rate: 0.25,
            stale_fraction: 0.25,
            cutoff: 3650,
            horizon: 4015,
        }
    }
}

impl GenConfig {
    /// Default proportions rescaled to roughly `total` nodes.
    pub fn with_total_nodes(total: usize) -> Self {
        let d = GenConfig::default();
        let base = (d.enterprises + d.persons + d.commodities + d.news) as f64;
        let f = total as f64 / base;
        let scale = |n: usize| ((n as f64 * f).round() as usize).max(1);
        GenConfig {
            enterprises: scale(d.enterprises),
            persons: scale(d.persons),
            commodities: scale(d.commodities),
            news: scale(d.news),
            ..d
        }
    }

    pub fn node_count(&self) -> usize {
        self.enterprises + self.persons + self.commodities + self.news
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InfeasibleConfig(m));
        for (name, p) in [
            ("parent_prob", self.parent_prob),
            ("relate_prob", self.relate_prob),
            ("person_risk_rate", self.person_risk_rate),
            ("commodity_risk_rate", self.commodity_risk_rate),
            ("negative_news_rate", self.negative_news_rate),
            ("hidden_label_fraction", self.hidden_label_fraction),
            ("attribute_signal", self.attribute_signal),
            ("contagion_strength", self.contagion_strength),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.base_default_rate > 0.0 && self.base_default_rate < 1.0) {
            return bad(format!("base_default_rate = {} must lie in (0,1)", self.base_default_rate));
        }
        if self.enterprises < 2 {
            return bad("need at least two enterprises".into());
        }
        let person_links = [self.control_mean, self.shareholder_mean, self.manager_mean, self.employee_mean, self.boardmember_mean];
        for (pool, n, demand) in [
            ("persons", self.persons, person_links.iter().cloned().fold(0.0, f64::max)),
            ("commodities", self.commodities, self.produce_mean),
            ("news", self.news, self.report_mean),
            ("enterprises", self.enterprises - 1, self.supply_mean),
        ] {
            if demand < 0.0 || !demand.is_finite() {
                return bad(format!("negative or non-finite link mean for {pool}"));
            }
            if demand > 0.0 && (n as f64) < demand.ceil() {
                return bad(format!("mean degree {demand} exceeds {n} available {pool}"));
            }
        }
        if self.control_mean < 1.0 && self.persons > 0 {
            return bad("control_mean must be at least 1".into());
        }
        if self.stale_fraction < 0.0 || self.cutoff < 1 || self.horizon < self.cutoff {
            return bad("need stale_fraction >= 0 and 1 <= cutoff <= horizon".into());
        }
        if !self.planted.iter().map(|p| &p.coefficient).chain([&self.attribute_effect]).all(|b| b.is_finite()) {
            return bad("effects must be finite".into());
        }
        let schema = default_sme_schema();
        for p in &self.planted {
            match FeatureSpec::parse(&p.feature, &schema) {
                Ok(spec) if spec.mp.root() == schema.object_type("enterprise").expect("default schema") => {}
                Ok(_) => return bad(format!("planted feature {} does not start at enterprises", p.feature)),
                Err(e) => return bad(format!("planted feature {}: {e}", p.feature)),
            }
        }
        if !(self.activity_tail > 0.0 && self.risky_hub_factor > 0.0) {
            return bad("activity_tail and risky_hub_factor must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFeature {
    pub feature: String,
    /// Log-odds per standard deviation.
    pub coefficient: f64,
}

impl PlantedFeature {
    pub fn new(feature: &str, coefficient: f64) -> Self {
        PlantedFeature {
            feature: feature.to_string(),
            coefficient,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: GenConfig,
    pub intercept: f64,
    pub attribute_coefficient: f64,
    /// Planted features with contagion-scaled coefficients.
    pub planted: Vec<PlantedFeature>,
    pub risky_persons: Vec<String>,
    pub risky_commodities: Vec<String>,
    pub negative_news: Vec<String>,
    pub default_rate: f64,
    pub current_edges: usize,
    pub stale_edges: usize,
}

const ATTRIBUTE_LOADING: f64 = 0.9;
const LABEL_SHIFT: f64 = 1.2;

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

/// Up to `k` distinct picks by weight, `exclude` never chosen.
fn pick_distinct(rng: &mut ChaCha8Rng, dist: &WeightedIndex<f64>, pool: usize, k: usize, exclude: Option<usize>) -> Vec<usize> {
    let k = k.min(pool - usize::from(exclude.is_some()));
    let mut out: Vec<usize> = Vec::with_capacity(k);
    let mut tries = 0;
    while out.len() < k && tries < 50 * (k + 1) {
        tries += 1;
        let i = dist.sample(rng);
        if Some(i) != exclude && !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

struct Pending {
    src: String,
    dst: String,
    rel: &'static str,
}

fn z_scores(values: &[Option<f64>]) -> Vec<f64> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        return vec![0.0; values.len()];
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let sd = (defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / defined.len() as f64).sqrt();
    values
        .iter()
        .map(|v| if sd > 0.0 { (v.unwrap_or(mean) - mean) / sd } else { 0.0 })
        .collect()
}

/// Generates a network and its ground truth. Identical configs give
/// identical outputs.
pub fn generate(config: &GenConfig) -> Result<(Hin, GroundTruth), SynthError> {
    config.validate()?;
    let c = config;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let pareto = Pareto::new(1.0, c.activity_tail).expect("valid pareto");
    let schema = Arc::new(default_sme_schema());

    let eid = |i: usize| format!("E{i:05}");
    let pid = |i: usize| format!("P{i:05}");
    let cid = |i: usize| format!("C{i:05}");
    let nid = |i: usize| format!("N{i:05}");

    let person_risky: Vec<bool> = (0..c.persons).map(|_| rng.random_bool(c.person_risk_rate)).collect();
    let person_w: Vec<f64> = person_risky
        .iter()
        .map(|&r| pareto.sample(&mut rng).min(1e3) * if r { c.risky_hub_factor } else { 1.0 })
        .collect();
    let commodity_risky: Vec<bool> = (0..c.commodities).map(|_| rng.random_bool(c.commodity_risk_rate)).collect();
    let commodity_w: Vec<f64> = (0..c.commodities).map(|_| pareto.sample(&mut rng).min(1e3)).collect();
    let news_negative: Vec<bool> = (0..c.news).map(|_| rng.random_bool(c.negative_news_rate)).collect();
    let news_w: Vec<f64> = (0..c.news).map(|_| pareto.sample(&mut rng).min(1e3)).collect();
    let latent: Vec<f64> = (0..c.enterprises).map(|_| normal.sample(&mut rng)).collect();

    let dist = |w: &[f64]| if w.is_empty() { None } else { Some(WeightedIndex::new(w).expect("positive weights")) };
    let person_d = dist(&person_w);
    let commodity_d = dist(&commodity_w);
    let news_d = dist(&news_w);
    let flat_e = WeightedIndex::new(vec![1.0; c.enterprises]).expect("enterprises");

    let mut current: Vec<Pending> = Vec::new();
    for e in 0..c.enterprises {
        if let Some(pd) = &person_d {
            let control_k = 1 + poisson(&mut rng, c.control_mean - 1.0);
            for (rel, k) in [
                ("control", control_k),
                ("shareholder", poisson(&mut rng, c.shareholder_mean)),
                ("manager", poisson(&mut rng, c.manager_mean)),
                ("employee", poisson(&mut rng, c.employee_mean)),
                ("boardmember", poisson(&mut rng, c.boardmember_mean)),
            ] {
                for p in pick_distinct(&mut rng, pd, c.persons, k, None) {
                    current.push(Pending { src: eid(e), dst: pid(p), rel });
                }
            }
        }
        if let Some(cd) = &commodity_d {
            let k = poisson(&mut rng, c.produce_mean);
            for m in pick_distinct(&mut rng, cd, c.commodities, k, None) {
                current.push(Pending { src: eid(e), dst: cid(m), rel: "produce" });
            }
        }
        if let Some(nd) = &news_d {
            let k = poisson(&mut rng, c.report_mean);
            for n in pick_distinct(&mut rng, nd, c.news, k, None) {
                current.push(Pending { src: eid(e), dst: nid(n), rel: "report" });
            }
        }
        if rng.random_bool(c.parent_prob) {
            for o in pick_distinct(&mut rng, &flat_e, c.enterprises, 1, Some(e)) {
                current.push(Pending { src: eid(e), dst: eid(o), rel: "parent" });
            }
        }
        let k = poisson(&mut rng, c.supply_mean);
        for o in pick_distinct(&mut rng, &flat_e, c.enterprises, k, Some(e)) {
            current.push(Pending { src: eid(e), dst: eid(o), rel: "supply" });
        }
    }
    if let Some(pd) = &person_d {
        for p in 0..c.persons {
            if c.persons > 1 && rng.random_bool(c.relate_prob) {
                for q in pick_distinct(&mut rng, pd, c.persons, 1, Some(p)) {
                    current.push(Pending { src: pid(p), dst: pid(q), rel: "relate" });
                }
            }
        }
    }
    let current_ts: Vec<i64> = current.iter().map(|_| rng.random_range(c.cutoff..=c.horizon)).collect();

    // Nodes with raw numeric attributes and true labels.
    let mut nodes = HinBuilder::new(schema.clone());
    for (e, z) in latent.iter().enumerate() {
        let n = nodes.add_node(&eid(e), "enterprise", None)?;
        for a in ["roe", "quick_ratio", "asset_liability", "sales_growth"] {
            let v = ATTRIBUTE_LOADING * z + normal.sample(&mut rng);
            nodes.set_attribute(n, a, &format!("{v:.6}"));
        }
        nodes.set_attribute(n, "headcount", &format!("{:.6}", normal.sample(&mut rng)));
    }
    let hidden = |rng: &mut ChaCha8Rng| rng.random_bool(c.hidden_label_fraction);
    for (p, &r) in person_risky.iter().enumerate() {
        let n = nodes.add_node(&pid(p), "person", None)?;
        let shift = if r { LABEL_SHIFT } else { 0.0 };
        nodes.set_attribute(n, "education", &format!("{:.6}", normal.sample(&mut rng) - shift));
        nodes.set_attribute(n, "credit_history", &format!("{:.6}", normal.sample(&mut rng) - shift));
        nodes.set_attribute(n, "age", &format!("{:.6}", normal.sample(&mut rng)));
        if !hidden(&mut rng) {
            nodes.set_label(n, Some(RiskLabel::observed(r)));
        }
    }
    for (m, &r) in commodity_risky.iter().enumerate() {
        let n = nodes.add_node(&cid(m), "commodity", None)?;
        let shift = if r { LABEL_SHIFT } else { 0.0 };
        nodes.set_attribute(n, "repair_rate", &format!("{:.6}", normal.sample(&mut rng) + shift));
        nodes.set_attribute(n, "return_rate", &format!("{:.6}", normal.sample(&mut rng) + shift));
        if !hidden(&mut rng) {
            nodes.set_label(n, Some(RiskLabel::observed(r)));
        }
    }
    for (i, &neg) in news_negative.iter().enumerate() {
        let n = nodes.add_node(&nid(i), "news", None)?;
        nodes.set_label(n, Some(RiskLabel::observed(neg)));
    }

    // Planted features on the current links with true risk.
    let mut cur = nodes.clone();
    for (i, (p, ts)) in current.iter().zip(&current_ts).enumerate() {
        cur.add_edge(&format!("L{i:06}"), &p.src, &p.dst, p.rel, Some(*ts))?;
    }
    let cur = cur.build();
    let mut truth_flags = vec![false; cur.node_count()];
    for (i, node) in cur.nodes().iter().enumerate() {
        truth_flags[i] = match node.id.as_bytes()[0] {
            b'P' => person_risky[node.id[1..].parse::<usize>().expect("generated id")],
            b'C' => commodity_risky[node.id[1..].parse::<usize>().expect("generated id")],
            b'N' => news_negative[node.id[1..].parse::<usize>().expect("generated id")],
            _ => false,
        };
    }
    let risk = RiskMap::from_vec(truth_flags);
    let engine = HeteSimEngine::new(&cur);
    let enterprises: Vec<NodeIdx> = (0..c.enterprises).map(|e| cur.node_idx(&eid(e)).expect("enterprise")).collect();
    let mut eta: Vec<f64> = latent.iter().map(|z| c.attribute_effect * c.attribute_signal * z).collect();
    let mut planted = Vec::new();
    for p in &c.planted {
        let spec = FeatureSpec::parse(&p.feature, cur.schema()).expect("validated");
        let vals: Vec<Option<f64>> = enterprises.iter().map(|&x| feature_value(&engine, x, &spec, &risk).ok()).collect();
        let coefficient = p.coefficient * c.contagion_strength;
        for (e, z) in z_scores(&vals).iter().enumerate() {
            eta[e] += coefficient * z;
        }
        planted.push(PlantedFeature::new(&p.feature, coefficient));
    }
    let intercept = (c.base_default_rate / (1.0 - c.base_default_rate)).ln();
    let defaults: Vec<bool> = eta
        .iter()
        .map(|&v| rng.random::<f64>() < crate::creditmodel::sigmoid(intercept + v))
        .collect();

    // Final network: true links plus stale noise, attributes discretized.
    let mut out = nodes;
    for (e, &y) in defaults.iter().enumerate() {
        let n = out.node_idx(&eid(e)).expect("enterprise");
        out.set_label(n, Some(RiskLabel::observed(y)));
    }
    for (i, (p, ts)) in current.iter().zip(&current_ts).enumerate() {
        out.add_edge(&format!("L{i:06}"), &p.src, &p.dst, p.rel, Some(*ts))?;
    }
    let stale = (current.len() as f64 * c.stale_fraction).round() as usize;
    for i in 0..stale {
        let template = &current[rng.random_range(0..current.len())];
        let src = eid(rng.random_range(0..c.enterprises));
        let dst = match template.dst.as_bytes()[0] {
            b'P' => pid(rng.random_range(0..c.persons)),
            b'C' => cid(rng.random_range(0..c.commodities)),
            b'N' => nid(rng.random_range(0..c.news)),
            _ => eid(rng.random_range(0..c.enterprises)),
        };
        let src = if template.rel == "relate" { pid(rng.random_range(0..c.persons)) } else { src };
        if src == dst {
            continue;
        }
        let ts = rng.random_range(0..c.cutoff);
        out.add_edge(&format!("S{i:06}"), &src, &dst, template.rel, Some(ts))?;
    }
    let hin = discretize_numeric_attributes(&out.build(), DEFAULT_QUANTILE_BINS);

    let ids = |flags: &[bool], f: &dyn Fn(usize) -> String| flags.iter().enumerate().filter(|(_, &r)| r).map(|(i, _)| f(i)).collect::<Vec<_>>();
    let truth = GroundTruth {
        config: c.clone(),
        intercept,
        attribute_coefficient: c.attribute_effect * c.attribute_signal,
        planted,
        risky_persons: ids(&person_risky, &pid),
        risky_commodities: ids(&commodity_risky, &cid),
        negative_news: ids(&news_negative, &nid),
        default_rate: defaults.iter().filter(|&&y| y).count() as f64 / defaults.len() as f64,
        current_edges: current.len(),
        stale_edges: hin.edge_count() - current.len(),
    };
    Ok((hin, truth))
}

/// Writes the four CSV tables plus `ground_truth.json`.
pub fn write_synth(hin: &Hin, truth: &GroundTruth, dir: &Path) -> Result<(), SynthError> {
    write_hin(hin, dir)?;
    let text = serde_json::to_string_pretty(truth).map_err(|e| SynthError::Io(e.to_string()))?;
    std::fs::write(dir.join("ground_truth.json"), text + "\n").map_err(|e| SynthError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> GenConfig {
        GenConfig {
            seed,
            ..GenConfig::with_total_nodes(900)
        }
    }

    #[test]
    fn deterministic_and_valid() {
        let (a, ta) = generate(&small(4)).unwrap();
        let (b, tb) = generate(&small(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        a.validate().unwrap();
        assert_ne!(a, generate(&small(5)).unwrap().0);
    }

    #[test]
    fn stale_links_precede_cutoff() {
        let (h, t) = generate(&small(1)).unwrap();
        let c = t.config.cutoff;
        let stale = h.edges().iter().filter(|e| e.timestamp.is_some_and(|ts| ts < c)).count();
        assert_eq!(stale, t.stale_edges);
        assert!(t.stale_edges > 0);
        assert_eq!(h.as_of(c, t.config.horizon).unwrap().edge_count(), t.current_edges);
    }

    #[test]
    fn zero_contagion_zeroes_planted_coefficients() {
        let cfg = GenConfig {
            contagion_strength: 0.0,
            ..small(2)
        };
        let (_, t) = generate(&cfg).unwrap();
        assert!(t.planted.iter().all(|p| p.coefficient == 0.0));
    }

    #[test]
    fn infeasible_configs() {
        let cfg = GenConfig {
            persons: 1,
            shareholder_mean: 3.0,
            ..GenConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(SynthError::InfeasibleConfig(_))));
        let cfg = GenConfig {
            contagion_strength: 1.5,
            ..GenConfig::default()
        };
        assert!(matches!(generate(&cfg), Err(SynthError::InfeasibleConfig(_))));
    }

    #[test]
    fn hidden_labels_exist() {
        let (h, _) = generate(&small(3)).unwrap();
        let persons = h.schema().object_type("person").unwrap();
        let unlabeled = h.nodes().iter().filter(|n| n.otype == persons && n.label.is_none()).count();
        assert!(unlabeled > 0);
        let attrs = &h.nodes()[0].attributes;
        assert!(attrs.values().all(|v| v.starts_with('q')), "{attrs:?}");
    }
}
