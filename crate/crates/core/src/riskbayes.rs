//! Naive Bayes risk inference over categorical node attributes.
//!
//! For an object with attribute levels `x(1..n)` the posterior is
//!
//! ```text
//! P(y=1|x) = prod P(x(i)|y=1) P(y=1) / (prod P(x(i)|y=1) P(y=1) + prod P(x(i)|y=0) P(y=0))
//! ```
//!
//! evaluated in log space with attributes visited in name order. Likelihoods
//! are Laplace smoothed, so every stored probability lies strictly in (0,1).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hin::{Hin, Node, NodeIdx, ObjectTypeId, RiskLabel, NEWS};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_IMPUTE_THRESHOLD: f64 = 0.75;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BayesError {
    #[error("no labeled `{0}` nodes")]
    NoLabeledNodes(String),
    #[error("all labeled `{0}` nodes share one class")]
    SingleClass(String),
    #[error("attribute `{0}` is not in the model registry")]
    UnknownAttribute(String),
    #[error("no model for object type `{0}`")]
    MissingModel(String),
    #[error("smoothing alpha must be positive, got {0}")]
    InvalidAlpha(f64),
    #[error("imputation threshold must lie in (0.5, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("node type does not match the model")]
    WrongType,
    #[error("model document: {0}")]
    Json(String),
}

/// Per-class smoothed level likelihoods of one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeTable {
    /// `levels[i]` is scored by `risky[i]` and `safe[i]`.
    pub levels: Vec<String>,
    pub risky: Vec<f64>,
    pub safe: Vec<f64>,
    /// Score of a level never seen during fitting, per class.
    pub unseen_risky: f64,
    pub unseen_safe: f64,
}

impl AttributeTable {
    fn likelihoods(&self, level: &str) -> (f64, f64) {
        match self.levels.binary_search_by(|l| l.as_str().cmp(level)) {
            Ok(i) => (self.risky[i], self.safe[i]),
            Err(_) => (self.unseen_risky, self.unseen_safe),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub object_type: String,
    pub alpha: f64,
    pub prior_risky: f64,
    pub prior_safe: f64,
    pub attributes: BTreeMap<String, AttributeTable>,
}

/// Where a node's risk indicator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskSource {
    ObservedLabel,
    Inferred,
    NewsPolarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub node: String,
    pub posterior: Option<f64>,
    pub gamma: bool,
    pub source: RiskSource,
}

/// Fits priors and Laplace-smoothed likelihoods from the observed labels of
/// `otype`. Imputed labels are ignored.
pub fn fit_nb(hin: &Hin, otype: ObjectTypeId, alpha: f64) -> Result<NaiveBayesModel, BayesError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BayesError::InvalidAlpha(alpha));
    }
    let type_name = hin.schema().object(otype).name.clone();
    let of_type: Vec<&Node> = hin.nodes().iter().filter(|n| n.otype == otype).collect();

    let mut registry: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for node in &of_type {
        for (k, v) in &node.attributes {
            registry.entry(k).or_default().insert(v);
        }
    }

    let labeled: Vec<(&Node, bool)> = of_type
        .iter()
        .filter_map(|n| n.observed_label().map(|y| (*n, y)))
        .collect();
    if labeled.is_empty() {
        return Err(BayesError::NoLabeledNodes(type_name));
    }
    let n_risky = labeled.iter().filter(|(_, y)| *y).count();
    let n_safe = labeled.len() - n_risky;
    if n_risky == 0 || n_safe == 0 {
        return Err(BayesError::SingleClass(type_name));
    }

    let mut attributes = BTreeMap::new();
    for (name, levels) in registry {
        let levels: Vec<String> = levels.into_iter().map(str::to_string).collect();
        let width = levels.len() as f64;
        let mut count_risky = vec![0usize; levels.len()];
        let mut count_safe = vec![0usize; levels.len()];
        let (mut seen_risky, mut seen_safe) = (0usize, 0usize);
        for (node, y) in &labeled {
            if let Some(v) = node.attributes.get(name) {
                let i = levels.binary_search(v).expect("level registered above");
                if *y {
                    count_risky[i] += 1;
                    seen_risky += 1;
                } else {
                    count_safe[i] += 1;
                    seen_safe += 1;
                }
            }
        }
        let smooth = |c: usize, total: usize| (c as f64 + alpha) / (total as f64 + alpha * width);
        attributes.insert(
            name.to_string(),
            AttributeTable {
                risky: count_risky.iter().map(|&c| smooth(c, seen_risky)).collect(),
                safe: count_safe.iter().map(|&c| smooth(c, seen_safe)).collect(),
                unseen_risky: alpha / (seen_risky as f64 + alpha * width),
                unseen_safe: alpha / (seen_safe as f64 + alpha * width),
                levels,
            },
        );
    }

    let total = labeled.len() as f64;
    Ok(NaiveBayesModel {
        object_type: type_name,
        alpha,
        prior_risky: n_risky as f64 / total,
        prior_safe: n_safe as f64 / total,
        attributes,
    })
}

impl NaiveBayesModel {
    /// Log joint scores `(log P(x, y=1), log P(x, y=0))`.
    pub fn log_joint(&self, attributes: &BTreeMap<String, String>) -> Result<(f64, f64), BayesError> {
        let mut risky = self.prior_risky.ln();
        let mut safe = self.prior_safe.ln();
        for (name, level) in attributes {
            let table = self
                .attributes
                .get(name)
                .ok_or_else(|| BayesError::UnknownAttribute(name.clone()))?;
            let (pr, ps) = table.likelihoods(level);
            risky += pr.ln();
            safe += ps.ln();
        }
        Ok((risky, safe))
    }

    /// `P(y=1|x)`, strictly inside (0,1) up to floating-point saturation.
    pub fn posterior(&self, node: &Node) -> Result<f64, BayesError> {
        self.posterior_of(&node.attributes)
    }

    pub fn posterior_of(&self, attributes: &BTreeMap<String, String>) -> Result<f64, BayesError> {
        let (risky, safe) = self.log_joint(attributes)?;
        Ok(1.0 / (1.0 + (safe - risky).exp()))
    }

    /// `P(y=0|x)` computed from its own ratio, not as `1 - posterior`.
    pub fn posterior_complement(&self, node: &Node) -> Result<f64, BayesError> {
        let (risky, safe) = self.log_joint(&node.attributes)?;
        Ok(1.0 / (1.0 + (risky - safe).exp()))
    }

    /// Risk indicator: posterior strictly above one half.
    pub fn gamma(&self, node: &Node) -> Result<bool, BayesError> {
        Ok(self.posterior(node)? > 0.5)
    }

    /// JSON document with every probability written to 17 significant digits.
    pub fn to_json(&self) -> Result<String, BayesError> {
        to_json_17(self).map_err(|e| BayesError::Json(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, BayesError> {
        serde_json::from_str(text).map_err(|e| BayesError::Json(e.to_string()))
    }
}

/// Pretty printer that renders floats as `d.dddddddddddddddde±x`.
#[derive(Default)]
struct Sci17Formatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for Sci17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes any value with the 17-digit float formatter.
pub(crate) fn to_json_17<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17Formatter::default());
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

fn is_news(hin: &Hin, node: &Node) -> bool {
    hin.schema().object(node.otype).name == NEWS
}

/// Risk indicator of one node: news carries its polarity label, labeled
/// nodes keep their label, anything else is scored by its type's model.
pub fn assess(hin: &Hin, models: &BTreeMap<ObjectTypeId, NaiveBayesModel>, node: NodeIdx) -> Result<RiskAssessment, BayesError> {
    let n = hin.node(node);
    if is_news(hin, n) {
        return Ok(RiskAssessment {
            node: n.id.clone(),
            posterior: None,
            gamma: n.label.is_some_and(|l| l.risky),
            source: RiskSource::NewsPolarity,
        });
    }
    if let Some(label) = n.label {
        let posterior = models.get(&n.otype).and_then(|m| m.posterior(n).ok());
        return Ok(RiskAssessment {
            node: n.id.clone(),
            posterior,
            gamma: label.risky,
            source: if label.imputed { RiskSource::Inferred } else { RiskSource::ObservedLabel },
        });
    }
    let model = models
        .get(&n.otype)
        .ok_or_else(|| BayesError::MissingModel(hin.schema().object(n.otype).name.clone()))?;
    let posterior = model.posterior(n)?;
    Ok(RiskAssessment {
        node: n.id.clone(),
        posterior: Some(posterior),
        gamma: posterior > 0.5,
        source: RiskSource::Inferred,
    })
}

/// The imputation rule: strictly above the threshold.
pub fn imputes_risky(posterior: f64, threshold: f64) -> bool {
    posterior > threshold
}

/// Labels every unlabeled non-news node as risky iff its posterior exceeds
/// `threshold`. Existing labels are kept.
pub fn impute_labels(
    hin: &Hin,
    models: &BTreeMap<ObjectTypeId, NaiveBayesModel>,
    threshold: f64,
) -> Result<Hin, BayesError> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(BayesError::InvalidThreshold(threshold));
    }
    let mut labels = Vec::with_capacity(hin.node_count());
    for node in hin.nodes() {
        if node.label.is_some() || is_news(hin, node) {
            labels.push(node.label);
            continue;
        }
        let model = models
            .get(&node.otype)
            .ok_or_else(|| BayesError::MissingModel(hin.schema().object(node.otype).name.clone()))?;
        let risky = imputes_risky(model.posterior(node)?, threshold);
        labels.push(Some(RiskLabel { risky, imputed: true }));
    }
    Ok(hin.with_labels(&labels))
}

/// Fits one model per non-news object type that has both classes observed.
/// Types that cannot be fitted are skipped and reported.
pub fn fit_all(hin: &Hin, alpha: f64) -> (BTreeMap<ObjectTypeId, NaiveBayesModel>, Vec<(String, BayesError)>) {
    let mut models = BTreeMap::new();
    let mut skipped = Vec::new();
    for (i, t) in hin.schema().object_types().iter().enumerate() {
        if t.name == NEWS {
            continue;
        }
        let id = ObjectTypeId(i as u16);
        match fit_nb(hin, id, alpha) {
            Ok(m) => {
                models.insert(id, m);
            }
            Err(e) => skipped.push((t.name.clone(), e)),
        }
    }
    (models, skipped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{default_sme_schema, HinBuilder, ENTERPRISE, PERSON};
    use std::sync::Arc;

    fn build(rows: &[(&str, &str, Option<bool>)]) -> Hin {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        for (i, (t, level, label)) in rows.iter().enumerate() {
            let n = b.add_node(&format!("n{i}"), t, None).unwrap();
            b.set_attribute(n, "quick_ratio", level);
            b.set_label(n, label.map(RiskLabel::observed));
        }
        b.build()
    }

    fn etype(h: &Hin) -> ObjectTypeId {
        h.schema().object_type(ENTERPRISE).unwrap()
    }

    #[test]
    fn balanced_priors() {
        let h = build(&[
            ("enterprise", "low", Some(true)),
            ("enterprise", "low", Some(true)),
            ("enterprise", "high", Some(false)),
            ("enterprise", "high", Some(false)),
        ]);
        let m = fit_nb(&h, etype(&h), 1.0).unwrap();
        assert_eq!((m.prior_risky, m.prior_safe), (0.5, 0.5));
    }

    #[test]
    fn laplace_likelihood_matches_hand_count() {
        // 3 of 4 risky nodes have `low`; two levels; alpha 1 -> (3+1)/(4+2).
        let h = build(&[
            ("enterprise", "low", Some(true)),
            ("enterprise", "low", Some(true)),
            ("enterprise", "low", Some(true)),
            ("enterprise", "high", Some(true)),
            ("enterprise", "high", Some(false)),
        ]);
        let m = fit_nb(&h, etype(&h), 1.0).unwrap();
        let t = &m.attributes["quick_ratio"];
        assert_eq!(t.levels, ["high", "low"]);
        assert!((t.risky[1] - 2.0 / 3.0).abs() < 1e-15);
        for probs in [&t.risky, &t.safe] {
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn degenerate_label_sets() {
        let h = build(&[("enterprise", "low", Some(true)), ("enterprise", "high", Some(true))]);
        assert!(matches!(fit_nb(&h, etype(&h), 1.0), Err(BayesError::SingleClass(_))));
        let h = build(&[("enterprise", "low", None)]);
        assert!(matches!(fit_nb(&h, etype(&h), 1.0), Err(BayesError::NoLabeledNodes(_))));
        let h = build(&[("enterprise", "low", Some(true)), ("enterprise", "high", Some(false))]);
        assert!(matches!(fit_nb(&h, etype(&h), 0.0), Err(BayesError::InvalidAlpha(_))));
    }

    fn single_attribute_model(p1: f64, p0: f64) -> NaiveBayesModel {
        let mut attributes = BTreeMap::new();
        attributes.insert(
            "a".to_string(),
            AttributeTable {
                levels: vec!["hi".into(), "lo".into()],
                risky: vec![p1, 1.0 - p1],
                safe: vec![p0, 1.0 - p0],
                unseen_risky: 0.1,
                unseen_safe: 0.1,
            },
        );
        NaiveBayesModel {
            object_type: "enterprise".into(),
            alpha: 1.0,
            prior_risky: 0.5,
            prior_safe: 0.5,
            attributes,
        }
    }

    fn node_with(level: &str) -> Node {
        let h = build(&[("enterprise", level, None)]);
        let mut n = h.nodes()[0].clone();
        n.attributes = BTreeMap::from([("a".to_string(), level.to_string())]);
        n
    }

    #[test]
    fn one_line_bayes() {
        let m = single_attribute_model(0.8, 0.2);
        let p = m.posterior(&node_with("hi")).unwrap();
        assert!((p - 0.8).abs() < 1e-15);
        assert!(m.gamma(&node_with("hi")).unwrap());
    }

    #[test]
    fn symmetric_model_is_one_half_and_not_risky() {
        let m = single_attribute_model(0.5, 0.5);
        let n = node_with("hi");
        assert_eq!(m.posterior(&n).unwrap(), 0.5);
        assert!(!m.gamma(&n).unwrap());
    }

    #[test]
    fn unseen_level_uses_smoothed_floor() {
        let m = single_attribute_model(0.8, 0.2);
        assert_eq!(m.posterior(&node_with("mid")).unwrap(), 0.5);
        let mut n = node_with("hi");
        n.attributes.insert("bogus".into(), "x".into());
        assert!(matches!(m.posterior(&n), Err(BayesError::UnknownAttribute(_))));
    }

    #[test]
    fn news_gamma_follows_polarity() {
        let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
        let n = b.add_node("n1", "news", None).unwrap();
        b.set_label(n, Some(RiskLabel::observed(true)));
        let h = b.build();
        let a = assess(&h, &BTreeMap::new(), n).unwrap();
        assert!(a.gamma);
        assert_eq!(a.source, RiskSource::NewsPolarity);
    }

    #[test]
    fn imputation_threshold_is_strict_and_observed_labels_win() {
        assert!(!imputes_risky(0.75, 0.75));
        assert!(imputes_risky(0.76, 0.75));
        let h = build(&[
            ("enterprise", "low", Some(true)),
            ("enterprise", "high", Some(false)),
            ("enterprise", "low", None),
            ("enterprise", "low", Some(false)),
        ]);
        let mut m = fit_nb(&h, etype(&h), 1.0).unwrap();
        // posterior(low) = 0.99 under these tables.
        m.prior_risky = 0.5;
        m.prior_safe = 0.5;
        let t = m.attributes.get_mut("quick_ratio").unwrap();
        t.risky = vec![0.01, 0.99];
        t.safe = vec![0.99, 0.01];
        let p = m.posterior(&h.nodes()[3]).unwrap();
        assert!((p - 0.99).abs() < 1e-12);
        let models = BTreeMap::from([(etype(&h), m)]);
        let out = impute_labels(&h, &models, 0.75).unwrap();
        assert_eq!(out.nodes()[2].label, Some(RiskLabel { risky: true, imputed: true }));
        assert_eq!(out.nodes()[3].label, Some(RiskLabel::observed(false)));
        let out = impute_labels(&h, &models, 1.0).unwrap();
        assert_eq!(out.nodes()[2].label, Some(RiskLabel { risky: false, imputed: true }));
        assert!(matches!(impute_labels(&h, &models, 0.5), Err(BayesError::InvalidThreshold(_))));
    }

    #[test]
    fn missing_model_is_reported() {
        let h = build(&[("person", "low", None)]);
        let err = impute_labels(&h, &BTreeMap::new(), 0.75).unwrap_err();
        assert_eq!(err, BayesError::MissingModel(PERSON.into()));
    }

    #[test]
    fn json_round_trip_is_exact_and_seventeen_digits() {
        let h = build(&[
            ("enterprise", "low", Some(true)),
            ("enterprise", "low", Some(true)),
            ("enterprise", "mid", Some(false)),
            ("enterprise", "high", Some(false)),
            ("enterprise", "high", Some(true)),
        ]);
        let m = fit_nb(&h, etype(&h), 0.7).unwrap();
        let text = m.to_json().unwrap();
        assert!(text.contains("e-1"), "{text}");
        assert!(text.contains("\"prior_risky\": 5.9999999999999998e-1"), "{text}");
        assert_eq!(NaiveBayesModel::from_json(&text).unwrap(), m);
    }
}
