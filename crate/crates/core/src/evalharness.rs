//! ROC/AUC, cross-validated method comparison and the as-of sweep.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::creditmodel::{fit_logistic, select_top_k, univariate_rank, wald_rank, CreditError, FeatureRanking};
use crate::hin::{Hin, HinError, NodeIdx, ObjectTypeId, RiskLabel, ENTERPRISE};
use crate::metapath::{enumerate_metapaths_with, EnumerateOptions, MetaPath};
use crate::mpfeatures::{build_feature_matrix_with, FeatureKind, FeatureMatrix, FeatureSpec, HeteSimEngine, RiskMap};
use crate::riskbayes::{fit_all, impute_labels, imputes_risky, BayesError, NaiveBayesModel, DEFAULT_ALPHA, DEFAULT_IMPUTE_THRESHOLD};

pub const SME_CV: &str = "SME CV";
pub const SME_HPF: &str = "SME HPF";

/// Display name of the method built from one feature family.
pub fn method_name(kind: FeatureKind) -> &'static str {
    match kind {
        FeatureKind::Naive => "Naive MP",
        FeatureKind::CountSim => "CountSim MP",
        FeatureKind::HeteSim => "HeteSim MP",
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no labeled enterprises in window {start}..{end}")]
    EmptyWindow { start: i64, end: i64 },
    #[error("too few samples per class for {folds} folds")]
    TooFewSamples { folds: usize },
    #[error(transparent)]
    Hin(#[from] HinError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Credit(#[from] CreditError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (f, t) in &self.points {
            out.push_str(&format!("{f},{t}\n"));
        }
        out
    }
}

/// ROC by a descending-score sweep. Tied scores move as one step, so the
/// trapezoid credits ties with one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc2 = 0u128;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // Twice the trapezoid area in units of 1/(pos*neg).
        auc2 += ((fp - fp0) * (tp + tp0)) as u128;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: auc2 as f64 / (2.0 * pos as f64 * neg as f64),
    })
}

/// Fraction of correct calls at a 0.5 threshold.
pub fn accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    let hits = scores.iter().zip(labels).filter(|(&s, &y)| (s > 0.5) == y).count();
    hits as f64 / labels.len().max(1) as f64
}

/// Fold id per sample. Each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(EvalError::TooFewSamples { folds });
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[i] = k % folds;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Ranking {
    #[default]
    Joint,
    Univariate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    #[default]
    CrossValidation,
    InSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    #[default]
    Auc,
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub max_relations: usize,
    pub candidate_cap: usize,
    pub allow_backtracking: bool,
    pub feature_kinds: Vec<FeatureKind>,
    pub alpha: f64,
    pub threshold: f64,
    pub top_k: usize,
    pub folds: usize,
    pub seed: u64,
    pub ranking: Ranking,
    pub protocol: Protocol,
    pub metric: Metric,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            max_relations: 5,
            candidate_cap: 40,
            allow_backtracking: false,
            feature_kinds: FeatureKind::ALL.to_vec(),
            alpha: DEFAULT_ALPHA,
            threshold: DEFAULT_IMPUTE_THRESHOLD,
            top_k: 10,
            folds: 5,
            seed: 0,
            ranking: Ranking::Joint,
            protocol: Protocol::CrossValidation,
            metric: Metric::Auc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub average: Option<f64>,
    pub fold_scores: Vec<f64>,
    /// Top-k feature names chosen in each fold.
    pub selected: Vec<Vec<String>>,
    /// Out-of-fold ROC over all samples.
    pub roc: Option<RocCurve>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SweepPoint {
    pub start: i64,
    pub end: i64,
    pub metric: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ComparisonReport {
    pub metric: Metric,
    pub methods: BTreeMap<String, MethodResult>,
    pub sweep: Vec<SweepPoint>,
}

impl ComparisonReport {
    pub fn average(&self, method: &str) -> Option<f64> {
        self.methods.get(method).and_then(|m| m.average)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn write_roc_csvs(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        let mut out = Vec::new();
        for (name, r) in &self.methods {
            if let Some(roc) = &r.roc {
                let file = dir.join(format!("roc_{}.csv", name.to_ascii_lowercase().replace(' ', "_")));
                std::fs::write(&file, roc.to_csv())?;
                out.push(file);
            }
        }
        Ok(out)
    }

    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("window_start,window_end,metric\n");
        for p in &self.sweep {
            let m = p.metric.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", p.start, p.end, m));
        }
        out
    }
}

/// Ranks columns by Wald p-value. Joint ranking falls back to univariate
/// fits when the joint model separates or is singular.
pub fn rank_features(train: &FeatureMatrix, y: &[bool], mode: Ranking) -> Result<FeatureRanking, CreditError> {
    match mode {
        Ranking::Univariate => univariate_rank(train, y),
        Ranking::Joint => match fit_logistic(train, y) {
            Ok(m) => Ok(wald_rank(&m)),
            Err(e @ (CreditError::SeparationDetected | CreditError::SingularInformation)) => {
                log::info!("joint ranking failed ({e}); ranking univariately");
                univariate_rank(train, y)
            }
            Err(e) => Err(e),
        },
    }
}

struct FoldOutcome {
    score: f64,
    selected: Vec<String>,
    test_rows: Vec<usize>,
    predictions: Vec<f64>,
}

fn run_fold(m: &FeatureMatrix, y: &[bool], train: &[usize], test: &[usize], cfg: &EvalConfig) -> Result<FoldOutcome, EvalError> {
    let train_m = m.select_rows(train);
    let fills = train_m.column_means();
    let (train_m, _) = train_m.filled(&fills);
    let (test_m, _) = m.select_rows(test).filled(&fills);
    let ytr: Vec<bool> = train.iter().map(|&i| y[i]).collect();
    let yte: Vec<bool> = test.iter().map(|&i| y[i]).collect();

    let ranking = rank_features(&train_m, &ytr, cfg.ranking)?;
    let selected = select_top_k(&ranking, cfg.top_k.max(1));
    let cols: Vec<usize> = selected.iter().map(|n| train_m.column_index(n).expect("ranked column")).collect();
    let model = fit_logistic(&train_m.select_columns(&cols), &ytr)?;
    let test_sel = test_m.select_columns(&cols);
    let predictions: Vec<f64> = (0..test_sel.rows()).map(|i| model.predict(test_sel.row(i))).collect();
    let score = match cfg.metric {
        Metric::Auc => roc_auc(&predictions, &yte)?.auc,
        Metric::Accuracy => accuracy(&predictions, &yte),
    };
    Ok(FoldOutcome {
        score,
        selected,
        test_rows: test.to_vec(),
        predictions,
    })
}

fn evaluate_method(m: &FeatureMatrix, y: &[bool], folds: &[usize], cfg: &EvalConfig) -> MethodResult {
    let splits: Vec<(Vec<usize>, Vec<usize>)> = match cfg.protocol {
        Protocol::InSample => vec![((0..y.len()).collect(), (0..y.len()).collect())],
        Protocol::CrossValidation => (0..cfg.folds)
            .map(|f| {
                let (test, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] == f);
                (train, test)
            })
            .collect(),
    };
    let outcomes: Result<Vec<FoldOutcome>, EvalError> = splits
        .par_iter()
        .map(|(train, test)| run_fold(m, y, train, test, cfg))
        .collect();
    match outcomes {
        Err(e) => MethodResult {
            average: None,
            fold_scores: Vec::new(),
            selected: Vec::new(),
            roc: None,
            error: Some(e.to_string()),
        },
        Ok(outcomes) => {
            let mut pooled = vec![0.0; y.len()];
            for o in &outcomes {
                for (&i, &p) in o.test_rows.iter().zip(&o.predictions) {
                    pooled[i] = p;
                }
            }
            let fold_scores: Vec<f64> = outcomes.iter().map(|o| o.score).collect();
            MethodResult {
                average: Some(fold_scores.iter().sum::<f64>() / fold_scores.len() as f64),
                fold_scores,
                selected: outcomes.into_iter().map(|o| o.selected).collect(),
                roc: roc_auc(&pooled, y).ok(),
                error: None,
            }
        }
    }
}

/// Cross-validated top-k comparison. Ranking, imputation means and the
/// final fit all use training rows only. A failing method is reported and
/// does not affect the others.
pub fn compare_methods(methods: &BTreeMap<String, FeatureMatrix>, labels: &[bool], cfg: &EvalConfig) -> Result<ComparisonReport, EvalError> {
    if !labels.iter().any(|&y| y) || labels.iter().all(|&y| y) {
        return Err(EvalError::DegenerateLabels);
    }
    let folds = match cfg.protocol {
        Protocol::CrossValidation => stratified_folds(labels, cfg.folds, cfg.seed)?,
        Protocol::InSample => vec![0; labels.len()],
    };
    let results: Vec<(String, MethodResult)> = methods
        .par_iter()
        .map(|(name, m)| {
            assert_eq!(m.rows(), labels.len(), "method `{name}` row count");
            (name.clone(), evaluate_method(m, labels, &folds, cfg))
        })
        .collect();
    Ok(ComparisonReport {
        metric: cfg.metric,
        methods: results.into_iter().collect(),
        sweep: Vec::new(),
    })
}

pub struct RiskStage {
    pub models: BTreeMap<ObjectTypeId, NaiveBayesModel>,
    pub skipped: Vec<(String, BayesError)>,
    pub imputed: Hin,
    pub risk: RiskMap,
}

/// Fits one Bayes model per type and imputes unlabeled nodes. Unlabeled
/// nodes of a type without a model stay unlabeled and count as not risky.
pub fn infer_risk(hin: &Hin, alpha: f64, threshold: f64) -> Result<RiskStage, EvalError> {
    let (models, skipped) = fit_all(hin, alpha);
    for (t, e) in &skipped {
        log::warn!("no risk model for `{t}`: {e}");
    }
    let imputed = if skipped.is_empty() {
        impute_labels(hin, &models, threshold)?
    } else {
        let mut labels = Vec::with_capacity(hin.node_count());
        for node in hin.nodes() {
            labels.push(match (node.label, models.get(&node.otype)) {
                (None, Some(m)) => Some(RiskLabel {
                    risky: imputes_risky(m.posterior(node)?, threshold),
                    imputed: true,
                }),
                (l, _) => l,
            });
        }
        hin.with_labels(&labels)
    };
    let risk = RiskMap::from_labels(&imputed);
    Ok(RiskStage {
        models,
        skipped,
        imputed,
        risk,
    })
}

/// True when at least one node of the root type reaches the terminal type.
pub fn has_instances(hin: &Hin, mp: &MetaPath) -> bool {
    let mut frontier = vec![false; hin.node_count()];
    let mut any = false;
    for n in hin.nodes_of_type(mp.root()) {
        frontier[n.index()] = true;
        any = true;
    }
    for &r in mp.relations() {
        if !any {
            return false;
        }
        let mut next = vec![false; hin.node_count()];
        any = false;
        for (i, on) in frontier.iter().enumerate() {
            if *on {
                for t in hin.traversals(NodeIdx(i as u32), r) {
                    next[t.other.index()] = true;
                    any = true;
                }
            }
        }
        frontier = next;
    }
    any
}

pub fn enterprise_type(hin: &Hin) -> ObjectTypeId {
    hin.schema().object_type(ENTERPRISE).expect("schema has enterprises")
}

/// Enterprise-rooted candidate paths that occur in the network, shortest
/// first, capped at `candidate_cap`.
pub fn candidate_paths(hin: &Hin, cfg: &EvalConfig) -> Vec<MetaPath> {
    let opts = EnumerateOptions {
        allow_backtracking: cfg.allow_backtracking,
        limit: Some(cfg.candidate_cap),
    };
    enumerate_metapaths_with(hin.schema(), enterprise_type(hin), cfg.max_relations, opts, |mp| has_instances(hin, mp))
}

/// Enterprises with an observed default label, in node order.
pub fn labeled_enterprises(hin: &Hin) -> (Vec<NodeIdx>, Vec<bool>) {
    hin.nodes_of_type(enterprise_type(hin))
        .into_iter()
        .filter_map(|n| hin.node(n).observed_label().map(|y| (n, y)))
        .unzip()
}

/// Numeric reading of a discretized or raw attribute value.
fn ordinal(value: &str) -> Option<f64> {
    value
        .strip_prefix('q')
        .and_then(|k| k.parse::<f64>().ok())
        .or_else(|| value.parse::<f64>().ok())
}

/// The enterprises' own attributes as ordinal columns.
pub fn attribute_matrix(hin: &Hin, rows: &[NodeIdx]) -> FeatureMatrix {
    let mut names: Vec<String> = rows
        .iter()
        .flat_map(|&n| hin.node(n).attributes.keys().cloned())
        .collect();
    names.sort();
    names.dedup();
    let columns = names
        .iter()
        .map(|a| rows.iter().map(|&n| hin.node(n).attributes.get(a).and_then(|v| ordinal(v))).collect())
        .collect();
    FeatureMatrix::from_columns(
        rows.iter().map(|&n| hin.node(n).id.clone()).collect(),
        names.iter().map(|a| format!("attr:{a}")).collect(),
        vec![None; names.len()],
        columns,
    )
}

/// Attribute baseline, homogeneous-path baseline and one matrix per
/// enabled feature family.
pub fn method_matrices(hin: &Hin, risk: &RiskMap, candidates: &[MetaPath], rows: &[NodeIdx], kinds: &[FeatureKind]) -> BTreeMap<String, FeatureMatrix> {
    let schema = hin.schema();
    let e = enterprise_type(hin);
    let engine = HeteSimEngine::new(hin);
    let mut out = BTreeMap::new();
    out.insert(SME_CV.to_string(), attribute_matrix(hin, rows));

    let homogeneous: Vec<FeatureSpec> = schema
        .relations_from(e)
        .iter()
        .filter(|&&r| schema.relation(r).target == e)
        .map(|&r| {
            let mp = MetaPath::from_relations(schema, vec![r]).expect("single relation");
            FeatureSpec::new(schema, mp, FeatureKind::Naive)
        })
        .collect();
    out.insert(SME_HPF.to_string(), build_feature_matrix_with(&engine, rows, &homogeneous, risk));

    let specs: Vec<FeatureSpec> = kinds
        .iter()
        .flat_map(|&k| candidates.iter().map(move |mp| (k, mp)))
        .map(|(k, mp)| FeatureSpec::new(schema, mp.clone(), k))
        .collect();
    let all = build_feature_matrix_with(&engine, rows, &specs, risk);
    for &k in kinds {
        let cols: Vec<usize> = (0..all.cols())
            .filter(|&j| all.specs[j].as_ref().is_some_and(|s| s.kind == k))
            .collect();
        out.insert(method_name(k).to_string(), all.select_columns(&cols));
    }
    out
}

pub struct PipelineOutcome {
    pub candidates: Vec<MetaPath>,
    pub rows: Vec<NodeIdx>,
    pub labels: Vec<bool>,
    pub methods: BTreeMap<String, FeatureMatrix>,
    pub report: ComparisonReport,
}

/// Risk inference, candidate enumeration, feature matrices and comparison.
pub fn run_pipeline(hin: &Hin, cfg: &EvalConfig) -> Result<PipelineOutcome, EvalError> {
    let stage = infer_risk(hin, cfg.alpha, cfg.threshold)?;
    let candidates = candidate_paths(&stage.imputed, cfg);
    let (rows, labels) = labeled_enterprises(hin);
    let methods = method_matrices(&stage.imputed, &stage.risk, &candidates, &rows, &cfg.feature_kinds);
    let report = compare_methods(&methods, &labels, cfg)?;
    Ok(PipelineOutcome {
        candidates,
        rows,
        labels,
        methods,
        report,
    })
}

/// Mean score over the enabled meta-path families of one report.
pub fn mp_average(report: &ComparisonReport, kinds: &[FeatureKind]) -> Option<f64> {
    let vals: Vec<f64> = kinds.iter().filter_map(|&k| report.average(method_name(k))).collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Runs the full pipeline on each as-of window and reports the mean score
/// of the meta-path families.
pub fn timestamp_sweep(hin: &Hin, windows: &[(i64, i64)], cfg: &EvalConfig) -> Result<Vec<SweepPoint>, EvalError> {
    let mut out = Vec::with_capacity(windows.len());
    for &(start, end) in windows {
        let filtered = hin.as_of(start, end)?;
        if labeled_enterprises(&filtered).0.is_empty() {
            return Err(EvalError::EmptyWindow { start, end });
        }
        let point = match run_pipeline(&filtered, cfg) {
            Ok(o) => SweepPoint {
                start,
                end,
                metric: mp_average(&o.report, &cfg.feature_kinds),
                error: None,
            },
            Err(e) => SweepPoint {
                start,
                end,
                metric: None,
                error: Some(e.to_string()),
            },
        };
        out.push(point);
    }
    Ok(out)
}
