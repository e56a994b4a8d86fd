use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::creditmodel::{fit_logistic, select_top_k};
use crate::evalharness::{
    candidate_paths, enterprise_type, infer_risk, labeled_enterprises, method_matrices, run_pipeline, timestamp_sweep,
    ComparisonReport, RiskStage,
};
use crate::hin::{default_sme_schema, load_hin, write_hin, Hin, HinSources, LoadOptions};
use crate::metapath::{enumerate_metapaths_with, parse_metapaths_file, EnumerateOptions, MetaPath};
use crate::mpfeatures::{write_feature_csv, write_feature_sidecar, FeatureMatrix};
use crate::riskbayes::{assess, BayesError};
use crate::synthgen::{generate, write_synth};

use super::artifacts::{slug, ArtifactSet, Manifest};
use super::config::PipelineConfig;
use super::{CliError, Command};

const HIN_FILES: [&str; 4] = [HinSources::NODES, HinSources::ATTRIBUTES, HinSources::EDGES, HinSources::LABELS];

/// Runs one subcommand into `out`. On failure every file it wrote is removed.
pub fn run_command(command: &Command, cfg: &PipelineConfig, out: &Path) -> Result<Manifest, CliError> {
    let mut set = ArtifactSet::new(out)?;
    match command {
        Command::Ingest => ingest(cfg, &mut set)?,
        Command::Validate => validate(cfg, &mut set)?,
        Command::Enumerate => enumerate(cfg, &mut set)?,
        Command::InferRisk => infer(cfg, &mut set)?,
        Command::Features => features(cfg, &mut set)?,
        Command::Train => train(cfg, &mut set)?,
        Command::Evaluate => evaluate(cfg, &mut set)?,
        Command::Sweep { .. } => sweep(cfg, &mut set)?,
        Command::Synth => synth(cfg, &mut set)?,
        Command::Report { input } => report(input.as_deref().unwrap_or(out), &mut set)?,
    }
    set.commit(command.name(), cfg.hash(), cfg.seed)
}

fn load(cfg: &PipelineConfig) -> Result<Hin, CliError> {
    let dir = cfg.data.as_ref().ok_or_else(|| CliError::usage("cli", "--data is required"))?;
    let sources = HinSources::from_dir(dir)?;
    let hin = load_hin(default_sme_schema(), &sources, LoadOptions::default())?;
    match cfg.as_of {
        Some((s, e)) => Ok(hin.as_of(s, e)?),
        None => Ok(hin),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn metapath_text(hin: &Hin, paths: &[MetaPath]) -> String {
    paths.iter().map(|p| p.format(hin.schema()) + "\n").collect()
}

fn candidates(hin: &Hin, cfg: &PipelineConfig) -> Result<Vec<MetaPath>, CliError> {
    match &cfg.metapaths {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::data("metapath", format!("{}: {e}", path.display())))?;
            let paths = parse_metapaths_file(&text, hin.schema())?;
            let e = enterprise_type(hin);
            if let Some(p) = paths.iter().find(|p| p.root() != e) {
                return Err(CliError::data("metapath", format!("`{}` does not start at enterprises", p.format(hin.schema()))));
            }
            Ok(paths)
        }
        None => Ok(candidate_paths(hin, &cfg.eval_config())),
    }
}

#[derive(Serialize)]
struct Summary {
    nodes: usize,
    edges: usize,
    nodes_by_type: BTreeMap<String, usize>,
    edges_by_relation: BTreeMap<String, usize>,
    labeled_by_type: BTreeMap<String, usize>,
}

fn summary(hin: &Hin) -> Summary {
    let s = hin.schema();
    let mut nodes_by_type = BTreeMap::new();
    let mut labeled_by_type = BTreeMap::new();
    for n in hin.nodes() {
        let t = s.object(n.otype).name.clone();
        *nodes_by_type.entry(t.clone()).or_insert(0) += 1;
        if n.label.is_some() {
            *labeled_by_type.entry(t).or_insert(0) += 1;
        }
    }
    let mut edges_by_relation = BTreeMap::new();
    for e in hin.edges() {
        let r = s.relation(e.rtype);
        let key = format!("{}-[{}]->{}", s.object(r.source).code, r.name, s.object(r.target).code);
        *edges_by_relation.entry(key).or_insert(0) += 1;
    }
    Summary {
        nodes: hin.node_count(),
        edges: hin.edge_count(),
        nodes_by_type,
        edges_by_relation,
        labeled_by_type,
    }
}

fn write_network(hin: &Hin, set: &mut ArtifactSet) -> Result<(), CliError> {
    write_hin(hin, set.dir()).map_err(|e| CliError::internal("hin", e.to_string()))?;
    for f in HIN_FILES {
        if set.path(f).exists() {
            set.adopt(f)?;
        }
    }
    Ok(())
}

fn ingest(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let hin = load(cfg)?;
    write_network(&hin, set)?;
    set.write("summary.json", json(&summary(&hin)))
}

fn validate(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let hin = load(cfg)?;
    hin.validate()?;
    set.write("validation.json", json(&summary(&hin)))
}

fn enumerate(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let (text, count) = if cfg.data.is_some() {
        let hin = load(cfg)?;
        let paths = candidates(&hin, cfg)?;
        (metapath_text(&hin, &paths), paths.len())
    } else {
        let schema = default_sme_schema();
        let e = schema.object_type(crate::hin::ENTERPRISE).expect("default schema");
        let opts = EnumerateOptions {
            allow_backtracking: cfg.allow_backtracking,
            limit: None,
        };
        let paths = enumerate_metapaths_with(&schema, e, cfg.max_relations, opts, |_| true);
        (paths.iter().map(|p| p.format(&schema) + "\n").collect(), paths.len())
    };
    log::info!("{count} meta paths");
    set.write("metapaths.txt", text)
}

fn risk_stage(hin: &Hin, cfg: &PipelineConfig) -> Result<RiskStage, CliError> {
    Ok(infer_risk(hin, cfg.alpha, cfg.threshold)?)
}

fn infer(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let hin = load(cfg)?;
    let stage = risk_stage(&hin, cfg)?;
    for (t, m) in &stage.models {
        let name = format!("bayes_{}.json", hin.schema().object(*t).name);
        set.write(&name, m.to_json()? + "\n")?;
    }
    let mut csv = String::from("id,type,posterior,gamma,source,risky\n");
    for idx in hin.node_indices() {
        let node = hin.node(idx);
        let t = &hin.schema().object(node.otype).name;
        let risky = u8::from(stage.risk.is_risky(idx));
        match assess(&hin, &stage.models, idx) {
            Ok(a) => {
                let p = a.posterior.map(|p| format!("{p:.17e}")).unwrap_or_default();
                let source = serde_json::to_value(a.source).expect("serializable");
                csv.push_str(&format!("{},{t},{p},{},{},{risky}\n", node.id, u8::from(a.gamma), source.as_str().unwrap_or("")));
            }
            Err(BayesError::MissingModel(_)) => csv.push_str(&format!("{},{t},,0,unlabeled,{risky}\n", node.id)),
            Err(e) => return Err(e.into()),
        }
    }
    set.write("risk.csv", csv)?;
    let skipped: BTreeMap<String, String> = stage.skipped.iter().map(|(t, e)| (t.clone(), e.to_string())).collect();
    set.write("skipped_models.json", json(&skipped))
}

fn write_matrix(name: &str, m: &FeatureMatrix, set: &mut ArtifactSet) -> Result<(), CliError> {
    let stem = format!("features_{}", slug(name));
    let io = |e: std::io::Error| CliError::internal("mpfeatures", e.to_string());
    write_feature_csv(m, &set.path(&format!("{stem}.csv"))).map_err(io)?;
    set.adopt(&format!("{stem}.csv"))?;
    let (imputed, stats) = m.imputed();
    write_feature_csv(&imputed, &set.path(&format!("{stem}.imputed.csv"))).map_err(io)?;
    set.adopt(&format!("{stem}.imputed.csv"))?;
    write_feature_sidecar(m, &stats, &set.path(&format!("{stem}.json"))).map_err(io)?;
    set.adopt(&format!("{stem}.json"))
}

fn features(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let hin = load(cfg)?;
    let stage = risk_stage(&hin, cfg)?;
    let paths = candidates(&stage.imputed, cfg)?;
    set.write("metapaths.txt", metapath_text(&hin, &paths))?;
    let rows = hin.nodes_of_type(enterprise_type(&hin));
    let methods = method_matrices(&stage.imputed, &stage.risk, &paths, &rows, &cfg.feature_kinds);
    for (name, m) in &methods {
        write_matrix(name, m, set)?;
    }
    Ok(())
}

fn train(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let hin = load(cfg)?;
    let stage = risk_stage(&hin, cfg)?;
    let paths = candidates(&stage.imputed, cfg)?;
    let (rows, labels) = labeled_enterprises(&hin);
    let methods = method_matrices(&stage.imputed, &stage.risk, &paths, &rows, &cfg.feature_kinds);
    for (name, m) in &methods {
        let (m, _) = m.imputed();
        let ranking = crate::evalharness::rank_features(&m, &labels, cfg.ranking)?;
        let selected = select_top_k(&ranking, cfg.top_k);
        let cols: Vec<usize> = selected.iter().map(|n| m.column_index(n).expect("ranked column")).collect();
        let model = fit_logistic(&m.select_columns(&cols), &labels)?;
        set.write(&format!("ranking_{}.csv", slug(name)), ranking.to_csv())?;
        set.write(&format!("model_{}.json", slug(name)), model.to_json() + "\n")?;
    }
    Ok(())
}

fn evaluate(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let hin = load(cfg)?;
    let outcome = run_pipeline(&hin, &cfg.eval_config())?;
    set.write("metapaths.txt", metapath_text(&hin, &outcome.candidates))?;
    set.write("report.json", outcome.report.to_json() + "\n")?;
    let files = outcome
        .report
        .write_roc_csvs(set.dir())
        .map_err(|e| CliError::internal("evalharness", e.to_string()))?;
    for f in files {
        set.adopt(&f.file_name().expect("file name").to_string_lossy())?;
    }
    if outcome.report.methods.values().all(|r| r.error.is_some()) {
        let causes: Vec<String> = outcome.report.methods.iter().map(|(n, r)| format!("{n}: {}", r.error.as_deref().unwrap_or(""))).collect();
        return Err(CliError::numerical("creditmodel", format!("every method failed ({})", causes.join("; "))));
    }
    Ok(())
}

fn sweep(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    if cfg.windows.is_empty() {
        return Err(CliError::usage("cli", "sweep needs at least one --window START:END"));
    }
    let hin = load(cfg)?;
    let points = timestamp_sweep(&hin, &cfg.windows, &cfg.eval_config())?;
    let report = ComparisonReport {
        metric: cfg.metric,
        methods: BTreeMap::new(),
        sweep: points,
    };
    set.write("sweep.csv", report.sweep_csv())
}

fn synth(cfg: &PipelineConfig, set: &mut ArtifactSet) -> Result<(), CliError> {
    let (hin, truth) = generate(&cfg.gen_config())?;
    write_synth(&hin, &truth, set.dir())?;
    for f in HIN_FILES.iter().copied().chain(["ground_truth.json"]) {
        if set.path(f).exists() {
            set.adopt(f)?;
        }
    }
    Ok(())
}

fn report(input: &Path, set: &mut ArtifactSet) -> Result<(), CliError> {
    let text = std::fs::read_to_string(input.join("report.json"))
        .map_err(|e| CliError::data("evalharness", format!("{}: {e}", input.join("report.json").display())))?;
    let report: ComparisonReport = serde_json::from_str(&text).map_err(|e| CliError::data("evalharness", format!("report.json: {e}")))?;
    let metric = serde_json::to_value(report.metric).expect("serializable");
    let mut md = format!("# Method comparison\n\nMetric: {}\n\n| method | average | folds | note |\n|---|---|---|---|\n", metric.as_str().unwrap_or(""));
    for (name, r) in &report.methods {
        let avg = r.average.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".into());
        let folds: Vec<String> = r.fold_scores.iter().map(|s| format!("{s:.3}")).collect();
        md.push_str(&format!("| {name} | {avg} | {} | {} |\n", folds.join(" "), r.error.as_deref().unwrap_or("")));
    }
    if let Ok(sweep) = std::fs::read_to_string(input.join("sweep.csv")) {
        md.push_str("\n## Time windows\n\n| start | end | metric |\n|---|---|---|\n");
        for line in sweep.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            if let [s, e, m] = cells[..] {
                let m = m.parse::<f64>().map_or_else(|_| "-".to_string(), |v| format!("{v:.4}"));
                md.push_str(&format!("| {s} | {e} | {m} |\n"));
            }
        }
    }
    set.write("report.md", md)
}
