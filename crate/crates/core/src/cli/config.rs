use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::evalharness::{EvalConfig, Metric, Protocol, Ranking};
use crate::mpfeatures::FeatureKind;
use crate::riskbayes::{DEFAULT_ALPHA, DEFAULT_IMPUTE_THRESHOLD};
use crate::synthgen::GenConfig;

use super::CliError;

/// Everything a run depends on besides its input files. Loaded from TOML,
/// then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: Option<PathBuf>,
    pub metapaths: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads; 0 uses every core. Never affects outputs.
    pub workers: usize,
    pub max_relations: usize,
    pub candidate_cap: usize,
    pub allow_backtracking: bool,
    pub feature_kinds: Vec<FeatureKind>,
    pub alpha: f64,
    pub threshold: f64,
    pub top_k: usize,
    pub folds: usize,
    pub ranking: Ranking,
    pub protocol: Protocol,
    pub metric: Metric,
    pub as_of: Option<(i64, i64)>,
    pub windows: Vec<(i64, i64)>,
    pub synth: GenConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: None,
            metapaths: None,
            seed: 0,
            workers: 0,
            max_relations: 5,
            candidate_cap: 40,
            allow_backtracking: false,
            feature_kinds: FeatureKind::ALL.to_vec(),
            alpha: DEFAULT_ALPHA,
            threshold: DEFAULT_IMPUTE_THRESHOLD,
            top_k: 10,
            folds: 5,
            ranking: Ranking::Joint,
            protocol: Protocol::CrossValidation,
            metric: Metric::Auc,
            as_of: None,
            windows: Vec::new(),
            synth: GenConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            max_relations: self.max_relations,
            candidate_cap: self.candidate_cap,
            allow_backtracking: self.allow_backtracking,
            feature_kinds: self.feature_kinds.clone(),
            alpha: self.alpha,
            threshold: self.threshold,
            top_k: self.top_k,
            folds: self.folds,
            seed: self.seed,
            ranking: self.ranking,
            protocol: self.protocol,
            metric: self.metric,
        }
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::usage("config", m.to_string()));
        if self.max_relations == 0 {
            return bad("max_relations must be at least 1");
        }
        if self.top_k == 0 || self.candidate_cap == 0 {
            return bad("top_k and candidate_cap must be at least 1");
        }
        if self.folds < 2 && self.protocol == Protocol::CrossValidation {
            return bad("cross-validation needs at least 2 folds");
        }
        if self.feature_kinds.is_empty() {
            return bad("at least one feature kind must be enabled");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.threshold > 0.5 && self.threshold <= 1.0) {
            return bad("threshold must lie in (0.5, 1]");
        }
        for &(s, e) in self.as_of.iter().chain(&self.windows) {
            if s > e {
                return bad("window start must not exceed its end");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. Worker count is excluded since
    /// it never changes outputs.
    pub fn hash(&self) -> String {
        let canonical = PipelineConfig { workers: 0, ..self.clone() };
        let text = serde_json::to_string(&canonical).expect("serializable");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// `START:END` in epoch-days.
pub fn parse_window(text: &str) -> Result<(i64, i64), String> {
    let (s, e) = text.split_once(':').ok_or_else(|| format!("expected START:END, got `{text}`"))?;
    let s: i64 = s.trim().parse().map_err(|_| format!("bad window start `{s}`"))?;
    let e: i64 = e.trim().parse().map_err(|_| format!("bad window end `{e}`"))?;
    if s > e {
        return Err(format!("window start {s} exceeds end {e}"));
    }
    Ok((s, e))
}

pub fn parse_kind(text: &str) -> Result<FeatureKind, String> {
    text.trim().parse().map_err(|_| format!("unknown feature kind `{text}` (expected naive, countsim or hetesim)"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let c: PipelineConfig = toml::from_str("seed = 7\nfeature_kinds = [\"hetesim\"]\nas_of = [10, 20]\n[synth]\nenterprises = 50\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.feature_kinds, vec![FeatureKind::HeteSim]);
        assert_eq!(c.as_of, Some((10, 20)));
        assert_eq!(c.synth.enterprises, 50);
        assert_eq!(c.top_k, 10);
        assert!(toml::from_str::<PipelineConfig>("sede = 1").is_err());
    }

    #[test]
    fn hash_ignores_workers() {
        let a = PipelineConfig::default();
        let b = PipelineConfig { workers: 3, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), PipelineConfig { seed: 1, ..a }.hash());
    }

    #[test]
    fn window_and_kind_parsing() {
        assert_eq!(parse_window("3650:4015"), Ok((3650, 4015)));
        assert!(parse_window("5:1").is_err());
        assert!(parse_window("5").is_err());
        assert_eq!(parse_kind(" hetesim"), Ok(FeatureKind::HeteSim));
        assert!(parse_kind("pathsim").is_err());
    }
}
