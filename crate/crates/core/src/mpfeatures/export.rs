use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, ImputationStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarColumn {
    pub name: String,
    pub kind: Option<String>,
    pub metapath: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub rows: usize,
    pub columns: Vec<SidecarColumn>,
    pub imputation: Vec<ImputationStats>,
}

/// `enterprise_id,<feature>,...`; missing cells are empty fields.
pub fn write_feature_csv(m: &FeatureMatrix, path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["enterprise_id".to_string()];
    header.extend(m.names.iter().cloned());
    w.write_record(&header)?;
    for i in 0..m.rows() {
        let mut rec = vec![m.ids[i].clone()];
        rec.extend((0..m.cols()).map(|j| m.get(i, j).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn write_feature_sidecar(m: &FeatureMatrix, stats: &[ImputationStats], path: &Path) -> std::io::Result<()> {
    let doc = FeatureSidecar {
        rows: m.rows(),
        columns: m
            .names
            .iter()
            .zip(&m.specs)
            .map(|(name, spec)| SidecarColumn {
                name: name.clone(),
                kind: spec.as_ref().map(|s| s.kind.to_string()),
                metapath: spec.as_ref().map(|s| s.path_text().to_string()),
            })
            .collect(),
        imputation: stats.to_vec(),
    };
    let text = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")
}
