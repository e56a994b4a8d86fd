use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hin::{Hin, NodeIdx, ENTERPRISE};

use super::{feature_value, split_path, FeatureError, FeatureKind, FeatureSpec, HeteSimEngine, RiskMap};

/// Rows are entities, columns are named features. Undefined cells are
/// flagged in `missing` and hold NaN until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    /// Meta-path provenance of each column; `None` for non-path columns.
    pub specs: Vec<Option<FeatureSpec>>,
    values: Vec<f64>,
    missing: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationStats {
    pub column: String,
    pub missing: usize,
    pub fill: f64,
}

impl FeatureMatrix {
    /// Builds from column vectors; `None` marks a missing cell.
    pub fn from_columns(ids: Vec<String>, names: Vec<String>, specs: Vec<Option<FeatureSpec>>, columns: Vec<Vec<Option<f64>>>) -> Self {
        assert_eq!(names.len(), columns.len());
        assert_eq!(specs.len(), columns.len());
        let (rows, cols) = (ids.len(), columns.len());
        let mut values = vec![f64::NAN; rows * cols];
        let mut missing = vec![true; rows * cols];
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column `{}` has the wrong length", names[j]);
            for (i, v) in col.iter().enumerate() {
                if let Some(v) = v {
                    values[i * cols + j] = *v;
                    missing[i * cols + j] = false;
                }
            }
        }
        FeatureMatrix { ids, names, specs, values, missing }
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.cols() + j;
        (!self.missing[k]).then_some(self.values[k])
    }

    pub fn is_missing(&self, i: usize, j: usize) -> bool {
        self.missing[i * self.cols() + j]
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    /// Dense row; missing cells read as NaN.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.values[i * c..(i + 1) * c]
    }

    /// Means of the defined cells per column; 0 for an all-missing column.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|j| {
                let col: Vec<f64> = self.column(j).into_iter().flatten().collect();
                if col.is_empty() {
                    0.0
                } else {
                    col.iter().sum::<f64>() / col.len() as f64
                }
            })
            .collect()
    }

    /// Column-mean imputation. An all-missing column is filled with 0.
    pub fn imputed(&self) -> (FeatureMatrix, Vec<ImputationStats>) {
        self.filled(&self.column_means())
    }

    /// Fills missing cells of column `j` with `fills[j]`.
    pub fn filled(&self, fills: &[f64]) -> (FeatureMatrix, Vec<ImputationStats>) {
        assert_eq!(fills.len(), self.cols());
        let mut out = self.clone();
        let mut stats = Vec::with_capacity(self.cols());
        for (j, &fill) in fills.iter().enumerate() {
            let mut n = 0;
            for i in 0..self.rows() {
                let k = i * self.cols() + j;
                if out.missing[k] {
                    out.values[k] = fill;
                    out.missing[k] = false;
                    n += 1;
                }
            }
            stats.push(ImputationStats {
                column: self.names[j].clone(),
                missing: n,
                fill,
            });
        }
        (out, stats)
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let columns = cols.iter().map(|&j| self.column(j)).collect();
        FeatureMatrix::from_columns(
            self.ids.clone(),
            cols.iter().map(|&j| self.names[j].clone()).collect(),
            cols.iter().map(|&j| self.specs[j].clone()).collect(),
            columns,
        )
    }

    /// Keeps the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let columns = (0..self.cols())
            .map(|j| rows.iter().map(|&i| self.get(i, j)).collect())
            .collect();
        FeatureMatrix::from_columns(
            rows.iter().map(|&i| self.ids[i].clone()).collect(),
            self.names.clone(),
            self.specs.clone(),
            columns,
        )
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Every enterprise (in node order) against every spec.
pub fn build_feature_matrix(hin: &Hin, specs: &[FeatureSpec], risk: &RiskMap) -> FeatureMatrix {
    let rows = hin
        .schema()
        .object_type(ENTERPRISE)
        .map(|e| hin.nodes_of_type(e))
        .unwrap_or_default();
    let engine = HeteSimEngine::new(hin);
    build_feature_matrix_with(&engine, &rows, specs, risk)
}

/// Cells are computed in parallel; an undefined or failing cell is marked
/// missing and never aborts the matrix.
pub fn build_feature_matrix_with(engine: &HeteSimEngine<'_>, rows: &[NodeIdx], specs: &[FeatureSpec], risk: &RiskMap) -> FeatureMatrix {
    let hin = engine.hin();
    // Warm the operator cache up front so cell workers never block on an
    // operator being built by a thread that is itself waiting on a cell.
    for spec in specs.iter().filter(|s| s.kind == FeatureKind::HeteSim) {
        let (l, r) = split_path(hin, &spec.mp);
        engine.operator(&l);
        engine.operator(&r);
    }
    let columns: Vec<Vec<Option<f64>>> = specs
        .par_iter()
        .map(|spec| {
            rows.par_iter()
                .map(|&x| match feature_value(engine, x, spec, risk) {
                    Ok(v) => Some(v),
                    Err(e) => {
                        if !e.is_missing() && e != FeatureError::TypeMismatch {
                            log::debug!("{} at {}: {e}", spec.name, hin.node(x).id);
                        }
                        None
                    }
                })
                .collect()
        })
        .collect();
    FeatureMatrix::from_columns(
        rows.iter().map(|&n| hin.node(n).id.clone()).collect(),
        specs.iter().map(|s| s.name.clone()).collect(),
        specs.iter().cloned().map(Some).collect(),
        columns,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m() -> FeatureMatrix {
        FeatureMatrix::from_columns(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["f".into(), "g".into()],
            vec![None, None],
            vec![vec![Some(1.0), None, Some(3.0)], vec![None, None, None]],
        )
    }

    #[test]
    fn mean_imputation() {
        let (out, stats) = m().imputed();
        assert_eq!(out.get(1, 0), Some(2.0));
        assert_eq!(out.get(0, 1), Some(0.0));
        assert_eq!(out.missing_count(), 0);
        assert_eq!(stats[0].missing, 1);
        assert_eq!(stats[1].missing, 3);
    }

    #[test]
    fn select() {
        let x = m();
        let s = x.select_columns(&[1, 0]);
        assert_eq!(s.names, ["g", "f"]);
        assert_eq!(s.get(2, 1), Some(3.0));
        let r = x.select_rows(&[2, 0]);
        assert_eq!(r.ids, ["c", "a"]);
        assert_eq!(r.get(0, 0), Some(3.0));
        assert!(r.is_missing(0, 1));
    }
}
