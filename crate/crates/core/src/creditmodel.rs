//! Logistic regression by damped Newton, Wald tests and p-value ranking.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mpfeatures::FeatureMatrix;

pub const MAX_ITERATIONS: usize = 100;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
pub const DIVERGENCE_NORM: f64 = 1e4;
pub const RIDGE_JITTER: f64 = 1e-8;
pub const P_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CreditError {
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("design has {rows} rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("design contains missing or non-finite values")]
    MissingValues,
    #[error("coefficients diverge (complete or quasi-complete separation)")]
    SeparationDetected,
    #[error("information matrix is singular")]
    SingularInformation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: MAX_ITERATIONS,
            tolerance: GRADIENT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub separation_flag: bool,
    /// Log-likelihood after each accepted step, starting at beta = 0.
    pub log_likelihood: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub name: String,
    /// On the standardized scale.
    pub beta: f64,
    /// On the caller's scale.
    pub beta_raw: f64,
    pub se: f64,
    pub wald: f64,
    pub p_value: f64,
    pub stars: String,
    /// Zero-variance column left out of the fit.
    pub dropped: bool,
    /// p-value fell below the floor and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub intercept: f64,
    pub intercept_raw: f64,
    pub intercept_se: f64,
    pub coefficients: Vec<CoefficientReport>,
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
    pub convergence: Convergence,
}

impl FittedModel {
    pub fn names(&self) -> Vec<&str> {
        self.coefficients.iter().map(|c| c.name.as_str()).collect()
    }

    /// Linear predictor for a row on the caller's scale.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for (j, c) in self.coefficients.iter().enumerate() {
            if !c.dropped {
                eta += c.beta * (row[j] - self.means[j]) / self.stdevs[j];
            }
        }
        eta
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Feature<'a> {
            name: &'a str,
            beta: f64,
            se: f64,
            wald: f64,
            p_value: f64,
            stars: &'a str,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            intercept: f64,
            features: Vec<Feature<'a>>,
            convergence: serde_json::Value,
        }
        let doc = Doc {
            intercept: self.intercept_raw,
            features: self
                .coefficients
                .iter()
                .map(|c| Feature {
                    name: &c.name,
                    beta: c.beta_raw,
                    se: c.se,
                    wald: c.wald,
                    p_value: c.p_value,
                    stars: &c.stars,
                })
                .collect(),
            convergence: serde_json::json!({
                "iterations": self.convergence.iterations,
                "grad_norm": self.convergence.grad_norm,
                "separation_flag": self.convergence.separation_flag,
            }),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of `beta` on design `z` (intercept column first).
pub fn log_likelihood(z: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = z * beta;
    eta.iter().zip(y).map(|(&e, &t)| t * e - softplus(e)).sum()
}

/// Score vector `z' (y - p)`.
pub fn gradient(z: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>) -> DVector<f64> {
    let eta = z * beta;
    let resid = DVector::from_iterator(y.len(), eta.iter().zip(y).map(|(&e, &t)| t - sigmoid(e)));
    z.tr_mul(&resid)
}

fn information(z: &DMatrix<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    let eta = z * beta;
    let mut zw = z.clone();
    for (i, &e) in eta.iter().enumerate() {
        let p = sigmoid(e);
        let w = p * (1.0 - p);
        zw.row_mut(i).scale_mut(w);
    }
    z.tr_mul(&zw)
}

fn cholesky_with_jitter(h: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>, CreditError> {
    if let Some(c) = h.clone().cholesky() {
        return Ok(c);
    }
    let n = h.nrows();
    (h + DMatrix::<f64>::identity(n, n) * RIDGE_JITTER)
        .cholesky()
        .ok_or(CreditError::SingularInformation)
}

/// Error bound on a log-likelihood sum of `n` terms.
fn roundoff(ll: f64, n: usize) -> f64 {
    4.0 * f64::EPSILON * (n as f64).sqrt() * ll.abs().max(1.0)
}

/// Newton-Raphson with step halving on a ready design (intercept column
/// included). Returns `(beta, convergence)`.
pub fn newton(z: &DMatrix<f64>, y: &[f64], opts: FitOptions) -> Result<(DVector<f64>, Convergence), CreditError> {
    let k = z.ncols();
    let mut beta = DVector::zeros(k);
    let mut ll = log_likelihood(z, y, &beta);
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut g = gradient(z, y, &beta);
    let mut grad_norm = g.amax();
    while grad_norm > opts.tolerance && iterations < opts.max_iterations {
        let chol = cholesky_with_jitter(&information(z, &beta))?;
        let delta = chol.solve(&g);
        let mut t = 1.0;
        let mut candidate = &beta + &delta * t;
        let mut cand_ll = log_likelihood(z, y, &candidate);
        // Near the optimum a full step gains less than the rounding error
        // of the likelihood sum; take it if it shrinks the gradient.
        let tied = cand_ll < ll && ll - cand_ll <= roundoff(ll, y.len()) && gradient(z, y, &candidate).amax() < grad_norm;
        while cand_ll < ll && !tied && t > 1e-12 {
            t *= 0.5;
            candidate = &beta + &delta * t;
            cand_ll = log_likelihood(z, y, &candidate);
        }
        if cand_ll < ll && !tied {
            break;
        }
        beta = candidate;
        ll = cand_ll;
        trace.push(ll);
        iterations += 1;
        if beta.norm() > DIVERGENCE_NORM || !ll.is_finite() {
            return Err(CreditError::SeparationDetected);
        }
        g = gradient(z, y, &beta);
        grad_norm = g.amax();
    }
    let eta = z * &beta;
    let worst = eta
        .iter()
        .zip(y)
        .map(|(&e, &t)| (t - sigmoid(e)).abs())
        .fold(0.0, f64::max);
    if worst < 1e-6 {
        return Err(CreditError::SeparationDetected);
    }
    Ok((
        beta,
        Convergence {
            iterations,
            grad_norm,
            converged: grad_norm <= opts.tolerance,
            separation_flag: false,
            log_likelihood: trace,
        },
    ))
}

/// Upper tail of chi-square with one degree of freedom, with a clamp flag.
pub fn chi2_sf_1(w: f64) -> (f64, bool) {
    if w.is_nan() || w <= 0.0 {
        return (1.0, false);
    }
    let p = statrs::function::erf::erfc((w / 2.0).sqrt());
    if p < P_FLOOR {
        (P_FLOOR, true)
    } else {
        (p.min(1.0), false)
    }
}

/// Significance stars: `*` p<0.1, `**` p<0.05, `***` p<0.01, `****` p<0.001.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "****"
    } else if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn check_inputs(x: &FeatureMatrix, y: &[bool]) -> Result<(), CreditError> {
    if x.rows() != y.len() {
        return Err(CreditError::ShapeMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if !y.iter().any(|&t| t) || y.iter().all(|&t| t) {
        return Err(CreditError::DegenerateLabels);
    }
    for i in 0..x.rows() {
        if x.row(i).iter().any(|v| !v.is_finite()) {
            return Err(CreditError::MissingValues);
        }
    }
    Ok(())
}

/// Joint maximum-likelihood fit on z-scored columns. Zero-variance columns
/// are dropped and reported with p = 1.
pub fn fit_logistic(x: &FeatureMatrix, y: &[bool]) -> Result<FittedModel, CreditError> {
    fit_logistic_with(x, y, FitOptions::default())
}

pub fn fit_logistic_with(x: &FeatureMatrix, y: &[bool], opts: FitOptions) -> Result<FittedModel, CreditError> {
    check_inputs(x, y)?;
    let n = x.rows();
    let mut means = Vec::with_capacity(x.cols());
    let mut stdevs = Vec::with_capacity(x.cols());
    let mut kept = Vec::new();
    for j in 0..x.cols() {
        let col: Vec<f64> = (0..n).map(|i| x.row(i)[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        means.push(mean);
        if sd > 1e-12 * mean.abs().max(1.0) {
            stdevs.push(sd);
            kept.push(j);
        } else {
            log::debug!("dropping zero-variance column `{}`", x.names[j]);
            stdevs.push(1.0);
        }
    }
    let z = DMatrix::from_fn(n, kept.len() + 1, |i, c| {
        if c == 0 {
            1.0
        } else {
            let j = kept[c - 1];
            (x.row(i)[j] - means[j]) / stdevs[j]
        }
    });
    let yf: Vec<f64> = y.iter().map(|&t| f64::from(u8::from(t))).collect();
    let (beta, convergence) = newton(&z, &yf, opts)?;
    let cov = cholesky_with_jitter(&information(&z, &beta))?.inverse();

    let mut coefficients: Vec<CoefficientReport> = x
        .names
        .iter()
        .map(|name| CoefficientReport {
            name: name.clone(),
            beta: 0.0,
            beta_raw: 0.0,
            se: f64::INFINITY,
            wald: 0.0,
            p_value: 1.0,
            stars: String::new(),
            dropped: true,
            clamped: false,
        })
        .collect();
    let mut intercept_raw = beta[0];
    for (c, &j) in kept.iter().enumerate() {
        let b = beta[c + 1];
        let se = cov[(c + 1, c + 1)].max(0.0).sqrt();
        let wald = if se > 0.0 { (b / se).powi(2) } else { 0.0 };
        let (p, clamped) = chi2_sf_1(wald);
        intercept_raw -= b * means[j] / stdevs[j];
        coefficients[j] = CoefficientReport {
            name: x.names[j].clone(),
            beta: b,
            beta_raw: b / stdevs[j],
            se: se / stdevs[j],
            wald,
            p_value: p,
            stars: stars(p).to_string(),
            dropped: false,
            clamped,
        };
    }
    Ok(FittedModel {
        intercept: beta[0],
        intercept_raw,
        intercept_se: cov[(0, 0)].max(0.0).sqrt(),
        coefficients,
        means,
        stdevs,
        convergence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub name: String,
    pub p_value: f64,
    pub wald: f64,
    pub stars: String,
}

/// Features in ascending p-value order, ties broken by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking(pub Vec<RankedFeature>);

impl FeatureRanking {
    pub fn from_pairs(mut items: Vec<RankedFeature>) -> Self {
        items.sort_by(|a, b| a.p_value.total_cmp(&b.p_value).then_with(|| a.name.cmp(&b.name)));
        FeatureRanking(items)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// CSV of rank, feature, p-value to 5 significant digits and stars.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,p_value,stars\n");
        for (i, f) in self.0.iter().enumerate() {
            let stars = if f.stars.is_empty() { "-" } else { &f.stars };
            let name = if f.name.contains(',') { format!("\"{}\"", f.name) } else { f.name.clone() };
            out.push_str(&format!("{},{},{:.4e},{}\n", i + 1, name, f.p_value, stars));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Wald ranking of a joint fit; the intercept is not ranked.
pub fn wald_rank(model: &FittedModel) -> FeatureRanking {
    FeatureRanking::from_pairs(
        model
            .coefficients
            .iter()
            .map(|c| RankedFeature {
                name: c.name.clone(),
                p_value: c.p_value,
                wald: c.wald,
                stars: c.stars.clone(),
            })
            .collect(),
    )
}

/// One intercept-plus-feature model per column. Columns whose fit fails
/// are ranked last with p = 1.
pub fn univariate_rank(x: &FeatureMatrix, y: &[bool]) -> Result<FeatureRanking, CreditError> {
    check_inputs(x, y)?;
    let items = (0..x.cols())
        .map(|j| {
            let single = x.select_columns(&[j]);
            match fit_logistic(&single, y) {
                Ok(m) => {
                    let c = &m.coefficients[0];
                    RankedFeature {
                        name: c.name.clone(),
                        p_value: c.p_value,
                        wald: c.wald,
                        stars: c.stars.clone(),
                    }
                }
                Err(e) => {
                    log::warn!("univariate fit of `{}` failed: {e}", x.names[j]);
                    RankedFeature {
                        name: x.names[j].clone(),
                        p_value: 1.0,
                        wald: 0.0,
                        stars: String::new(),
                    }
                }
            }
        })
        .collect();
    Ok(FeatureRanking::from_pairs(items))
}

/// First `min(k, len)` names of the ranking.
pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Vec<String> {
    ranking.0.iter().take(k).map(|f| f.name.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let n = cols.first().map_or(0, Vec::len);
        FeatureMatrix::from_columns(
            (0..n).map(|i| i.to_string()).collect(),
            (0..cols.len()).map(|j| format!("x{j}")).collect(),
            vec![None; cols.len()],
            cols.into_iter().map(|c| c.into_iter().map(Some).collect()).collect(),
        )
    }

    #[test]
    fn intercept_only_balanced() {
        let x = matrix(vec![vec![3.0; 4]]);
        let m = fit_logistic(&x, &[true, false, true, false]).unwrap();
        assert!(m.intercept.abs() < 1e-12);
        assert!((m.predict(&[3.0]) - 0.5).abs() < 1e-12);
        assert!(m.coefficients[0].dropped);
        assert_eq!(m.coefficients[0].p_value, 1.0);
    }

    #[test]
    fn two_point_separation() {
        let x = matrix(vec![vec![0.0, 1.0]]);
        assert_eq!(fit_logistic(&x, &[false, true]), Err(CreditError::SeparationDetected));
    }

    #[test]
    fn degenerate_and_shape_errors() {
        let x = matrix(vec![vec![0.0, 1.0]]);
        assert_eq!(fit_logistic(&x, &[true, true]), Err(CreditError::DegenerateLabels));
        assert!(matches!(fit_logistic(&x, &[true]), Err(CreditError::ShapeMismatch { .. })));
    }

    #[test]
    fn chi2_tail_reference_points() {
        assert!((chi2_sf_1(3.841).0 - 0.05).abs() < 5e-4);
        assert_eq!(chi2_sf_1(0.0), (1.0, false));
        assert!((chi2_sf_1(6.634896601021214).0 - 0.01).abs() < 1e-12);
        assert_eq!(chi2_sf_1(5000.0), (P_FLOOR, true));
        assert!(chi2_sf_1(1000.0).0 > 0.0);
    }

    #[test]
    fn star_boundaries() {
        assert_eq!(stars(0.0999), "*");
        assert_eq!(stars(0.1), "");
        assert_eq!(stars(0.0499), "**");
        assert_eq!(stars(0.05), "*");
        assert_eq!(stars(0.00999), "***");
        assert_eq!(stars(0.01), "**");
        assert_eq!(stars(0.000999), "****");
        assert_eq!(stars(0.001), "***");
    }

    #[test]
    fn ranking_orders_and_truncates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<bool> = a.iter().map(|&v| rng.random::<f64>() < sigmoid(6.0 * (v - 0.5))).collect();
        let m = fit_logistic(&matrix(vec![b, a]), &y).unwrap();
        let r = wald_rank(&m);
        assert_eq!(r.0[0].name, "x1");
        assert_eq!(select_top_k(&r, 1), ["x1"]);
        assert_eq!(select_top_k(&r, 10).len(), 2);
        assert!(r.to_csv().starts_with("rank,feature,p_value,stars\n1,x1,"));
        let json = m.to_json();
        assert!(json.contains("separation_flag"));
    }

    #[test]
    fn ties_break_by_name() {
        let r = FeatureRanking::from_pairs(vec![
            RankedFeature { name: "b".into(), p_value: 0.2, wald: 1.0, stars: String::new() },
            RankedFeature { name: "a".into(), p_value: 0.2, wald: 1.0, stars: String::new() },
        ]);
        assert_eq!(select_top_k(&r, 2), ["a", "b"]);
    }
}
