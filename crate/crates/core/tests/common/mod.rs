#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mprisk::hin::{Hin, NodeIdx, Schema};
use mprisk::metapath::MetaPath;
use mprisk::mpfeatures::RiskMap;

/// A schema-valid random walk over relation types, 1..=max_len steps.
pub fn random_metapath(schema: &Schema, seed: u64, max_len: usize) -> MetaPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_types = schema.object_type_count();
    let mut t = mprisk::hin::ObjectTypeId(rng.random_range(0..n_types) as u16);
    let len = rng.random_range(1..=max_len);
    let mut rels = Vec::with_capacity(len);
    for _ in 0..len {
        let from = schema.relations_from(t);
        let r = from[rng.random_range(0..from.len())];
        rels.push(r);
        t = schema.relation(r).target;
    }
    MetaPath::from_relations(schema, rels).expect("walk follows the schema")
}

/// Nodes whose type matches the path root.
pub fn roots(hin: &Hin, mp: &MetaPath) -> Vec<NodeIdx> {
    hin.nodes_of_type(mp.root())
}

pub fn observed_risk(hin: &Hin) -> Vec<bool> {
    hin.nodes().iter().map(|n| n.label.is_some_and(|l| l.risky)).collect()
}

pub fn risk_map(hin: &Hin) -> RiskMap {
    RiskMap::from_vec(observed_risk(hin))
}

/// Random smoothed model with 1..=max_attrs attributes and one random
/// observation, some levels unseen.
pub fn random_nb_case(seed: u64, max_attrs: usize) -> (mprisk::riskbayes::NaiveBayesModel, std::collections::BTreeMap<String, String>) {
    use mprisk::riskbayes::{AttributeTable, NaiveBayesModel};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut simplex = |k: usize| {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    let prior = simplex(2);
    let mut attributes = std::collections::BTreeMap::new();
    let n_attrs = 1 + (seed as usize % max_attrs);
    let mut levels_of = Vec::new();
    for a in 0..n_attrs {
        let k = 2 + a % 4;
        let mut risky = simplex(k + 1);
        let mut safe = simplex(k + 1);
        let (unseen_risky, unseen_safe) = (risky.pop().unwrap(), safe.pop().unwrap());
        let levels: Vec<String> = (0..k).map(|i| format!("q{i}")).collect();
        levels_of.push(k);
        attributes.insert(
            format!("a{a:02}"),
            AttributeTable {
                levels,
                risky,
                safe,
                unseen_risky,
                unseen_safe,
            },
        );
    }
    let model = NaiveBayesModel {
        object_type: "enterprise".into(),
        alpha: 1.0,
        prior_risky: prior[0],
        prior_safe: prior[1],
        attributes,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let obs = levels_of
        .iter()
        .enumerate()
        .map(|(a, &k)| (format!("a{a:02}"), format!("q{}", rng.random_range(0..=k))))
        .collect();
    (model, obs)
}

/// Compares matcher, pairwise HeteSim and all three feature cells against
/// the brute-force oracles for every root node of `mp`.
pub fn check_against_oracles(hin: &Hin, mp: &MetaPath) -> Result<(), String> {
    use mprisk::metapath::match_instances;
    use mprisk::mpfeatures::{countsim_mp, hetesim_mp, naive_mp_ratio, HeteSimEngine};
    use mprisk::synthgen::oracle::{oracle_countsim, oracle_hetesim, oracle_hetesim_mp, oracle_match, oracle_naive};
    use std::collections::BTreeSet;

    let risky = observed_risk(hin);
    let risk = RiskMap::from_vec(risky.clone());
    let engine = HeteSimEngine::new(hin);
    let text = mp.format(hin.schema());
    let err = |what: &str, x: NodeIdx| format!("{what} differs at {} on {text}", hin.node(x).id);
    for x in roots(hin, mp) {
        let got: BTreeSet<(Vec<usize>, Vec<usize>)> = match_instances(hin, x, mp)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|p| (p.nodes.iter().map(|n| n.index()).collect(), p.edges.iter().map(|e| e.index()).collect()))
            .collect();
        if got != oracle_match(hin, x.index(), mp).map_err(|e| e.to_string())? {
            return Err(err("instance set", x));
        }
        for t in hin.nodes_of_type(mp.terminal()) {
            let a = engine.hetesim(x, t, mp).map_err(|e| e.to_string())?;
            let b = oracle_hetesim(hin, x.index(), t.index(), mp).map_err(|e| e.to_string())?;
            if (a - b).abs() > 1e-9 {
                return Err(format!("{} vs {}: {a} != {b}", err("hetesim", x), hin.node(t).id));
            }
        }
        let (on, od) = oracle_naive(hin, x.index(), mp, &risky).map_err(|e| e.to_string())?;
        match naive_mp_ratio(hin, x, mp, &risk) {
            Ok(r) if r == (on, od) => {}
            Err(e) if e.is_missing() && od == 0 => {}
            _ => return Err(err("naive", x)),
        }
        let (ct, cd) = oracle_countsim(hin, x.index(), mp).map_err(|e| e.to_string())?;
        match countsim_mp(hin, x, mp) {
            Ok(v) if cd > 0 && (v - ct as f64 / cd as f64).abs() <= 1e-12 => {}
            Err(e) if e.is_missing() && cd == 0 => {}
            _ => return Err(err("countsim", x)),
        }
        let (hn, hd) = oracle_hetesim_mp(hin, x.index(), mp, &risky).map_err(|e| e.to_string())?;
        match hetesim_mp(&engine, x, mp, &risk) {
            Ok(v) if hd > 0.0 && (v - hn / hd).abs() <= 1e-12 && (0.0..=1.0).contains(&v) => {}
            Err(e) if e.is_missing() && hd == 0.0 => {}
            other => return Err(format!("{}: {other:?} vs {hn}/{hd}", err("hetesim feature", x))),
        }
    }
    Ok(())
}

/// `n` draws from a logistic model with standard normal features:
/// `P(y=1|x) = sigmoid(beta[0] + sum beta[j] x_j)`.
pub fn logistic_sample(seed: u64, n: usize, beta: &[f64]) -> (mprisk::mpfeatures::FeatureMatrix, Vec<bool>) {
    use rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = beta.len() - 1;
    let mut cols = vec![Vec::with_capacity(n); k];
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut eta = beta[0];
        for (j, col) in cols.iter_mut().enumerate() {
            let v: f64 = rng.sample(StandardNormal);
            eta += beta[j + 1] * v;
            col.push(Some(v));
        }
        y.push(rng.random_bool(mprisk::creditmodel::sigmoid(eta)));
    }
    let m = mprisk::mpfeatures::FeatureMatrix::from_columns(
        (0..n).map(|i| format!("r{i}")).collect(),
        (0..k).map(|j| format!("x{j}")).collect(),
        vec![None; k],
        cols,
    );
    (m, y)
}

/// Design with a leading intercept column, as `newton` expects.
pub fn design(m: &mprisk::mpfeatures::FeatureMatrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols() + 1, |i, j| if j == 0 { 1.0 } else { m.row(i)[j - 1] })
}
