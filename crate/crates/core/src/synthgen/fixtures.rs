use std::sync::Arc;

use crate::hin::{default_sme_schema, Hin, HinBuilder, RiskLabel};

/// Two target enterprises J and K, controllers L1..L3 and shareholder-side
/// enterprises Q1..Q6. Along `E-[control]->P-[shareholder]->E`, J reaches
/// Q1..Q5 and K reaches Q3..Q6; Q3, Q4 and Q5 are risky.
pub fn figure5_fixture() -> Hin {
    let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
    for id in ["J", "K"] {
        b.add_node(id, "enterprise", None).expect("fresh id");
    }
    for id in ["L1", "L2", "L3"] {
        b.add_node(id, "person", None).expect("fresh id");
    }
    for i in 1..=6 {
        let q = b.add_node(&format!("Q{i}"), "enterprise", None).expect("fresh id");
        b.set_label(q, Some(RiskLabel::observed((3..=5).contains(&i))));
    }
    let edges = [
        ("J", "L1", "control"),
        ("J", "L2", "control"),
        ("K", "L2", "control"),
        ("K", "L3", "control"),
        ("Q1", "L1", "shareholder"),
        ("Q2", "L1", "shareholder"),
        ("Q3", "L2", "shareholder"),
        ("Q4", "L2", "shareholder"),
        ("Q5", "L2", "shareholder"),
        ("Q6", "L3", "shareholder"),
    ];
    for (i, (s, d, r)) in edges.iter().enumerate() {
        b.add_edge(&format!("f{}", i + 1), s, d, r, None).expect("schema-valid edge");
    }
    b.build()
}

/// Enterprises v1, v2, v7; persons v3, v4, v8; commodities v6, v9; news
/// v5 and v10..v13; links e1..e13.
pub fn figure3_fixture() -> Hin {
    let mut b = HinBuilder::new(Arc::new(default_sme_schema()));
    let nodes = [
        ("v1", "enterprise"),
        ("v2", "enterprise"),
        ("v3", "person"),
        ("v4", "person"),
        ("v5", "news"),
        ("v6", "commodity"),
        ("v7", "enterprise"),
        ("v8", "person"),
        ("v9", "commodity"),
        ("v10", "news"),
        ("v11", "news"),
        ("v12", "news"),
        ("v13", "news"),
    ];
    for (id, t) in nodes {
        b.add_node(id, t, None).expect("fresh id");
    }
    let edges = [
        ("v1", "v2", "parent"),
        ("v1", "v3", "control"),
        ("v1", "v4", "employee"),
        ("v1", "v5", "report"),
        ("v2", "v6", "produce"),
        ("v2", "v7", "supply"),
        ("v7", "v8", "control"),
        ("v7", "v9", "produce"),
        ("v2", "v10", "report"),
        ("v7", "v11", "report"),
        ("v2", "v12", "report"),
        ("v7", "v13", "report"),
        ("v3", "v4", "relate"),
    ];
    for (i, (s, d, r)) in edges.iter().enumerate() {
        b.add_edge(&format!("e{}", i + 1), s, d, r, None).expect("schema-valid edge");
    }
    b.build()
}
