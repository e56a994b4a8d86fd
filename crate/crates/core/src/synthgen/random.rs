use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hin::{default_sme_schema, Hin, HinBuilder, RiskLabel};

/// Small random network over the default schema: random node types (at
/// least one of each), schema-valid links without self-loops, random
/// observed labels and a two-level attribute.
pub fn random_small_hin(seed: u64, nodes: usize, edges: usize) -> Hin {
    let schema = Arc::new(default_sme_schema());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = ["enterprise", "person", "commodity", "news"];
    let mut b = HinBuilder::new(schema.clone());
    let mut by_type: Vec<Vec<String>> = vec![Vec::new(); types.len()];
    for i in 0..nodes {
        let t = if i < types.len() {
            i
        } else {
            // Enterprises and persons dominate, as in the real data.
            match rng.random_range(0..10) {
                0..=3 => 0,
                4..=6 => 1,
                7..=8 => 2,
                _ => 3,
            }
        };
        let id = format!("n{i}");
        let n = b.add_node(&id, types[t], None).expect("fresh id");
        b.set_label(n, Some(RiskLabel::observed(rng.random_bool(0.4))));
        b.set_attribute(n, "level", if rng.random_bool(0.5) { "hi" } else { "lo" });
        by_type[t].push(id);
    }
    let rels: Vec<_> = schema.relations().to_vec();
    let mut made = 0;
    let mut attempts = 0;
    while made < edges && attempts < edges * 50 {
        attempts += 1;
        let rel = &rels[rng.random_range(0..rels.len())];
        let si = schema.object(rel.source).name.as_str();
        let ti = schema.object(rel.target).name.as_str();
        let src_pool = &by_type[types.iter().position(|t| *t == si).expect("known type")];
        let dst_pool = &by_type[types.iter().position(|t| *t == ti).expect("known type")];
        if src_pool.is_empty() || dst_pool.is_empty() {
            continue;
        }
        let s = &src_pool[rng.random_range(0..src_pool.len())];
        let d = &dst_pool[rng.random_range(0..dst_pool.len())];
        if s == d {
            continue;
        }
        b.add_edge(&format!("x{made}"), s, d, &rel.name, None).expect("schema-valid edge");
        made += 1;
    }
    b.build()
}
