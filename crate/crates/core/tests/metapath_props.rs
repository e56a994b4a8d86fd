mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use mprisk::hin::{default_sme_schema, ObjectTypeId};
use mprisk::metapath::{enumerate_metapaths, match_instances, parse_metapath, reachable_targets};
use mprisk::synthgen::oracle::oracle_match;
use mprisk::synthgen::random_small_hin;

use common::random_metapath;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn instances_equal_oracle_and_are_well_typed(seed in any::<u64>(), nodes in 4usize..=30, edges in 0usize..=60, path_seed in any::<u64>()) {
        let h = random_small_hin(seed, nodes, edges);
        let mp = random_metapath(h.schema(), path_seed, 4);
        for x in h.nodes_of_type(mp.root()) {
            let got = match_instances(&h, x, &mp).unwrap();
            for p in &got {
                prop_assert_eq!(p.nodes.len(), mp.len() + 1);
                prop_assert_eq!(p.edges.len(), mp.len());
                for (i, &n) in p.nodes.iter().enumerate() {
                    prop_assert_eq!(h.node_type(n), mp.types()[i]);
                }
                for (i, &e) in p.edges.iter().enumerate() {
                    let edge = h.edge(e);
                    let r = mp.relations()[i];
                    let (a, b) = (p.nodes[i], p.nodes[i + 1]);
                    let forward = edge.rtype == r && edge.src == a && edge.dst == b;
                    let backward = edge.rtype == h.schema().inverse(r) && edge.src == b && edge.dst == a;
                    prop_assert!(forward || backward);
                }
                prop_assert_ne!(p.terminal(), x);
            }
            let as_set: BTreeSet<(Vec<usize>, Vec<usize>)> = got
                .iter()
                .map(|p| (p.nodes.iter().map(|n| n.index()).collect(), p.edges.iter().map(|e| e.index()).collect()))
                .collect();
            prop_assert_eq!(as_set.len(), got.len(), "duplicate instances");
            prop_assert_eq!(&as_set, &oracle_match(&h, x.index(), &mp).unwrap());
            let ends: BTreeSet<_> = got.iter().map(|p| p.terminal()).collect();
            let targets: BTreeSet<_> = reachable_targets(&h, x, &mp).unwrap().into_iter().collect();
            prop_assert_eq!(ends, targets);
        }
    }

    #[test]
    fn format_parse_round_trip(path_seed in any::<u64>()) {
        let s = default_sme_schema();
        let mp = random_metapath(&s, path_seed, 6);
        let text = mp.format(&s);
        prop_assert_eq!(parse_metapath(&text, &s).unwrap(), mp);
    }

    #[test]
    fn inverse_is_an_involution(path_seed in any::<u64>()) {
        let s = default_sme_schema();
        let mp = random_metapath(&s, path_seed, 6);
        let inv = mp.inverse(&s);
        prop_assert_eq!(inv.root(), mp.terminal());
        prop_assert_eq!(inv.inverse(&s), mp);
    }
}

#[test]
fn enumeration_is_duplicate_free_bounded_and_monotone() {
    let s = default_sme_schema();
    for t in 0..s.object_type_count() {
        let root = ObjectTypeId(t as u16);
        let mut prev: BTreeSet<String> = BTreeSet::new();
        for k in 1..=4 {
            let paths = enumerate_metapaths(&s, root, k);
            let texts: BTreeSet<String> = paths.iter().map(|p| p.format(&s)).collect();
            assert_eq!(texts.len(), paths.len(), "duplicates at k={k}");
            for p in &paths {
                assert!((1..=k).contains(&p.len()));
                assert_eq!(p.root(), root);
                for w in p.relations().windows(2) {
                    assert_ne!(w[1], s.inverse(w[0]), "immediate backtrack in {}", p.format(&s));
                }
            }
            assert!(prev.is_subset(&texts), "k={k} drops shorter paths");
            prev = texts;
        }
    }
}

#[test]
fn parent_report_instance_is_found() {
    let h = mprisk::synthgen::figure3_fixture();
    let mp = parse_metapath("E-[parent]->E-[report]->N", h.schema()).unwrap();
    let v1 = h.node_idx("v1").unwrap();
    let got = match_instances(&h, v1, &mp).unwrap();
    let want: Vec<_> = ["v1", "v2", "v10"].iter().map(|id| h.node_idx(id).unwrap()).collect();
    let edge_ids = |p: &mprisk::metapath::PathInstance| p.edges.iter().map(|&e| h.edge(e).id.clone()).collect::<Vec<_>>();
    assert!(got.iter().any(|p| p.nodes == want && edge_ids(p) == ["e1", "e9"]));
}
