use std::collections::BTreeSet;

use proptest::prelude::*;

use ngn_core::data::{parse_graph6_line, ten_fold_split};
use ngn_core::experiments::expressiveness::dissimilar_rate;
use ngn_core::experiments::naturality::{run_naturality, NaturalityConfig};
use ngn_core::graph::ConcreteGraph;
use ngn_core::rep::{RepField, RepKind, RepSpec};

fn rep_spec() -> impl Strategy<Value = RepSpec> {
    prop::collection::vec((any::<bool>(), 1usize..4), 1..4).prop_map(|fs| {
        RepSpec::new(
            fs.into_iter()
                .map(|(std, channels)| RepField {
                    kind: if std { RepKind::Standard } else { RepKind::Trivial },
                    channels,
                })
                .collect(),
        )
        .unwrap()
    })
}

fn perm(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// Reference graph6 writer for graphs with at most 62 nodes.
fn to_graph6(n: usize, edges: &BTreeSet<(usize, usize)>) -> String {
    let mut bits = Vec::new();
    for j in 1..n {
        for i in 0..j {
            bits.push(edges.contains(&(i, j)));
        }
    }
    let mut out = String::new();
    out.push((63 + n as u8) as char);
    for chunk in bits.chunks(6) {
        let v = chunk.iter().enumerate().fold(0u8, |acc, (k, &b)| acc | ((b as u8) << (5 - k)));
        out.push((63 + v) as char);
    }
    out
}

fn edge_set(g: &ConcreteGraph) -> BTreeSet<(usize, usize)> {
    g.edges().map(|(a, b)| (a.min(b), a.max(b))).collect()
}

proptest! {
    #[test]
    fn index_perm_respects_composition(spec in rep_spec(), (a, b) in (2usize..7).prop_flat_map(|n| (perm(n), perm(n)))) {
        // moving along b then a equals moving along a ∘ b
        let ab: Vec<usize> = b.iter().map(|&i| a[i]).collect();
        let (pa, pb, pab) = (spec.index_perm(&a), spec.index_perm(&b), spec.index_perm(&ab));
        let composed: Vec<usize> = pb.iter().map(|&i| pa[i]).collect();
        prop_assert_eq!(composed, pab);
        let identity: Vec<usize> = (0..a.len()).collect();
        prop_assert_eq!(spec.index_perm(&identity), (0..spec.dim(a.len())).collect::<Vec<_>>());
    }

    #[test]
    fn graph6_round_trip(n in 1usize..40, raw in prop::collection::vec((0usize..40, 0usize..40), 0..120)) {
        let edges: BTreeSet<(usize, usize)> = raw
            .into_iter()
            .filter(|&(a, b)| a < n && b < n && a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let g = parse_graph6_line(&to_graph6(n, &edges)).unwrap();
        prop_assert_eq!(g.node_count(), n);
        prop_assert_eq!(edge_set(&g), edges);
    }

    #[test]
    fn folds_partition_and_stratify(labels in prop::collection::vec(0usize..3, 10..80), seed in any::<u64>()) {
        let folds = ten_fold_split(&labels, seed).unwrap();
        prop_assert_eq!(folds.len(), 10);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..3 {
            let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn dissimilar_rate_bounded_and_order_free(emb in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..12)) {
        let r = dissimilar_rate(&emb, 1e-3);
        prop_assert!((0.0..=1.0).contains(&r));
        let mut rev = emb.clone();
        rev.reverse();
        prop_assert_eq!(dissimilar_rate(&rev, 1e-3), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_layers_are_natural(seed in any::<u64>(), max_nodes in 3usize..12) {
        let r = run_naturality(&NaturalityConfig {
            trials: 4,
            max_nodes,
            seed,
            ..NaturalityConfig::default()
        })
        .unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }
}
