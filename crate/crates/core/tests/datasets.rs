use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ngn_core::data::{
    initial_features, load_dataset, load_graph6, load_tu, parse_graph6_line, save_dataset, strongly_regular_25, FeatureMode, SUITE_NODES,
};
use ngn_core::Error;

fn mutag_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/MUTAG")
}

fn column(path: &Path) -> Vec<i64> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().parse().unwrap()).collect()
}

#[test]
fn mutag_matches_a_direct_scan() {
    let dir = mutag_dir();
    let ds = load_tu(&dir).unwrap();
    // independent counts straight from the files
    let indicator = column(&dir.join("MUTAG_graph_indicator.txt"));
    let graph_labels = column(&dir.join("MUTAG_graph_labels.txt"));
    let node_labels = column(&dir.join("MUTAG_node_labels.txt"));
    let graphs = *indicator.iter().max().unwrap() as usize;
    let mut sizes = BTreeMap::new();
    for g in &indicator {
        *sizes.entry(*g).or_insert(0usize) += 1;
    }
    assert_eq!(ds.name, "MUTAG");
    assert_eq!(ds.len(), graphs);
    assert_eq!(ds.len(), 188);
    assert_eq!(ds.classes, graph_labels.iter().collect::<BTreeSet<_>>().len());
    assert_eq!(ds.classes, 2);
    for (i, g) in ds.graphs.iter().enumerate() {
        assert_eq!(g.node_count(), sizes[&(i as i64 + 1)]);
    }
    // mean node count reported for the dataset: 17.9
    assert!((ds.mean_nodes() - 17.9).abs() < 0.05, "{}", ds.mean_nodes());
    let width = node_labels.iter().collect::<BTreeSet<_>>().len();
    let feats = initial_features(&ds, FeatureMode::OnehotLabel).unwrap();
    assert!(feats.iter().all(|f| f.cols() == width && width == 7));
    assert!(feats.iter().all(|f| (0..f.rows()).all(|r| f.row(r).iter().sum::<f64>() == 1.0)));
}

#[test]
fn dataset_cache_round_trip() {
    let ds = load_tu(&mutag_dir()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mutag.json");
    save_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.labels, ds.labels);
    assert_eq!(back.node_labels, ds.node_labels);
    assert!(back.graphs.iter().zip(&ds.graphs).all(|(a, b)| a == b));
}

#[test]
fn tu_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("TOY");
    fs::create_dir(&root).unwrap();
    fs::write(root.join("TOY_A.txt"), "1, 2\n2, 1\nthree, 1\n").unwrap();
    fs::write(root.join("TOY_graph_indicator.txt"), "1\n1\n1\n").unwrap();
    fs::write(root.join("TOY_graph_labels.txt"), "0\n").unwrap();
    match load_tu(&root) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
    fs::remove_file(root.join("TOY_A.txt")).unwrap();
    assert!(matches!(load_tu(&root), Err(Error::Parse { .. })));
}

#[test]
fn strongly_regular_suite() {
    let graphs = strongly_regular_25().unwrap();
    assert_eq!(graphs.len(), 15);
    for g in &graphs {
        assert_eq!(g.node_count(), SUITE_NODES);
        let d = g.undirected_degree(0);
        assert!((0..g.node_count()).all(|u| g.undirected_degree(u) == d));
    }
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sr25.g6");
    assert_eq!(load_graph6(&file).unwrap(), graphs);
}

#[test]
fn graph6_hand_encoded() {
    // path 0-1-2: n = 3 → 'B'; bits (0,1)=1 (0,2)=0 (1,2)=1 → 101000 = 40 → 'g'
    let g = parse_graph6_line("Bg").unwrap();
    assert_eq!(g.node_count(), 3);
    assert_eq!(g.undirected_degree(1), 2);
    assert_eq!(g.undirected_degree(0), 1);
    assert!(parse_graph6_line("").is_err());
    assert!(load_graph6(Path::new("/nonexistent/file.g6")).is_err());
}
