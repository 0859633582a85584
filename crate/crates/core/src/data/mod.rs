//! Graph corpora: TU-format benchmark sets, graph6 files, synthetic suites,
//! initial node features and cross-validation folds.

mod graph6;
mod synth;
mod tu;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConcreteGraph;
use crate::nn::Tensor;

pub use graph6::{load_graph6, parse_graph6, parse_graph6_line};
pub use synth::{strongly_regular_25, synth_suites, Suites, SUITE_NODES};
pub use tu::load_tu;

/// A labelled collection of graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDataset {
    pub name: String,
    /// Graphs on local ids `0..n`.
    pub graphs: Vec<ConcreteGraph>,
    /// Class index per graph.
    pub labels: Vec<usize>,
    pub classes: usize,
    /// Optional integer label per node, indexed like the graph's nodes.
    pub node_labels: Option<Vec<Vec<i64>>>,
    /// Source-file id of every node.
    pub original_ids: Vec<Vec<usize>>,
}

impl GraphDataset {
    /// Checks the per-graph list lengths.
    pub fn validate(&self) -> Result<()> {
        let n = self.graphs.len();
        if self.labels.len() != n || self.original_ids.len() != n {
            return Err(Error::Contract(format!("{n} graphs but {} labels", self.labels.len())));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.classes) {
            return Err(Error::Contract(format!("label {l} outside {} classes", self.classes)));
        }
        if let Some(nl) = &self.node_labels {
            if nl.len() != n || nl.iter().zip(&self.graphs).any(|(l, g)| l.len() != g.node_count()) {
                return Err(Error::Contract("node labels do not cover every node".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn mean_nodes(&self) -> f64 {
        self.graphs.iter().map(|g| g.node_count() as f64).sum::<f64>() / self.len().max(1) as f64
    }

    /// Dataset restricted to the listed graphs.
    pub fn subset(&self, idx: &[usize]) -> GraphDataset {
        GraphDataset {
            name: self.name.clone(),
            graphs: idx.iter().map(|&i| self.graphs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            node_labels: self.node_labels.as_ref().map(|nl| idx.iter().map(|&i| nl[i].clone()).collect()),
            original_ids: idx.iter().map(|&i| self.original_ids[i].clone()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    /// One-hot node label over the dataset's label alphabet.
    OnehotLabel,
    /// Undirected degree as a single channel.
    Degree,
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::OnehotLabel => "onehot-label",
            FeatureMode::Degree => "degree",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onehot-label" | "onehot" => Ok(FeatureMode::OnehotLabel),
            "degree" => Ok(FeatureMode::Degree),
            _ => Err(Error::Contract(format!("unknown feature mode `{s}`"))),
        }
    }
}

/// Per-graph `n × width` trivial-representation features.
pub fn initial_features(ds: &GraphDataset, mode: FeatureMode) -> Result<Vec<Tensor<f64>>> {
    match mode {
        FeatureMode::Degree => Ok(ds.graphs.iter().map(degree_features).collect()),
        FeatureMode::OnehotLabel => {
            let nl = ds
                .node_labels
                .as_ref()
                .ok_or_else(|| Error::Contract(format!("dataset `{}` has no node labels", ds.name)))?;
            let mut alphabet: Vec<i64> = nl.iter().flatten().copied().collect();
            alphabet.sort_unstable();
            alphabet.dedup();
            Ok(nl
                .iter()
                .map(|labels| {
                    Tensor::from_fn(labels.len(), alphabet.len(), |r, c| if alphabet[c] == labels[r] { 1.0 } else { 0.0 })
                })
                .collect())
        }
    }
}

/// Undirected degree of every node as one channel.
pub fn degree_features(g: &ConcreteGraph) -> Tensor<f64> {
    Tensor::from_fn(g.node_count(), 1, |r, _| g.undirected_degree(r) as f64)
}

/// Stratified folds: each class is shuffled and dealt round-robin, the
/// dealing position carrying over between classes.
pub fn ten_fold_split(labels: &[usize], seed: u64) -> Result<Vec<Vec<usize>>> {
    const K: usize = 10;
    if labels.len() < K {
        return Err(Error::Contract(format!("{} graphs cannot fill {K} folds", labels.len())));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); K];
    let mut next = 0;
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if !members.is_empty() && members.len() < K {
            log::warn!("class {c} has {} members, fewer than {K} folds", members.len());
        }
        members.shuffle(&mut rng);
        for i in members {
            folds[next % K].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

const CACHE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DatasetCache {
    version: u32,
    dataset: GraphDataset,
}

pub fn save_dataset(ds: &GraphDataset, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(
        f,
        &DatasetCache {
            version: CACHE_VERSION,
            dataset: ds.clone(),
        },
    )?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<GraphDataset> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let c: DatasetCache = serde_json::from_reader(f)?;
    if c.version != CACHE_VERSION {
        return Err(Error::Format(format!("dataset cache version {} (expected {CACHE_VERSION})", c.version)));
    }
    c.dataset.validate()?;
    Ok(c.dataset)
}
