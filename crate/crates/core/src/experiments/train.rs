//! Desk-scale classification training with Adam on mini-batches.

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{initial_features, ten_fold_split, FeatureMode, GraphDataset};
use crate::error::{Error, Result};
use crate::message::{NetKind, NetSpec};
use crate::model::{Batch, Model, ModelConfig};
use crate::nn::{save_checkpoint, AdamState, Tensor};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub layers: usize,
    pub width: usize,
    pub net: NetSpec,
    pub hops: usize,
    pub epochs: usize,
    pub rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Held-out fold of a stratified 10-fold split; `None` trains on all.
    pub fold: Option<usize>,
    pub features: FeatureMode,
    pub checkpoint: Option<PathBuf>,
    /// Cosine decay of the rate to zero over the run.
    #[serde(default)]
    pub cosine: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: 3,
            width: 16,
            net: NetSpec {
                hidden: 16,
                ..NetSpec::default()
            },
            hops: 1,
            epochs: 100,
            rate: 1e-3,
            batch_size: 16,
            seed: 0,
            fold: None,
            features: FeatureMode::OnehotLabel,
            checkpoint: None,
            cosine: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    /// Mean mini-batch loss during the epoch.
    pub batch_loss: f64,
    /// Training-set loss after the epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub dataset: String,
    pub train_graphs: usize,
    pub test_graphs: usize,
    pub parameters: usize,
    pub initial_loss: f64,
    pub epochs: Vec<EpochRow>,
    pub seconds: f64,
}

impl TrainReport {
    pub fn final_train_accuracy(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.train_accuracy)
    }

    /// Medians of the training loss over consecutive 10-epoch windows.
    pub fn window_medians(&self) -> Vec<f64> {
        self.epochs
            .chunks(10)
            .filter(|c| c.len() == 10)
            .map(|c| {
                let mut v: Vec<f64> = c.iter().map(|e| e.train_loss).collect();
                v.sort_by(f64::total_cmp);
                (v[4] + v[5]) / 2.0
            })
            .collect()
    }

    pub fn medians_strictly_decrease(&self) -> bool {
        self.window_medians().windows(2).all(|w| w[1] < w[0])
    }
}

struct Split {
    batch: Batch<f32>,
    labels: Vec<usize>,
}

fn accuracy(model: &Model<f32>, s: &Split) -> Result<(f64, f64)> {
    let z = model.logits(&s.batch)?;
    let correct = (0..z.rows())
        .filter(|&r| {
            let row = z.row(r);
            let arg = (0..row.len()).fold(0, |b, k| if row[k] > row[b] { k } else { b });
            arg == s.labels[r]
        })
        .count();
    Ok((model.loss(&s.batch, &s.labels)? as f64, correct as f64 / z.rows().max(1) as f64))
}

pub fn train(ds: &GraphDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    let start = Instant::now();
    let feats = initial_features(ds, cfg.features)?;
    let in_features = feats.first().map_or(1, |f| f.cols());
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = match cfg.fold {
        None => ((0..ds.len()).collect(), Vec::new()),
        Some(k) => {
            let folds = ten_fold_split(&ds.labels, cfg.seed)?;
            let test = folds.get(k).ok_or_else(|| Error::Contract(format!("fold {k} outside 0..10")))?.clone();
            ((0..ds.len()).filter(|i| test.binary_search(i).is_err()).collect(), test)
        }
    };
    // a `gcn(..)` net trains the whole-graph baseline instead
    let base = match cfg.net.kind {
        NetKind::Gcn2 => ModelConfig {
            hops: cfg.hops,
            ..ModelConfig::gcn2(in_features, cfg.width, cfg.layers, cfg.net)
        },
        NetKind::Gcn => ModelConfig::gcn(in_features, cfg.width, cfg.layers),
    };
    let mc = base
    .with_classes(ds.classes)
    .with_seed(cfg.seed);
    let mut model = Model::<f32>::new(mc)?;
    let shape = model.config.clone();
    let split = |idx: &[usize]| -> Result<Split> {
        let gs: Vec<_> = idx.iter().map(|&i| &ds.graphs[i]).collect();
        let fs: Vec<&Tensor<f64>> = idx.iter().map(|&i| &feats[i]).collect();
        Ok(Split {
            batch: shape.prepare(&gs, &fs)?,
            labels: idx.iter().map(|&i| ds.labels[i]).collect(),
        })
    };
    let train_all = split(&train_idx)?;
    let test_all = if test_idx.is_empty() { None } else { Some(split(&test_idx)?) };
    let mut batches = Vec::new();
    let mut order = train_idx.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut adam = AdamState::new(&model.store, cfg.rate);
    let initial_loss = accuracy(&model, &train_all)?.0;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        if cfg.cosine {
            let t = (epoch - 1) as f64 / cfg.epochs as f64;
            adam.rate = cfg.rate * 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
        }
        order.shuffle(&mut rng);
        batches.clear();
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            batches.push(split(chunk)?);
        }
        let mut sum = 0.0;
        for b in &batches {
            model.store.zero_grads();
            let l = model.loss_and_grads(&b.batch, &b.labels)? as f64;
            if !l.is_finite() {
                return Err(Error::Contract(format!("loss diverged ({l}) in epoch {epoch}")));
            }
            sum += l;
            adam.step(&mut model.store)?;
        }
        let (train_loss, train_accuracy) = accuracy(&model, &train_all)?;
        if !train_loss.is_finite() {
            return Err(Error::Contract(format!("training loss diverged ({train_loss}) after epoch {epoch}")));
        }
        let test_accuracy = test_all.as_ref().map(|t| accuracy(&model, t).map(|x| x.1)).transpose()?;
        log::info!("epoch {epoch}: loss {train_loss:.4}, train acc {train_accuracy:.3}");
        epochs.push(EpochRow {
            epoch,
            batch_loss: sum / batches.len().max(1) as f64,
            train_loss,
            train_accuracy,
            test_accuracy,
        });
    }
    if let Some(path) = &cfg.checkpoint {
        save_checkpoint(path, &model.store)?;
    }
    Ok(TrainReport {
        dataset: ds.name.clone(),
        train_graphs: train_idx.len(),
        test_graphs: test_idx.len(),
        parameters: model.store.numel(),
        initial_loss,
        epochs,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ConcreteGraph;

    /// Triangles with a tail against paths, labelled by kind.
    fn toy() -> GraphDataset {
        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        for n in 4..14 {
            let path: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
            let mut tri = path.clone();
            tri.push((0, 2));
            graphs.push(ConcreteGraph::undirected_n(n, path).unwrap());
            graphs.push(ConcreteGraph::undirected_n(n, tri).unwrap());
            labels.extend([0, 1]);
        }
        GraphDataset {
            name: "toy".into(),
            original_ids: graphs.iter().map(|g| (0..g.node_count()).collect()).collect(),
            graphs,
            labels,
            classes: 2,
            node_labels: None,
        }
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            layers: 2,
            width: 8,
            net: "gcn2(layers=2, hidden=8)".parse().unwrap(),
            epochs: 3,
            rate: 1e-2,
            batch_size: 4,
            features: FeatureMode::Degree,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn deterministic_and_learning() {
        let ds = toy();
        let a = train(&ds, &cfg()).unwrap();
        let b = train(&ds, &cfg()).unwrap();
        assert_eq!(a.epochs, b.epochs);
        assert!(a.epochs[0].train_loss < a.initial_loss);
        let c = train(&ds, &TrainConfig { fold: Some(0), seed: 1, ..cfg() }).unwrap();
        assert_eq!(c.test_graphs, 2);
        assert!(c.epochs[0].test_accuracy.is_some());
    }

    #[test]
    fn checkpoint_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        train(&toy(), &TrainConfig { epochs: 1, checkpoint: Some(path.clone()), ..cfg() }).unwrap();
        let store = crate::nn::load_checkpoint::<f32>(&path).unwrap();
        assert!(!store.is_empty());
    }

    #[test]
    fn window_medians() {
        let epochs = (0..20)
            .map(|e| EpochRow {
                epoch: e + 1,
                batch_loss: 0.0,
                train_loss: 1.0 / (e + 1) as f64,
                train_accuracy: 0.0,
                test_accuracy: None,
            })
            .collect();
        let r = TrainReport {
            dataset: String::new(),
            train_graphs: 0,
            test_graphs: 0,
            parameters: 0,
            initial_loss: 1.0,
            epochs,
            seconds: 0.0,
        };
        assert_eq!(r.window_medians().len(), 2);
        assert!(r.medians_strictly_decrease());
    }
}
