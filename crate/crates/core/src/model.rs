//! Graph-level models: a stack of GCN² NGN layers and the plain GCN
//! baseline, each mean-pooled into a graph embedding with an optional
//! linear classification head.
//!
//! Both models take per-node trivial features. The GCN² model lifts them to
//! the standard representation by copying node `u`'s features into every
//! block coordinate that refers to `u`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConcreteGraph;
use crate::message::{gcn2_layer_eager, message_rows_gcn, Eager, Gcn2Plan, GcnMessageNet, GcnStack, NetKind, NetSpec, SlotLayout, Taped};
use crate::nn::{glorot_uniform, ParamStore, Real, Sparse, Tape, Tensor, Var};

/// Embedded rows per eager chunk.
const CHUNK_ROWS: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Which model: `gcn2` stacks NGN layers, `gcn` is the baseline.
    pub kind: NetKind,
    pub in_features: usize,
    /// Channels per NGN (or GCN) layer.
    pub width: usize,
    pub layers: usize,
    /// Message network for `gcn2` models.
    pub net: NetSpec,
    pub hops: usize,
    /// Head output size; `None` for embedding-only models.
    pub classes: Option<usize>,
    pub seed: u64,
}

impl ModelConfig {
    pub fn gcn2(in_features: usize, width: usize, layers: usize, net: NetSpec) -> Self {
        ModelConfig {
            kind: NetKind::Gcn2,
            in_features,
            width,
            layers,
            net,
            hops: 1,
            classes: None,
            seed: 0,
        }
    }

    pub fn gcn(in_features: usize, width: usize, layers: usize) -> Self {
        ModelConfig {
            kind: NetKind::Gcn,
            net: NetSpec {
                kind: NetKind::Gcn,
                layers,
                hidden: width,
            },
            ..Self::gcn2(in_features, width, layers, NetSpec::default())
        }
    }

    pub fn with_classes(mut self, classes: usize) -> Self {
        self.classes = Some(classes);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Builds the batch operators for `graphs` with per-node features.
    pub fn prepare<T: Real>(&self, graphs: &[&ConcreteGraph], features: &[&Tensor<f64>]) -> Result<Batch<T>> {
        if graphs.len() != features.len() {
            return Err(Error::Shape(format!("{} graphs, {} feature tables", graphs.len(), features.len())));
        }
        let mut data = Vec::new();
        for (g, f) in graphs.iter().zip(features) {
            if f.rows() != g.node_count() || f.cols() != self.in_features {
                return Err(Error::Shape(format!(
                    "features {:?} for {} nodes, {} channels expected",
                    f.shape(),
                    g.node_count(),
                    self.in_features
                )));
            }
            data.extend(f.data().iter().map(|&v| T::from_f64(v)));
        }
        let nodes: usize = graphs.iter().map(|g| g.node_count()).sum();
        let x = Tensor::new(nodes, self.in_features, data)?;
        let body = match self.kind {
            NetKind::Gcn2 => {
                let layout = SlotLayout::new(graphs, self.hops);
                BatchOps::Gcn2 {
                    plans: Gcn2Plan::chunks(graphs, &layout, CHUNK_ROWS)?,
                    lift: Arc::new(layout.lift_trivial()?),
                    readout: Arc::new(layout.readout()?),
                    layout,
                }
            }
            NetKind::Gcn => {
                let mut agg = Vec::new();
                let mut pool = Vec::new();
                let mut base = 0;
                for (b, g) in graphs.iter().enumerate() {
                    let n = g.node_count();
                    for u in 0..n {
                        let ins = g.in_neighbours(u);
                        let w = T::one() / T::from_f64(ins.len().max(1) as f64);
                        agg.extend(ins.iter().map(|&v| (base + u, base + v, w)));
                        pool.push((b, base + u, T::one() / T::from_f64(n as f64)));
                    }
                    base += n;
                }
                BatchOps::Gcn {
                    agg: Arc::new(Sparse::from_triples(nodes, nodes, agg)?),
                    pool: Arc::new(Sparse::from_triples(graphs.len(), nodes, pool)?),
                }
            }
        };
        Ok(Batch {
            graphs: graphs.len(),
            x,
            body,
        })
    }
}

/// Structure-dependent operators of a batch; independent of the weights.
#[derive(Clone, Debug)]
pub struct Batch<T> {
    pub graphs: usize,
    /// Stacked node features, `nodes × in_features`.
    pub x: Tensor<T>,
    body: BatchOps<T>,
}

#[derive(Clone, Debug)]
enum BatchOps<T> {
    Gcn2 {
        layout: SlotLayout,
        plans: Vec<Gcn2Plan<T>>,
        lift: Arc<Sparse<T>>,
        readout: Arc<Sparse<T>>,
    },
    Gcn {
        agg: Arc<Sparse<T>>,
        pool: Arc<Sparse<T>>,
    },
}

#[derive(Clone, Debug)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub store: ParamStore<T>,
    /// Message networks, one per NGN layer (`gcn2`).
    nets: Vec<GcnMessageNet>,
    /// Node-level stack (`gcn`).
    stack: Option<GcnStack>,
    head: Option<(usize, usize)>,
}

impl<T: Real> Model<T> {
    pub fn new(config: ModelConfig) -> Result<Self> {
        if config.layers == 0 || config.width == 0 || config.in_features == 0 {
            return Err(Error::Contract("layers, width and in_features must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let mut nets = Vec::new();
        let mut stack = None;
        match config.kind {
            NetKind::Gcn2 => {
                let mut c_in = config.in_features;
                for l in 0..config.layers {
                    nets.push(GcnMessageNet::new(&mut store, &format!("ngn{l}"), c_in, config.width, &config.net, &mut rng));
                    c_in = config.width;
                }
            }
            NetKind::Gcn => {
                let mut dims = vec![config.in_features];
                dims.extend(std::iter::repeat_n(config.width, config.layers));
                stack = Some(GcnStack::new(&mut store, "gcn", dims, &mut rng));
            }
        }
        let head = config.classes.map(|k| {
            (
                store.add("head.w", glorot_uniform(config.width, k, &mut rng)),
                store.add("head.b", Tensor::zeros(1, k)),
            )
        });
        Ok(Model {
            config,
            store,
            nets,
            stack,
            head,
        })
    }

    pub fn nets(&self) -> &[GcnMessageNet] {
        &self.nets
    }

    /// Builds the batch operators for `graphs` with per-node features.
    pub fn prepare(&self, graphs: &[&ConcreteGraph], features: &[&Tensor<f64>]) -> Result<Batch<T>> {
        self.config.prepare(graphs, features)
    }

    /// Final-layer node features: standard blocks as slot rows (`gcn2`) or
    /// one row per node (`gcn`).
    pub fn node_features(&self, batch: &Batch<T>) -> Result<Tensor<T>> {
        let mut e = Eager { store: &self.store };
        match &batch.body {
            BatchOps::Gcn2 { plans, lift, .. } => {
                let mut h = lift.apply(&batch.x)?;
                for (l, net) in self.nets.iter().enumerate() {
                    h = gcn2_layer_eager(&self.store, net, plans, &h)?;
                    if l + 1 < self.nets.len() {
                        h.data_mut().iter_mut().for_each(|v| *v = v.max(T::zero()));
                    }
                }
                Ok(h)
            }
            BatchOps::Gcn { agg, .. } => message_rows_gcn(&mut e, agg, self.stack.as_ref().expect("gcn stack"), &batch.x),
        }
    }

    /// Mean-pooled graph embeddings, `graphs × width`.
    pub fn embed(&self, batch: &Batch<T>) -> Result<Tensor<T>> {
        let h = self.node_features(batch)?;
        match &batch.body {
            BatchOps::Gcn2 { readout, .. } => readout.apply(&h),
            BatchOps::Gcn { pool, .. } => pool.apply(&h),
        }
    }

    /// Class logits through the head, evaluated eagerly.
    pub fn logits(&self, batch: &Batch<T>) -> Result<Tensor<T>> {
        let (w, b) = self.head.ok_or_else(|| Error::Contract("model has no classification head".into()))?;
        let mut z = self.embed(batch)?.matmul(self.store.get(w))?;
        let bias = self.store.get(b).data().to_vec();
        let k = bias.len();
        for r in z.data_mut().chunks_mut(k) {
            r.iter_mut().zip(&bias).for_each(|(p, &q)| *p = *p + q);
        }
        Ok(z)
    }

    /// Records the logits on `tape`.
    pub fn logits_tape(&self, tape: &mut Tape<T>, batch: &Batch<T>) -> Result<Var> {
        let (w, b) = self.head.ok_or_else(|| Error::Contract("model has no classification head".into()))?;
        let x = tape.leaf(batch.x.clone());
        let emb = match &batch.body {
            BatchOps::Gcn2 { plans, lift, readout, .. } => {
                let mut h = tape.sparse(lift, x)?;
                for (l, net) in self.nets.iter().enumerate() {
                    let mut e = Taped::new(tape, &self.store);
                    let mut acc: Option<Var> = None;
                    for plan in plans {
                        let m = crate::message::message_rows(&mut e, plan, net, &h)?;
                        let s = e.tape.sparse(&plan.scatter, m)?;
                        acc = Some(match acc {
                            Some(a) => e.tape.add(a, s)?,
                            None => s,
                        });
                    }
                    h = acc.expect("at least one plan");
                    if l + 1 < self.nets.len() {
                        h = tape.relu(h);
                    }
                }
                tape.sparse(readout, h)?
            }
            BatchOps::Gcn { agg, pool } => {
                let mut e = Taped::new(tape, &self.store);
                let h = message_rows_gcn(&mut e, agg, self.stack.as_ref().expect("gcn stack"), &x)?;
                tape.sparse(pool, h)?
            }
        };
        let wv = tape.param(&self.store, w);
        let bv = tape.param(&self.store, b);
        let z = tape.matmul(emb, wv)?;
        tape.add_row(z, bv)
    }

    /// Mean cross-entropy loss with gradients accumulated into the store.
    pub fn loss_and_grads(&mut self, batch: &Batch<T>, labels: &[usize]) -> Result<T> {
        let mut tape = Tape::new();
        let z = self.logits_tape(&mut tape, batch)?;
        let loss = tape.softmax_cross_entropy(z, labels)?;
        let grads = tape.backward(loss)?;
        grads.accumulate_into(&mut self.store);
        Ok(tape.value(loss).at(0, 0))
    }

    /// Mean cross-entropy loss without gradients.
    pub fn loss(&self, batch: &Batch<T>, labels: &[usize]) -> Result<T> {
        let z = self.logits(batch)?;
        let mut tape = Tape::new();
        let zv = tape.leaf(z);
        let l = tape.softmax_cross_entropy(zv, labels)?;
        Ok(tape.value(l).at(0, 0))
    }

    /// Number of slot rows of a GCN² batch (total standard dimension).
    pub fn slots(batch: &Batch<T>) -> Option<usize> {
        match &batch.body {
            BatchOps::Gcn2 { layout, .. } => Some(layout.slots),
            BatchOps::Gcn { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::relabel;

    fn graphs() -> Vec<ConcreteGraph> {
        vec![
            ConcreteGraph::undirected_n(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap(),
            ConcreteGraph::undirected_n(4, [(0, 1), (1, 2), (2, 3)]).unwrap(),
            ConcreteGraph::new(0..3, []).unwrap(),
        ]
    }

    fn degree(g: &ConcreteGraph) -> Tensor<f64> {
        Tensor::from_fn(g.node_count(), 2, |r, c| if c == 0 { g.undirected_degree(r) as f64 } else { 1.0 })
    }

    #[test]
    fn tape_and_eager_agree() {
        let gs = graphs();
        let fs: Vec<Tensor<f64>> = gs.iter().map(degree).collect();
        let (gr, fr): (Vec<&ConcreteGraph>, Vec<&Tensor<f64>>) = (gs.iter().collect(), fs.iter().collect());
        for cfg in [
            ModelConfig::gcn2(2, 4, 2, "gcn2(layers=2, hidden=3)".parse().unwrap()),
            ModelConfig::gcn(2, 4, 3),
        ] {
            let m = Model::<f64>::new(cfg.with_classes(3).with_seed(5)).unwrap();
            let batch = m.prepare(&gr, &fr).unwrap();
            let eager = m.logits(&batch).unwrap();
            let mut tape = Tape::new();
            let z = m.logits_tape(&mut tape, &batch).unwrap();
            assert!(tape.value(z).max_abs_diff(&eager) < 1e-12);
            assert_eq!(eager.shape(), [3, 3]);
        }
    }

    #[test]
    fn batching_matches_single_graphs() {
        let gs = graphs();
        let fs: Vec<Tensor<f64>> = gs.iter().map(degree).collect();
        let m = Model::<f64>::new(ModelConfig::gcn2(2, 4, 2, "gcn2(layers=2, hidden=3)".parse().unwrap())).unwrap();
        let all = m.embed(&m.prepare(&gs.iter().collect::<Vec<_>>(), &fs.iter().collect::<Vec<_>>()).unwrap()).unwrap();
        for (i, (g, f)) in gs.iter().zip(&fs).enumerate() {
            let one = m.embed(&m.prepare(&[g], &[f]).unwrap()).unwrap();
            for k in 0..4 {
                assert!((one.at(0, k) - all.at(i, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embeddings_are_invariant_under_relabeling() {
        let g = Arc::new(graphs().remove(0));
        let f = degree(&g);
        let (h, phi) = relabel(&g, &[7, 3, 11, 0, 5]).unwrap();
        let imap = phi.index_map().unwrap();
        let mut f2 = Tensor::zeros(5, 2);
        for u in 0..5 {
            f2.row_mut(imap[u]).copy_from_slice(f.row(u));
        }
        for cfg in [ModelConfig::gcn2(2, 3, 2, NetSpec::default()), ModelConfig::gcn(2, 3, 2)] {
            let m = Model::<f64>::new(cfg).unwrap();
            let a = m.embed(&m.prepare(&[&g], &[&f]).unwrap()).unwrap();
            let b = m.embed(&m.prepare(&[&h], &[&f2]).unwrap()).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let gs = graphs();
        let m = Model::<f32>::new(ModelConfig::gcn(2, 3, 1)).unwrap();
        assert!(m.prepare(&[&gs[0]], &[&Tensor::zeros(4, 2)]).is_err());
        let b = m.prepare(&[&gs[0]], &[&degree(&gs[0])]).unwrap();
        assert!(matches!(m.logits(&b), Err(Error::Contract(_))));
        assert!(Model::<f32>::new(ModelConfig::gcn(2, 0, 1)).is_err());
    }
}
