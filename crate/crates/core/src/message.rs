//! GCN²: the message along `(p, q)` is an invariant graph network run on
//! the edge neighbourhood `G_pq`.
//!
//! * embed: node `u` of `G_pq` gets the row of `v_p` belonging to `u` when
//!   `u ∈ G_p` (zero otherwise), followed by two marker channels that are 1
//!   at `p` and at `q` respectively;
//! * each GCN layer computes
//!   `out_u = σ(f_u W_self + mean_{(w,u) ∈ E(G_pq)} f_w W_neigh + b)`, the
//!   mean being empty (zero) for nodes without in-neighbours, with `σ` the
//!   rectifier on every layer but the last;
//! * project: keep the rows of the nodes of `G_q`, ascending by id.
//!
//! Messages are summed per receiving node. The reference functions here
//! work one edge at a time; [`Gcn2Plan`] batches the same computation over
//! many edges with sparse gather/aggregate/scatter operators.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConcreteGraph;
use crate::neighbourhood::{ball, EdgeNeighbourhood, NeighbourhoodAssignment};
use crate::nn::{glorot_uniform, ParamStore, Real, Sparse, Tape, Tensor, Var};
use crate::rep::{GlobalFeature, RepSpec};

/// Number of marker channels appended by the embedding.
pub const MARKERS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    /// Message network on edge neighbourhoods.
    Gcn2,
    /// Plain invariant message passing on the whole graph.
    Gcn,
}

/// Architecture text such as `gcn2(layers=2, hidden=64)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NetSpec {
    pub kind: NetKind,
    pub layers: usize,
    pub hidden: usize,
}

impl Default for NetSpec {
    fn default() -> Self {
        NetSpec {
            kind: NetKind::Gcn2,
            layers: 2,
            hidden: 64,
        }
    }
}

impl fmt::Display for NetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            NetKind::Gcn2 => "gcn2",
            NetKind::Gcn => "gcn",
        };
        write!(f, "{name}(layers={}, hidden={})", self.layers, self.hidden)
    }
}

impl FromStr for NetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::NetSpec(s.to_string());
        let t = s.trim();
        let (name, rest) = t.split_once('(').unwrap_or((t, ")"));
        let kind = match name.trim() {
            "gcn2" => NetKind::Gcn2,
            "gcn" => NetKind::Gcn,
            _ => return Err(bad()),
        };
        let body = rest.strip_suffix(')').ok_or_else(bad)?;
        let mut spec = NetSpec { kind, ..NetSpec::default() };
        for kv in body.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: usize = v.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "layers" => spec.layers = v,
                "hidden" => spec.hidden = v,
                _ => return Err(bad()),
            }
        }
        if spec.layers == 0 || spec.hidden == 0 {
            return Err(bad());
        }
        Ok(spec)
    }
}

impl TryFrom<String> for NetSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NetSpec> for String {
    fn from(n: NetSpec) -> String {
        n.to_string()
    }
}

/// A chain of GCN layers whose weights live in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcnStack {
    /// Widths `d_0 … d_L`.
    pub dims: Vec<usize>,
    /// `(W_self, W_neigh, b)` store indices per layer.
    pub params: Vec<(usize, usize, usize)>,
}

impl GcnStack {
    pub fn new<T: Real>(store: &mut ParamStore<T>, prefix: &str, dims: Vec<usize>, rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "a stack needs at least one layer");
        let params = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                (
                    store.add(format!("{prefix}.{l}.w_self"), glorot_uniform(w[0], w[1], rng)),
                    store.add(format!("{prefix}.{l}.w_neigh"), glorot_uniform(w[0], w[1], rng)),
                    store.add(format!("{prefix}.{l}.bias"), Tensor::zeros(1, w[1])),
                )
            })
            .collect();
        GcnStack { dims, params }
    }

    pub fn layers(&self) -> usize {
        self.params.len()
    }

    pub fn in_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.dims.last().expect("non-empty")
    }
}

/// Message network of one NGN layer `standard*c_in → standard*c_out`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcnMessageNet {
    pub c_in: usize,
    pub c_out: usize,
    pub stack: GcnStack,
}

impl GcnMessageNet {
    pub fn new<T: Real>(store: &mut ParamStore<T>, prefix: &str, c_in: usize, c_out: usize, net: &NetSpec, rng: &mut impl Rng) -> Self {
        let mut dims = vec![c_in + MARKERS];
        dims.extend(std::iter::repeat_n(net.hidden, net.layers - 1));
        dims.push(c_out);
        GcnMessageNet {
            c_in,
            c_out,
            stack: GcnStack::new(store, prefix, dims, rng),
        }
    }

    /// Sets the marker rows of the first layer's weights to zero.
    pub fn zero_marker_weights<T: Real>(&self, store: &mut ParamStore<T>) {
        let (ws, wn, _) = self.stack.params[0];
        for idx in [ws, wn] {
            let t = store.get_mut(idx);
            for r in self.c_in..self.c_in + MARKERS {
                t.row_mut(r).iter_mut().for_each(|x| *x = T::zero());
            }
        }
    }
}

/// Per-node features on an edge neighbourhood, data channels then markers.
#[derive(Clone, Debug)]
pub struct EdgeGraphFeature<T> {
    pub nb: EdgeNeighbourhood,
    /// `|G_pq| × channels`, rows in ascending node id.
    pub features: Tensor<T>,
}

/// Embeds `v_p` (`|G_p| × c` rows in ascending id) into `G_pq`.
pub fn embed_alpha<T: Real>(vp: &Tensor<T>, nb: &EdgeNeighbourhood, a: &NeighbourhoodAssignment) -> Result<EdgeGraphFeature<T>> {
    let g = &nb.graph;
    let (p, q) = nb.marked;
    let ip = g.require_index(p)?;
    let iq = g.require_index(q)?;
    let bp = ball(g, &[ip], a.hops);
    if vp.rows() != bp.len() {
        return Err(Error::Shape(format!("v_p has {} rows, G_p has {} nodes", vp.rows(), bp.len())));
    }
    let c = vp.cols();
    let mut f = Tensor::zeros(g.node_count(), c + MARKERS);
    for (k, &u) in bp.iter().enumerate() {
        f.row_mut(u)[..c].copy_from_slice(vp.row(k));
    }
    f.row_mut(ip)[c] = T::one();
    f.row_mut(iq)[c + 1] = T::one();
    Ok(EdgeGraphFeature { nb: nb.clone(), features: f })
}

/// One GCN layer on a graph whose node order matches the rows of `f`.
pub fn gcn_layer_forward<T: Real>(
    store: &ParamStore<T>,
    params: (usize, usize, usize),
    g: &ConcreteGraph,
    f: &Tensor<T>,
    relu: bool,
) -> Result<Tensor<T>> {
    let (ws, wn, b) = (store.get(params.0), store.get(params.1), store.get(params.2));
    if f.rows() != g.node_count() {
        return Err(Error::Shape(format!("{} feature rows for {} nodes", f.rows(), g.node_count())));
    }
    let mut agg = Tensor::zeros(f.rows(), f.cols());
    for u in 0..g.node_count() {
        let ins = g.in_neighbours(u);
        if ins.is_empty() {
            continue;
        }
        let d = T::from_f64(ins.len() as f64);
        for &w in ins {
            let src = f.row(w).to_vec();
            agg.row_mut(u).iter_mut().zip(src).for_each(|(x, y)| *x = *x + y / d);
        }
    }
    let mut out = f.matmul(ws)?;
    let nb = agg.matmul(wn)?;
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        for (k, x) in row.iter_mut().enumerate() {
            *x = *x + nb.at(r, k) + b.at(0, k);
            if relu && *x < T::zero() {
                *x = T::zero();
            }
        }
    }
    Ok(out)
}

/// Runs a stack on `g` with the rectifier between layers.
pub fn gcn_stack_forward<T: Real>(store: &ParamStore<T>, stack: &GcnStack, g: &ConcreteGraph, f: &Tensor<T>) -> Result<Tensor<T>> {
    let mut h = f.clone();
    for (l, &p) in stack.params.iter().enumerate() {
        h = gcn_layer_forward(store, p, g, &h, l + 1 < stack.layers())?;
    }
    Ok(h)
}

/// The message `β(Ψ(α(v_p)))`: `|G_q| × c_out` rows in ascending id.
pub fn gcn2_message<T: Real>(
    store: &ParamStore<T>,
    net: &GcnMessageNet,
    vp: &Tensor<T>,
    nb: &EdgeNeighbourhood,
    a: &NeighbourhoodAssignment,
) -> Result<Tensor<T>> {
    let f = embed_alpha(vp, nb, a)?;
    let h = gcn_stack_forward(store, &net.stack, &nb.graph, &f.features)?;
    let iq = nb.graph.require_index(nb.marked.1)?;
    let bq = ball(&nb.graph, &[iq], a.hops);
    let mut out = Tensor::zeros(bq.len(), h.cols());
    for (k, &u) in bq.iter().enumerate() {
        out.row_mut(k).copy_from_slice(h.row(u));
    }
    Ok(out)
}

/// Reference NGN layer: sums [`gcn2_message`] over in-edges, one edge at a
/// time.
pub fn ngn_gcn2_forward<T: Real>(
    store: &ParamStore<T>,
    net: &GcnMessageNet,
    g: &ConcreteGraph,
    v: &GlobalFeature<T>,
    a: &NeighbourhoodAssignment,
) -> Result<GlobalFeature<T>> {
    v.check(g, &RepSpec::standard(net.c_in), a)?;
    let mut out = GlobalFeature::zeros(g, &RepSpec::standard(net.c_out), a);
    for (p, q) in g.edges() {
        let nb = crate::neighbourhood::edge_neighbourhood(g, p, q, a)?;
        let block = v.block(p).expect("checked");
        let vp = Tensor::new(block.len() / net.c_in, net.c_in, block.to_vec())?;
        let m = gcn2_message(store, net, &vp, &nb, a)?;
        let iq = g.index_of(q).expect("endpoint");
        out.blocks_mut()[iq].iter_mut().zip(m.data()).for_each(|(x, &y)| *x = *x + y);
    }
    Ok(out)
}

/// Row layout of standard features over a batch of graphs: node `i` of
/// graph `b` owns rows `offset[b][i] .. offset[b][i] + |G_i|`.
#[derive(Clone, Debug)]
pub struct SlotLayout {
    pub hops: usize,
    /// Per graph, per node: the ball (positions, ascending).
    pub balls: Vec<Vec<Vec<usize>>>,
    pub offsets: Vec<Vec<usize>>,
    /// First global node row of each graph.
    pub node_offsets: Vec<usize>,
    pub slots: usize,
    pub nodes: usize,
}

impl SlotLayout {
    pub fn new(graphs: &[&ConcreteGraph], hops: usize) -> Self {
        let mut balls = Vec::with_capacity(graphs.len());
        let mut offsets = Vec::with_capacity(graphs.len());
        let mut node_offsets = Vec::with_capacity(graphs.len());
        let (mut slots, mut nodes) = (0, 0);
        for g in graphs {
            node_offsets.push(nodes);
            nodes += g.node_count();
            let b: Vec<Vec<usize>> = (0..g.node_count()).map(|i| ball(g, &[i], hops)).collect();
            let mut o = Vec::with_capacity(b.len());
            for x in &b {
                o.push(slots);
                slots += x.len();
            }
            balls.push(b);
            offsets.push(o);
        }
        SlotLayout {
            hops,
            balls,
            offsets,
            node_offsets,
            slots,
            nodes,
        }
    }

    /// `slots × nodes` gather lifting per-node (trivial) features to
    /// standard ones: row `(p, u)` copies the features of `u`.
    pub fn lift_trivial<T: Real>(&self) -> Result<Sparse<T>> {
        let mut idx = Vec::with_capacity(self.slots);
        for (b, balls) in self.balls.iter().enumerate() {
            for bl in balls {
                idx.extend(bl.iter().map(|&u| Some(self.node_offsets[b] + u)));
            }
        }
        Sparse::gather(&idx, self.nodes)
    }

    /// `graphs × slots`: mean over each node's rows, then over the nodes of
    /// each graph.
    pub fn readout<T: Real>(&self) -> Result<Sparse<T>> {
        let mut triples = Vec::with_capacity(self.slots);
        for (b, balls) in self.balls.iter().enumerate() {
            let n = balls.len() as f64;
            for (i, bl) in balls.iter().enumerate() {
                let w = T::from_f64(1.0 / (n * bl.len() as f64));
                triples.extend((0..bl.len()).map(|k| (b, self.offsets[b][i] + k, w)));
            }
        }
        Sparse::from_triples(self.balls.len(), self.slots, triples)
    }


    /// Splits slot rows back into per-node blocks of graph `b`.
    pub fn blocks<T: Real>(&self, b: usize, x: &Tensor<T>) -> Vec<Vec<T>> {
        self.offsets[b]
            .iter()
            .zip(&self.balls[b])
            .map(|(&o, bl)| x.data()[o * x.cols()..(o + bl.len()) * x.cols()].to_vec())
            .collect()
    }
}

/// Sparse operators for the messages of a set of edges over a
/// [`SlotLayout`].
#[derive(Clone, Debug)]
pub struct Gcn2Plan<T> {
    /// `instances × slots`: data part of the embedding.
    pub gather: Arc<Sparse<T>>,
    /// `instances × 2`.
    pub markers: Tensor<T>,
    /// `instances × instances`: in-neighbour mean within each `G_pq`.
    pub agg: Arc<Sparse<T>>,
    /// `outputs × instances`: rows of `G_q` nodes.
    pub select: Arc<Sparse<T>>,
    /// `select · agg`.
    pub agg_select: Arc<Sparse<T>>,
    /// `slots × outputs`: sums messages into the receiving blocks.
    pub scatter: Arc<Sparse<T>>,
    pub edges: usize,
}

impl<T: Real> Gcn2Plan<T> {
    /// Plan for the listed edges (`(graph, p index, q index)`).
    pub fn build(graphs: &[&ConcreteGraph], layout: &SlotLayout, edges: &[(usize, usize, usize)]) -> Result<Self> {
        let mut gather_idx: Vec<Option<usize>> = Vec::new();
        let mut markers: Vec<T> = Vec::new();
        let mut agg = Vec::new();
        let mut select = Vec::new();
        let mut agg_select = Vec::new();
        let mut scatter = Vec::new();
        let mut local = Vec::new();
        for &(b, p, q) in edges {
            let g = graphs[b];
            let bpq = ball(g, &[p, q], layout.hops);
            let bp = &layout.balls[b][p];
            let bq = &layout.balls[b][q];
            let base = gather_idx.len();
            local.clear();
            local.resize(g.node_count(), usize::MAX);
            for (j, &u) in bpq.iter().enumerate() {
                local[u] = base + j;
            }
            for &u in &bpq {
                gather_idx.push(bp.binary_search(&u).ok().map(|k| layout.offsets[b][p] + k));
                markers.push(if u == p { T::one() } else { T::zero() });
                markers.push(if u == q { T::one() } else { T::zero() });
            }
            for (j, &u) in bpq.iter().enumerate() {
                let ins: Vec<usize> = g.in_neighbours(u).iter().filter(|&&w| local[w] != usize::MAX).map(|&w| local[w]).collect();
                let w = T::one() / T::from_f64(ins.len().max(1) as f64);
                let row = base + j;
                agg.extend(ins.iter().map(|&c| (row, c, w)));
                if let Ok(k) = bq.binary_search(&u) {
                    let out = select.len();
                    select.push((out, row, T::one()));
                    agg_select.extend(ins.iter().map(|&c| (out, c, w)));
                    scatter.push((layout.offsets[b][q] + k, out, T::one()));
                }
            }
        }
        let n = gather_idx.len();
        let outs = select.len();
        Ok(Gcn2Plan {
            gather: Arc::new(Sparse::gather(&gather_idx, layout.slots)?),
            markers: Tensor::new(n, MARKERS, markers)?,
            agg: Arc::new(Sparse::from_triples(n, n, agg)?),
            select: Arc::new(Sparse::from_triples(outs, n, select)?),
            agg_select: Arc::new(Sparse::from_triples(outs, n, agg_select)?),
            scatter: Arc::new(Sparse::from_triples(layout.slots, outs, scatter)?),
            edges: edges.len(),
        })
    }

    /// Plans covering every edge, each holding at most about
    /// `max_instances` embedded rows.
    pub fn chunks(graphs: &[&ConcreteGraph], layout: &SlotLayout, max_instances: usize) -> Result<Vec<Self>> {
        let mut plans = Vec::new();
        let mut batch = Vec::new();
        let mut rows = 0;
        for (b, g) in graphs.iter().enumerate() {
            for (p, q) in g.edge_indices() {
                // |G_pq| ≤ |G_p| + |G_q|
                rows += layout.balls[b][p].len() + layout.balls[b][q].len();
                batch.push((b, p, q));
                if rows >= max_instances {
                    plans.push(Self::build(graphs, layout, &batch)?);
                    batch.clear();
                    rows = 0;
                }
            }
        }
        if !batch.is_empty() || plans.is_empty() {
            plans.push(Self::build(graphs, layout, &batch)?);
        }
        Ok(plans)
    }

    pub fn instances(&self) -> usize {
        self.markers.rows()
    }
}

/// Operations shared by the eager forward and the tape.
pub(crate) trait Exec<T: Real> {
    type V;
    fn sparse(&mut self, s: &Arc<Sparse<T>>, x: &Self::V) -> Result<Self::V>;
    fn constant(&mut self, t: &Tensor<T>) -> Self::V;
    fn concat(&mut self, a: &Self::V, b: &Self::V) -> Result<Self::V>;
    fn linear(&mut self, x: &Self::V, w: usize) -> Result<Self::V>;
    fn add(&mut self, a: Self::V, b: Self::V) -> Result<Self::V>;
    fn bias(&mut self, x: Self::V, b: usize) -> Result<Self::V>;
    fn relu(&mut self, x: Self::V) -> Self::V;
}

/// Direct evaluation on tensors.
pub(crate) struct Eager<'a, T> {
    pub store: &'a ParamStore<T>,
}

impl<T: Real> Exec<T> for Eager<'_, T> {
    type V = Tensor<T>;

    fn sparse(&mut self, s: &Arc<Sparse<T>>, x: &Tensor<T>) -> Result<Tensor<T>> {
        s.apply(x)
    }

    fn constant(&mut self, t: &Tensor<T>) -> Tensor<T> {
        t.clone()
    }

    fn concat(&mut self, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
        if a.rows() != b.rows() {
            return Err(Error::Shape("concat rows differ".into()));
        }
        let mut data = Vec::with_capacity(a.len() + b.len());
        for r in 0..a.rows() {
            data.extend_from_slice(a.row(r));
            data.extend_from_slice(b.row(r));
        }
        Tensor::new(a.rows(), a.cols() + b.cols(), data)
    }

    fn linear(&mut self, x: &Tensor<T>, w: usize) -> Result<Tensor<T>> {
        x.matmul(self.store.get(w))
    }

    fn add(&mut self, mut a: Tensor<T>, b: Tensor<T>) -> Result<Tensor<T>> {
        if a.shape() != b.shape() {
            return Err(Error::Shape("add shapes differ".into()));
        }
        a.data_mut().iter_mut().zip(b.data()).for_each(|(x, &y)| *x = *x + y);
        Ok(a)
    }

    fn bias(&mut self, mut x: Tensor<T>, b: usize) -> Result<Tensor<T>> {
        let b = self.store.get(b);
        let w = x.cols();
        if b.cols() != w {
            return Err(Error::Shape("bias width".into()));
        }
        if w > 0 {
            for r in x.data_mut().chunks_mut(w) {
                r.iter_mut().zip(b.data()).for_each(|(p, &q)| *p = *p + q);
            }
        }
        Ok(x)
    }

    fn relu(&mut self, mut x: Tensor<T>) -> Tensor<T> {
        x.data_mut().iter_mut().for_each(|v| {
            if *v < T::zero() {
                *v = T::zero()
            }
        });
        x
    }
}

/// Recording on a tape; parameters are entered once per tape.
pub(crate) struct Taped<'a, T: Real> {
    pub tape: &'a mut Tape<T>,
    pub store: &'a ParamStore<T>,
    vars: std::collections::HashMap<usize, Var>,
}

impl<'a, T: Real> Taped<'a, T> {
    pub fn new(tape: &'a mut Tape<T>, store: &'a ParamStore<T>) -> Self {
        Taped {
            tape,
            store,
            vars: Default::default(),
        }
    }

    pub fn param(&mut self, i: usize) -> Var {
        if let Some(&v) = self.vars.get(&i) {
            return v;
        }
        let v = self.tape.param(self.store, i);
        self.vars.insert(i, v);
        v
    }
}

impl<T: Real> Exec<T> for Taped<'_, T> {
    type V = Var;

    fn sparse(&mut self, s: &Arc<Sparse<T>>, x: &Var) -> Result<Var> {
        self.tape.sparse(s, *x)
    }

    fn constant(&mut self, t: &Tensor<T>) -> Var {
        self.tape.leaf(t.clone())
    }

    fn concat(&mut self, a: &Var, b: &Var) -> Result<Var> {
        self.tape.concat_cols(*a, *b)
    }

    fn linear(&mut self, x: &Var, w: usize) -> Result<Var> {
        let w = self.param(w);
        self.tape.matmul(*x, w)
    }

    fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.tape.add(a, b)
    }

    fn bias(&mut self, x: Var, b: usize) -> Result<Var> {
        let b = self.param(b);
        self.tape.add_row(x, b)
    }

    fn relu(&mut self, x: Var) -> Var {
        self.tape.relu(x)
    }
}

/// Message rows (`outputs × c_out`) of a plan for slot features `x`.
pub(crate) fn message_rows<T: Real, E: Exec<T>>(e: &mut E, plan: &Gcn2Plan<T>, net: &GcnMessageNet, x: &E::V) -> Result<E::V> {
    let data = e.sparse(&plan.gather, x)?;
    let marks = e.constant(&plan.markers);
    let mut f = e.concat(&data, &marks)?;
    let last = net.stack.layers() - 1;
    for (l, &(ws, wn, b)) in net.stack.params.iter().enumerate() {
        if l < last {
            let a = e.sparse(&plan.agg, &f)?;
            let s = e.linear(&f, ws)?;
            let n = e.linear(&a, wn)?;
            let h = e.add(s, n)?;
            let h = e.bias(h, b)?;
            f = e.relu(h);
        } else {
            let sel = e.sparse(&plan.select, &f)?;
            let a = e.sparse(&plan.agg_select, &f)?;
            let s = e.linear(&sel, ws)?;
            let n = e.linear(&a, wn)?;
            let h = e.add(s, n)?;
            f = e.bias(h, b)?;
        }
    }
    Ok(f)
}

/// Node-level GCN stack on a whole batch, with `agg` the in-neighbour mean.
pub(crate) fn message_rows_gcn<T: Real, E: Exec<T>>(e: &mut E, agg: &Arc<Sparse<T>>, stack: &GcnStack, x: &E::V) -> Result<E::V> {
    let mut cur: Option<E::V> = None;
    let last = stack.layers() - 1;
    for (l, &(ws, wn, b)) in stack.params.iter().enumerate() {
        let f = cur.as_ref().unwrap_or(x);
        let a = e.sparse(agg, f)?;
        let s = e.linear(f, ws)?;
        let n = e.linear(&a, wn)?;
        let h = e.add(s, n)?;
        let h = e.bias(h, b)?;
        cur = Some(if l < last { e.relu(h) } else { h });
    }
    Ok(cur.expect("at least one layer"))
}

/// One GCN² NGN layer over slot features, eagerly, chunk by chunk.
pub fn gcn2_layer_eager<T: Real>(store: &ParamStore<T>, net: &GcnMessageNet, plans: &[Gcn2Plan<T>], x: &Tensor<T>) -> Result<Tensor<T>> {
    if x.cols() != net.c_in {
        return Err(Error::Shape(format!("{} input channels, layer expects {}", x.cols(), net.c_in)));
    }
    let mut out = Tensor::zeros(x.rows(), net.c_out);
    let mut e = Eager { store };
    for plan in plans {
        let m = message_rows(&mut e, plan, net, x)?;
        let w = net.c_out;
        let acc = out.data_mut();
        for r in 0..plan.scatter.rows() {
            for (c, v) in plan.scatter.row_entries(r) {
                let src = &m.data()[c * w..(c + 1) * w];
                acc[r * w..(r + 1) * w].iter_mut().zip(src).for_each(|(d, &s)| *d = *d + v * s);
            }
        }
    }
    Ok(out)
}

/// One GCN² NGN layer recorded on a tape (single plan).
pub fn gcn2_layer_tape<T: Real>(tape: &mut Tape<T>, store: &ParamStore<T>, net: &GcnMessageNet, plan: &Gcn2Plan<T>, x: Var) -> Result<Var> {
    let mut e = Taped::new(tape, store);
    let m = message_rows(&mut e, plan, net, &x)?;
    e.tape.sparse(&plan.scatter, m)
}

/// Batched NGN layer on one graph's global features.
pub fn ngn_gcn2_forward_batched<T: Real>(
    store: &ParamStore<T>,
    net: &GcnMessageNet,
    g: &ConcreteGraph,
    v: &GlobalFeature<T>,
    a: &NeighbourhoodAssignment,
) -> Result<GlobalFeature<T>> {
    v.check(g, &RepSpec::standard(net.c_in), a)?;
    let layout = SlotLayout::new(&[g], a.hops);
    let plans = Gcn2Plan::chunks(&[g], &layout, 1 << 15)?;
    let x = Tensor::new(layout.slots, net.c_in, v.blocks().iter().flatten().copied().collect())?;
    let y = gcn2_layer_eager(store, net, &plans, &x)?;
    GlobalFeature::new(g, layout.blocks(0, &y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{relabel, GraphIso};
    use crate::neighbourhood::edge_neighbourhood;
    use crate::rep::lift_global;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k1() -> NeighbourhoodAssignment {
        NeighbourhoodAssignment::default()
    }

    #[test]
    fn net_spec_text() {
        let n: NetSpec = "gcn2(layers=2, hidden=64)".parse().unwrap();
        assert_eq!(n, NetSpec::default());
        assert_eq!(n.to_string(), "gcn2(layers=2, hidden=64)");
        assert_eq!("gcn(hidden=8)".parse::<NetSpec>().unwrap().hidden, 8);
        for bad in ["gcn3(layers=2)", "gcn2(layers=0)", "gcn2(depth=2)", "gcn2(layers=2"] {
            assert!(bad.parse::<NetSpec>().is_err(), "{bad}");
        }
    }

    fn sample_graph() -> ConcreteGraph {
        ConcreteGraph::undirected_n(7, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (5, 6), (1, 6)]).unwrap()
    }

    #[test]
    fn embedding_on_full_neighbourhood_and_zero_input() {
        let tri = ConcreteGraph::undirected_n(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let nb = edge_neighbourhood(&tri, 0, 1, &k1()).unwrap();
        let vp = Tensor::from_fn(3, 2, |r, c| (r * 2 + c) as f64 + 1.0);
        let f = embed_alpha(&vp, &nb, &k1()).unwrap().features;
        assert_eq!(f.row(0), &[1.0, 2.0, 1.0, 0.0]);
        assert_eq!(f.row(1), &[3.0, 4.0, 0.0, 1.0]);
        assert_eq!(f.row(2), &[5.0, 6.0, 0.0, 0.0]);
        let z = embed_alpha(&Tensor::<f64>::zeros(3, 2), &nb, &k1()).unwrap().features;
        assert_eq!(z.data().iter().filter(|&&x| x != 0.0).count(), 2);
        assert!(matches!(embed_alpha(&Tensor::<f64>::zeros(2, 2), &nb, &k1()), Err(Error::Shape(_))));
    }

    #[test]
    fn embedding_commutes_with_relabeling() {
        let g = sample_graph();
        let nb = edge_neighbourhood(&g, 2, 3, &k1()).unwrap();
        assert_eq!(nb.graph.node_count(), 6);
        let (h, psi) = relabel(&nb.graph, &[50, 10, 40, 20, 30, 60]).unwrap();
        let nb2 = EdgeNeighbourhood {
            graph: h,
            marked: (psi.apply(2).unwrap(), psi.apply(3).unwrap()),
        };
        let bp = ball(&nb.graph, &[nb.graph.index_of(2).unwrap()], 1);
        let vp = Tensor::from_fn(bp.len(), 3, |r, c| (r * 3 + c) as f64 * 0.1 - 0.4);
        // v'_{ψ(u)} = v_u: rows of v_p reordered by ψ
        let bp2 = ball(&nb2.graph, &[nb2.graph.index_of(nb2.marked.0).unwrap()], 1);
        let imap = psi.index_map().unwrap();
        let mut vp2 = Tensor::zeros(bp.len(), 3);
        for (k, &u) in bp.iter().enumerate() {
            let k2 = bp2.binary_search(&imap[u]).unwrap();
            vp2.row_mut(k2).copy_from_slice(vp.row(k));
        }
        let f = embed_alpha(&vp, &nb, &k1()).unwrap().features;
        let f2 = embed_alpha(&vp2, &nb2, &k1()).unwrap().features;
        for u in 0..6 {
            assert_eq!(f.row(u), f2.row(imap[u]));
        }
    }

    #[test]
    fn gcn_layer_basics() {
        let g = ConcreteGraph::new(0..2, [(0, 1)]).unwrap();
        let mut store = ParamStore::<f64>::new();
        let ws = store.add("s", Tensor::zeros(2, 2));
        let wn = store.add("n", Tensor::identity(2));
        let b = store.add("b", Tensor::zeros(1, 2));
        let f = Tensor::new(2, 2, vec![1.5, -2.0, 7.0, 7.0]).unwrap();
        let out = gcn_layer_forward(&store, (ws, wn, b), &g, &f, false).unwrap();
        assert_eq!(out.row(1), &[1.5, -2.0]);
        assert_eq!(out.row(0), &[0.0, 0.0]);
        store.get_mut(wn).data_mut().iter_mut().for_each(|x| *x = 0.0);
        let out = gcn_layer_forward(&store, (ws, wn, b), &g, &f, true).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gcn_layer_is_permutation_equivariant() {
        let g = Arc::new(sample_graph());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParamStore::<f64>::new();
        let stack = GcnStack::new(&mut store, "s", vec![3, 4], &mut rng);
        let f = Tensor::from_fn(7, 3, |_, _| rng.random_range(-1.0..1.0));
        let ids = [3, 6, 0, 5, 1, 2, 4];
        let (h, phi) = relabel(&g, &ids).unwrap();
        let imap = phi.index_map().unwrap();
        let mut f2 = Tensor::zeros(7, 3);
        for u in 0..7 {
            f2.row_mut(imap[u]).copy_from_slice(f.row(u));
        }
        let a = gcn_stack_forward(&store, &stack, &g, &f).unwrap();
        let b = gcn_stack_forward(&store, &stack, &h, &f2).unwrap();
        for u in 0..7 {
            for k in 0..4 {
                assert!((a.at(u, k) - b.at(imap[u], k)).abs() < 1e-14);
            }
        }
    }

    fn random_net(c_in: usize, c_out: usize, layers: usize, seed: u64) -> (ParamStore<f64>, GcnMessageNet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let spec = NetSpec {
            kind: NetKind::Gcn2,
            layers,
            hidden: 5,
        };
        let net = GcnMessageNet::new(&mut store, "m", c_in, c_out, &spec, &mut rng);
        for i in 0..store.len() {
            store.get_mut(i).data_mut().iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
        }
        (store, net)
    }

    #[test]
    fn zero_input_zero_bias_zero_markers_gives_zero_message() {
        let g = sample_graph();
        let (mut store, net) = random_net(2, 3, 2, 1);
        for &(_, _, b) in &net.stack.params {
            store.get_mut(b).data_mut().iter_mut().for_each(|x| *x = 0.0);
        }
        net.zero_marker_weights(&mut store);
        let nb = edge_neighbourhood(&g, 2, 3, &k1()).unwrap();
        let m = gcn2_message(&store, &net, &Tensor::zeros(4, 2), &nb, &k1()).unwrap();
        assert!(m.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_edge_linear_closed_form() {
        // G_pq = {p, q} with edge p->q; one linear layer, W_self = W_neigh = I
        // on 1 + 2 channels mapped to 3 outputs, zero bias.
        let g = ConcreteGraph::new([0, 1], [(0, 1)]).unwrap();
        let nb = edge_neighbourhood(&g, 0, 1, &k1()).unwrap();
        let mut store = ParamStore::<f64>::new();
        let net = GcnMessageNet {
            c_in: 1,
            c_out: 3,
            stack: GcnStack {
                dims: vec![3, 3],
                params: vec![(store.add("s", Tensor::identity(3)), store.add("n", Tensor::identity(3)), store.add("b", Tensor::zeros(1, 3)))],
            },
        };
        // G_p = {p, q} as well (k = 1), v_p = [a, b]
        let vp = Tensor::new(2, 1, vec![2.0, 5.0]).unwrap();
        let m = gcn2_message(&store, &net, &vp, &nb, &k1()).unwrap();
        // at q: self row [5, 0, 1] + mean over in-neighbours {p}: [2, 1, 0]
        // G_q = {p, q}; at p: self [2, 1, 0], no in-neighbours
        assert_eq!(m.row(0), &[2.0, 1.0, 0.0]);
        assert_eq!(m.row(1), &[7.0, 1.0, 1.0]);
    }

    #[test]
    fn message_naturality_and_marker_sensitivity() {
        let g = sample_graph();
        let (store, net) = random_net(2, 3, 2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (p, q) in g.edges() {
            let nb = edge_neighbourhood(&g, p, q, &k1()).unwrap();
            let n = nb.graph.node_count();
            let mut ids: Vec<usize> = (0..n).map(|i| 100 + 3 * i).collect();
            rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng);
            let (h, psi) = relabel(&nb.graph, &ids).unwrap();
            let nb2 = EdgeNeighbourhood {
                graph: h,
                marked: (psi.apply(p).unwrap(), psi.apply(q).unwrap()),
            };
            let bp = ball(&nb.graph, &[nb.graph.index_of(p).unwrap()], 1);
            let vp = Tensor::from_fn(bp.len(), 2, |_, _| rng.random_range(-1.0..1.0));
            let moved = permute_rows(&vp, &psi, &nb, p);
            let m = gcn2_message(&store, &net, &vp, &nb, &k1()).unwrap();
            let m2 = gcn2_message(&store, &net, &moved, &nb2, &k1()).unwrap();
            let want = permute_rows(&m, &psi, &nb, q);
            assert!(want.max_abs_diff(&m2) < 1e-12);
        }
        // swapping the markers changes the message
        let nb = edge_neighbourhood(&g, 2, 3, &k1()).unwrap();
        let sw = EdgeNeighbourhood {
            graph: nb.graph.clone(),
            marked: (3, 2),
        };
        let f = embed_alpha(&Tensor::zeros(4, 2), &nb, &k1()).unwrap().features;
        let f_sw = embed_alpha(&Tensor::zeros(4, 2), &sw, &k1()).unwrap().features;
        let a = gcn_stack_forward(&store, &net.stack, &nb.graph, &f).unwrap();
        let b = gcn_stack_forward(&store, &net.stack, &nb.graph, &f_sw).unwrap();
        assert!(a.max_abs_diff(&b) > 1e-6);
    }

    /// Rows of a block over the ball of `centre` moved along `psi`.
    fn permute_rows(x: &Tensor<f64>, psi: &GraphIso, nb: &EdgeNeighbourhood, centre: usize) -> Tensor<f64> {
        let src = &nb.graph;
        let dst = psi.target();
        let from = ball(src, &[src.index_of(centre).unwrap()], 1);
        let to = ball(dst, &[dst.index_of(psi.apply(centre).unwrap()).unwrap()], 1);
        let imap = psi.index_map().unwrap();
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for (k, &u) in from.iter().enumerate() {
            out.row_mut(to.binary_search(&imap[u]).unwrap()).copy_from_slice(x.row(k));
        }
        out
    }

    #[test]
    fn batched_matches_reference_and_is_natural() {
        let g = Arc::new(sample_graph());
        let a = k1();
        let (store, net) = random_net(2, 3, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = GlobalFeature::from_fn(&g, &RepSpec::standard(2), &a, || rng.random_range(-1.0..1.0));
        let slow = ngn_gcn2_forward(&store, &net, &g, &v, &a).unwrap();
        let fast = ngn_gcn2_forward_batched(&store, &net, &g, &v, &a).unwrap();
        assert!(slow.max_abs_diff(&fast) < 1e-12);

        // tiny chunks give the same result
        let layout = SlotLayout::new(&[&g], 1);
        let plans = Gcn2Plan::chunks(&[&g], &layout, 5).unwrap();
        assert!(plans.len() > 3);
        let x = Tensor::new(layout.slots, 2, v.blocks().iter().flatten().copied().collect()).unwrap();
        let y = gcn2_layer_eager(&store, &net, &plans, &x).unwrap();
        assert!(GlobalFeature::new(&g, layout.blocks(0, &y)).unwrap().max_abs_diff(&fast) < 1e-12);

        let (_, phi) = relabel(&g, &[9, 4, 17, 2, 30, 11, 5]).unwrap();
        let left = lift_global(&phi, &fast, &RepSpec::standard(3), &a).unwrap();
        let moved = lift_global(&phi, &v, &RepSpec::standard(2), &a).unwrap();
        let right = ngn_gcn2_forward_batched(&store, &net, phi.target(), &moved, &a).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-12);

        let empty = ConcreteGraph::new([1, 2], []).unwrap();
        let z = GlobalFeature::from_fn(&empty, &RepSpec::standard(2), &a, || 1.0);
        let out = ngn_gcn2_forward_batched(&store, &net, &empty, &z, &a).unwrap();
        assert!(out.blocks().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn tape_layer_matches_eager() {
        let g = sample_graph();
        let (store, net) = random_net(2, 3, 2, 5);
        let layout = SlotLayout::new(&[&g], 1);
        let plan = Gcn2Plan::build(&[&g], &layout, &g.edge_indices().map(|(p, q)| (0, p, q)).collect::<Vec<_>>()).unwrap();
        let x = Tensor::from_fn(layout.slots, 2, |r, c| ((r * 2 + c) as f64).sin());
        let eager = gcn2_layer_eager(&store, &net, std::slice::from_ref(&plan), &x).unwrap();
        let mut tape = Tape::new();
        let xv = tape.leaf(x);
        let y = gcn2_layer_tape(&mut tape, &store, &net, &plan, xv).unwrap();
        assert!(tape.value(y).max_abs_diff(&eager) < 1e-14);
    }
}
