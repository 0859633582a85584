//! Permutation representations on node neighbourhoods and their lift to
//! global features.
//!
//! Layout: a spec is a list of fields. Field `i` occupies a contiguous range
//! of the feature vector; a `standard*c` field over an `n`-node
//! neighbourhood stores entry `(node position, channel)` at
//! `pos * c + channel`, with positions following ascending node ids. A
//! `trivial*c` field is just `c` numbers.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConcreteGraph, GraphIso, NodeId};
use crate::neighbourhood::{ball, NeighbourhoodAssignment, NodeNeighbourhood};
use crate::nn::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    /// One number per channel, untouched by isomorphisms.
    Trivial,
    /// One number per neighbourhood node and channel, permuted along.
    Standard,
}

impl RepKind {
    pub fn dim(self, nodes: usize) -> usize {
        match self {
            RepKind::Trivial => 1,
            RepKind::Standard => nodes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepField {
    pub kind: RepKind,
    pub channels: usize,
}

/// A direct sum of channel-multiplied trivial and standard representations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RepSpec {
    fields: Vec<RepField>,
}

impl RepSpec {
    pub fn new(fields: Vec<RepField>) -> Result<Self> {
        if fields.is_empty() || fields.iter().any(|f| f.channels == 0) {
            return Err(Error::RepSpec(format!("{fields:?}")));
        }
        Ok(RepSpec { fields })
    }

    pub fn trivial(channels: usize) -> Self {
        RepSpec::new(vec![RepField { kind: RepKind::Trivial, channels }]).expect("channels >= 1")
    }

    pub fn standard(channels: usize) -> Self {
        RepSpec::new(vec![RepField { kind: RepKind::Standard, channels }]).expect("channels >= 1")
    }

    pub fn fields(&self) -> &[RepField] {
        &self.fields
    }

    /// Dimension over a neighbourhood with `nodes` nodes.
    pub fn dim(&self, nodes: usize) -> usize {
        self.fields.iter().map(|f| f.kind.dim(nodes) * f.channels).sum()
    }

    /// Start offset of each field over an `nodes`-node neighbourhood.
    pub fn offsets(&self, nodes: usize) -> Vec<usize> {
        let mut acc = 0;
        self.fields
            .iter()
            .map(|f| {
                let o = acc;
                acc += f.kind.dim(nodes) * f.channels;
                o
            })
            .collect()
    }

    pub fn is_standard_only(&self) -> bool {
        self.fields.len() == 1 && self.fields[0].kind == RepKind::Standard
    }

    /// Index permutation induced by a node-position map: entry `i` of a
    /// source vector lands at entry `perm[i]` of the target vector.
    pub fn index_perm(&self, pos_map: &[usize]) -> Vec<usize> {
        let n = pos_map.len();
        let mut out = Vec::with_capacity(self.dim(n));
        let mut off = 0;
        for f in &self.fields {
            match f.kind {
                RepKind::Trivial => out.extend(off..off + f.channels),
                RepKind::Standard => {
                    for &t in pos_map {
                        out.extend((0..f.channels).map(|c| off + t * f.channels + c));
                    }
                }
            }
            off += f.kind.dim(n) * f.channels;
        }
        out
    }
}

impl fmt::Display for RepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, field) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            let name = match field.kind {
                RepKind::Trivial => "trivial",
                RepKind::Standard => "standard",
            };
            write!(f, "{name}*{}", field.channels)?;
        }
        Ok(())
    }
}

impl FromStr for RepSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::RepSpec(s.to_string());
        let mut fields = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let (name, ch) = match part.split_once('*') {
                Some((n, c)) => (n.trim(), c.trim().parse::<usize>().map_err(|_| bad())?),
                None => (part, 1),
            };
            let kind = match name {
                "trivial" => RepKind::Trivial,
                "standard" => RepKind::Standard,
                _ => return Err(bad()),
            };
            fields.push(RepField { kind, channels: ch });
        }
        RepSpec::new(fields).map_err(|_| bad())
    }
}

impl TryFrom<String> for RepSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RepSpec> for String {
    fn from(r: RepSpec) -> String {
        r.to_string()
    }
}

pub fn rep_dim(spec: &RepSpec, nb: &NodeNeighbourhood) -> usize {
    spec.dim(nb.graph.node_count())
}

/// Dense matrix of a representation applied to an isomorphism.
#[derive(Clone, Debug, PartialEq)]
pub struct RepMatrix {
    pub matrix: DMatrix<f64>,
}

impl RepMatrix {
    pub fn source_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn from_perm(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            m[(j, i)] = 1.0;
        }
        RepMatrix { matrix: m }
    }
}

/// `ρ(ψ)` as a dense matrix. Errors when `ψ` is not an isomorphism.
pub fn rep_matrix(spec: &RepSpec, psi: &GraphIso) -> Result<RepMatrix> {
    if !psi.validate()? {
        return Err(Error::InvalidIso("map does not preserve edges".into()));
    }
    Ok(RepMatrix::from_perm(&spec.index_perm(&psi.index_map()?)))
}

/// Per-node feature blocks over a graph, in ascending node-id order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalFeature<T = f64> {
    ids: Vec<NodeId>,
    blocks: Vec<Vec<T>>,
}

impl<T: Real> GlobalFeature<T> {
    pub fn new(g: &ConcreteGraph, blocks: Vec<Vec<T>>) -> Result<Self> {
        if blocks.len() != g.node_count() {
            return Err(Error::Shape(format!("{} blocks for {} nodes", blocks.len(), g.node_count())));
        }
        Ok(GlobalFeature { ids: g.nodes().to_vec(), blocks })
    }

    pub fn zeros(g: &ConcreteGraph, spec: &RepSpec, a: &NeighbourhoodAssignment) -> Self {
        let blocks = (0..g.node_count()).map(|i| vec![T::zero(); spec.dim(ball(g, &[i], a.hops).len())]).collect();
        GlobalFeature { ids: g.nodes().to_vec(), blocks }
    }

    /// Fills every entry from `f`.
    pub fn from_fn(g: &ConcreteGraph, spec: &RepSpec, a: &NeighbourhoodAssignment, mut f: impl FnMut() -> T) -> Self {
        let mut v = Self::zeros(g, spec, a);
        v.blocks.iter_mut().flatten().for_each(|x| *x = f());
        v
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn blocks(&self) -> &[Vec<T>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<T>> {
        self.blocks
    }

    pub fn block(&self, id: NodeId) -> Option<&[T]> {
        self.ids.binary_search(&id).ok().map(|i| self.blocks[i].as_slice())
    }

    /// Checks block dimensions against `spec` over `g`'s neighbourhoods.
    pub fn check(&self, g: &ConcreteGraph, spec: &RepSpec, a: &NeighbourhoodAssignment) -> Result<()> {
        if self.ids != g.nodes() {
            return Err(Error::Shape("feature node ids differ from graph nodes".into()));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let want = spec.dim(ball(g, &[i], a.hops).len());
            if b.len() != want {
                return Err(Error::Shape(format!("block at node {} has {} entries, expected {want}", self.ids[i], b.len())));
            }
        }
        Ok(())
    }

    pub fn scale_add(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        if self.ids != other.ids {
            return Err(Error::Shape("node ids differ".into()));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                if a.len() != b.len() {
                    return Err(Error::Shape("block sizes differ".into()));
                }
                Ok(a.iter().zip(b).map(|(&x, &y)| alpha * x + beta * y).collect())
            })
            .collect::<Result<_>>()?;
        Ok(GlobalFeature { ids: self.ids.clone(), blocks })
    }

    /// Largest entrywise difference; infinite when the shapes disagree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.ids != other.ids || self.blocks.iter().zip(&other.blocks).any(|(a, b)| a.len() != b.len()) {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .flatten()
            .zip(other.blocks.iter().flatten())
            .map(|(&x, &y)| (x - y).abs().to_f64())
            .fold(0.0, f64::max)
    }
}

/// Position map of `φ` restricted to node neighbourhoods: for every source
/// position `i`, the ball around `i`, the ball around its image, and the
/// local position map between them. `φ` must already be validated.
pub(crate) fn local_pos_maps(phi: &GraphIso, hops: usize) -> Result<Vec<Vec<usize>>> {
    let src = phi.source();
    let dst = phi.target();
    let imap = phi.index_map()?;
    let mut out = Vec::with_capacity(src.node_count());
    for i in 0..src.node_count() {
        let from = ball(src, &[i], hops);
        let to = ball(dst, &[imap[i]], hops);
        if from.len() != to.len() {
            return Err(Error::InvalidIso("neighbourhood sizes differ under the map".into()));
        }
        let m = from
            .iter()
            .map(|&u| to.binary_search(&imap[u]).map_err(|_| Error::InvalidIso("restriction leaves the target neighbourhood".into())))
            .collect::<Result<Vec<_>>>()?;
        out.push(m);
    }
    Ok(out)
}

/// `ρ̂(φ)(v)`: moves block `p` to `φ(p)` and applies `ρ(φ_p)` to it.
pub fn lift_global<T: Real>(phi: &GraphIso, v: &GlobalFeature<T>, spec: &RepSpec, a: &NeighbourhoodAssignment) -> Result<GlobalFeature<T>> {
    if !phi.validate()? {
        return Err(Error::InvalidIso("global map does not preserve edges".into()));
    }
    v.check(phi.source(), spec, a)?;
    let imap = phi.index_map()?;
    let maps = local_pos_maps(phi, a.hops)?;
    let mut blocks = vec![Vec::new(); v.blocks.len()];
    for (i, m) in maps.iter().enumerate() {
        let perm = spec.index_perm(m);
        let mut b = vec![T::zero(); perm.len()];
        for (k, &t) in perm.iter().enumerate() {
            b[t] = v.blocks[i][k];
        }
        blocks[imap[i]] = b;
    }
    Ok(GlobalFeature { ids: phi.target().nodes().to_vec(), blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::relabel;
    use crate::neighbourhood::node_neighbourhood;
    use std::sync::Arc;

    #[test]
    fn spec_text_round_trip() {
        for s in ["standard*16", "trivial*8+standard*4", "trivial*1"] {
            assert_eq!(s.parse::<RepSpec>().unwrap().to_string(), s);
        }
        assert_eq!("standard".parse::<RepSpec>().unwrap(), RepSpec::standard(1));
        for bad in ["", "standard*0", "vector*2", "standard*x", "trivial+"] {
            assert!(bad.parse::<RepSpec>().is_err(), "{bad}");
        }
        let json = serde_json::to_string(&RepSpec::standard(3)).unwrap();
        assert_eq!(json, "\"standard*3\"");
    }

    #[test]
    fn dims() {
        let five = ConcreteGraph::undirected_n(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let nb = node_neighbourhood(&five, 0, &NeighbourhoodAssignment::default()).unwrap();
        assert_eq!(rep_dim(&RepSpec::trivial(8), &nb), 8);
        assert_eq!(rep_dim(&RepSpec::standard(1), &nb), 5);
        let tri = ConcreteGraph::undirected_n(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let nb = node_neighbourhood(&tri, 0, &NeighbourhoodAssignment::default()).unwrap();
        assert_eq!(rep_dim(&"standard+trivial".parse().unwrap(), &nb), 4);
    }

    #[test]
    fn swapping_third_and_fifth_node() {
        let g = Arc::new(ConcreteGraph::new(0..5, []).unwrap());
        let psi = GraphIso::from_pairs(g.clone(), g, [(0, 0), (1, 1), (2, 4), (3, 3), (4, 2)]).unwrap();
        let m = rep_matrix(&RepSpec::standard(1), &psi).unwrap().matrix;
        let mut want = DMatrix::<f64>::identity(5, 5);
        want.swap_rows(2, 4);
        assert_eq!(m, want);
        assert_eq!(rep_matrix(&RepSpec::trivial(3), &psi).unwrap().matrix, DMatrix::identity(3, 3));
        let id = GraphIso::identity(psi.source().clone());
        assert_eq!(rep_matrix(&"trivial*2+standard*2".parse().unwrap(), &id).unwrap().matrix, DMatrix::identity(12, 12));
    }

    #[test]
    fn channels_are_an_identity_factor() {
        let g = Arc::new(ConcreteGraph::new(0..3, []).unwrap());
        let psi = GraphIso::from_pairs(g.clone(), g, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let one = rep_matrix(&RepSpec::standard(1), &psi).unwrap().matrix;
        let two = rep_matrix(&RepSpec::standard(2), &psi).unwrap().matrix;
        assert_eq!(two, one.kronecker(&DMatrix::identity(2, 2)));
    }

    #[test]
    fn lift_on_relabeled_path() {
        // path 0-1-2 relabeled 0->20, 1->10, 2->30
        let g = Arc::new(ConcreteGraph::undirected_n(3, [(0, 1), (1, 2)]).unwrap());
        let (_, phi) = relabel(&g, &[20, 10, 30]).unwrap();
        let a = NeighbourhoodAssignment::default();
        let spec = RepSpec::standard(1);
        // blocks: N_0 = {0,1}, N_1 = {0,1,2}, N_2 = {1,2}
        let v = GlobalFeature::new(&g, vec![vec![1.0, 2.0], vec![3.0, 4.0, 5.0], vec![6.0, 7.0]]).unwrap();
        let w = lift_global(&phi, &v, &spec, &a).unwrap();
        assert_eq!(w.ids(), &[10, 20, 30]);
        // node 10 (was 1): ball {10,20,30} ordered; old order {0,1,2} -> {20,10,30}
        assert_eq!(w.block(10).unwrap(), &[4.0, 3.0, 5.0]);
        // node 20 (was 0): ball {10,20}; 0->20 (pos 1), 1->10 (pos 0)
        assert_eq!(w.block(20).unwrap(), &[2.0, 1.0]);
        // node 30 (was 2): ball {10,30}; 1->10, 2->30
        assert_eq!(w.block(30).unwrap(), &[6.0, 7.0]);

        let trivial = RepSpec::trivial(2);
        let v = GlobalFeature::new(&g, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let w = lift_global(&phi, &v, &trivial, &a).unwrap();
        assert_eq!(w.blocks(), &[vec![3.0, 4.0], vec![1.0, 2.0], vec![5.0, 6.0]]);

        let id = GraphIso::identity(g.clone());
        assert_eq!(lift_global(&id, &v, &trivial, &a).unwrap(), v);
        assert!(matches!(lift_global(&id, &v, &spec, &a), Err(Error::Shape(_))));
    }
}
