//! Concrete graphs with explicit natural-number node ids, and the
//! isomorphisms between them.
//!
//! Undirected graphs are stored as symmetric directed edge sets. Node ids may
//! be non-contiguous so that subgraphs keep the ids of their parent.

pub mod brute;
mod canon;
pub(crate) mod group;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use canon::{
    automorphism_generators, canonical_form, canonical_form_marked, find_iso, AutGenerators,
    CanonicalEncoding, CanonicalForm, DEFAULT_SIZE_CAP,
};
pub use group::{enumerate_group, enumerate_group_with_cap, Perm, DEFAULT_GROUP_CAP};

pub type NodeId = usize;

/// A finite node set with ordered-pair edges.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "GraphRepr", try_from = "GraphRepr")]
pub struct ConcreteGraph {
    nodes: Vec<NodeId>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    edge_count: usize,
    allow_self_loops: bool,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    nodes: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
    #[serde(default)]
    allow_self_loops: bool,
}

impl From<ConcreteGraph> for GraphRepr {
    fn from(g: ConcreteGraph) -> Self {
        GraphRepr {
            edges: g.edges().collect(),
            allow_self_loops: g.allow_self_loops,
            nodes: g.nodes,
        }
    }
}

impl TryFrom<GraphRepr> for ConcreteGraph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        ConcreteGraph::build(r.nodes, r.edges, r.allow_self_loops)
    }
}

impl fmt::Debug for ConcreteGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConcreteGraph")
            .field("nodes", &self.nodes)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl ConcreteGraph {
    /// Builds a graph from a node set and a directed edge list. Self-loops
    /// and duplicate edges are rejected.
    pub fn new(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        Self::build(nodes, edges, false)
    }

    /// Same as [`ConcreteGraph::new`] but self-loops `(p, p)` are accepted.
    pub fn with_self_loops(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        Self::build(nodes, edges, true)
    }

    /// Builds an undirected graph: every listed pair is stored in both
    /// directions. Listing a pair twice (in either orientation) is fine.
    pub fn undirected(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            set.insert((a, b));
            set.insert((b, a));
        }
        Self::build(nodes, set, false)
    }

    /// Undirected graph on ids `0..n`.
    pub fn undirected_n(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        Self::undirected(0..n, edges)
    }

    pub fn empty() -> Self {
        ConcreteGraph {
            nodes: Vec::new(),
            out_adj: Vec::new(),
            in_adj: Vec::new(),
            edge_count: 0,
            allow_self_loops: false,
        }
    }

    fn build(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        allow_self_loops: bool,
    ) -> Result<Self> {
        let mut nodes: Vec<NodeId> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        let n = nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (a, b) in edges {
            let (Ok(i), Ok(j)) = (nodes.binary_search(&a), nodes.binary_search(&b)) else {
                return Err(Error::DanglingEdge(a, b));
            };
            if i == j && !allow_self_loops {
                return Err(Error::SelfLoop(a));
            }
            out_adj[i].push(j);
            in_adj[j].push(i);
            edge_count += 1;
        }
        for (i, list) in out_adj.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(nodes[i], nodes[w[0]]));
            }
        }
        for list in &mut in_adj {
            list.sort_unstable();
        }
        Ok(ConcreteGraph {
            nodes,
            out_adj,
            in_adj,
            edge_count,
            allow_self_loops,
        })
    }

    /// Node ids in ascending order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn allows_self_loops(&self) -> bool {
        self.allow_self_loops
    }

    /// Position of `id` in the ascending node order.
    #[inline]
    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search(&id).ok()
    }

    pub(crate) fn require_index(&self, id: NodeId) -> Result<usize> {
        self.index_of(id).ok_or(Error::UnknownNode(id))
    }

    #[inline]
    pub fn id(&self, index: usize) -> NodeId {
        self.nodes[index]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index_of(id).is_some()
    }

    /// Out-neighbour positions of the node at `index`, ascending.
    #[inline]
    pub fn out_neighbours(&self, index: usize) -> &[usize] {
        &self.out_adj[index]
    }

    /// In-neighbour positions of the node at `index`, ascending.
    #[inline]
    pub fn in_neighbours(&self, index: usize) -> &[usize] {
        &self.in_adj[index]
    }

    #[inline]
    pub fn has_edge_index(&self, i: usize, j: usize) -> bool {
        self.out_adj[i].binary_search(&j).is_ok()
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => self.has_edge_index(i, j),
            _ => false,
        }
    }

    /// Edges as id pairs, sorted by source then target.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(move |(i, outs)| outs.iter().map(move |&j| (self.nodes[i], self.nodes[j])))
    }

    /// Edges as position pairs, sorted by source then target.
    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(i, outs)| outs.iter().map(move |&j| (i, j)))
    }

    /// Number of distinct nodes adjacent to `index` in either direction.
    pub fn undirected_degree(&self, index: usize) -> usize {
        merge_union(&self.out_adj[index], &self.in_adj[index]).len()
    }

    /// Neighbour positions of `index` ignoring direction, ascending.
    pub fn undirected_neighbours(&self, index: usize) -> Vec<usize> {
        merge_union(&self.out_adj[index], &self.in_adj[index])
    }

    pub fn is_symmetric(&self) -> bool {
        self.out_adj == self.in_adj
    }

    /// Adds the reverse of every edge that lacks one.
    pub fn symmetrized(&self) -> ConcreteGraph {
        let mut set: BTreeSet<(NodeId, NodeId)> = self.edges().collect();
        for (a, b) in self.edges() {
            set.insert((b, a));
        }
        Self::build(self.nodes.iter().copied(), set, self.allow_self_loops)
            .expect("symmetrizing a valid graph stays valid")
    }

    /// Induced subgraph on the given positions (any order, no duplicates).
    pub fn induced_by_indices(&self, indices: &[usize]) -> ConcreteGraph {
        let mut keep: Vec<usize> = indices.to_vec();
        keep.sort_unstable();
        keep.dedup();
        // position in `keep` for each parent position, usize::MAX when dropped
        let mut local = vec![usize::MAX; self.nodes.len()];
        for (k, &i) in keep.iter().enumerate() {
            local[i] = k;
        }
        let mut out_adj = vec![Vec::new(); keep.len()];
        let mut in_adj = vec![Vec::new(); keep.len()];
        let mut edge_count = 0;
        for (k, &i) in keep.iter().enumerate() {
            for &j in &self.out_adj[i] {
                let l = local[j];
                if l != usize::MAX {
                    out_adj[k].push(l);
                    in_adj[l].push(k);
                    edge_count += 1;
                }
            }
        }
        // out lists are ascending because `keep` is ascending; in lists are
        // filled in ascending source order as well.
        ConcreteGraph {
            nodes: keep.iter().map(|&i| self.nodes[i]).collect(),
            out_adj,
            in_adj,
            edge_count,
            allow_self_loops: self.allow_self_loops,
        }
    }

    /// Induced subgraph on the given node ids.
    pub fn induced(&self, ids: &[NodeId]) -> Result<ConcreteGraph> {
        let idx = ids
            .iter()
            .map(|&id| self.require_index(id))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.induced_by_indices(&idx))
    }

    /// Applies a relabeling (`new_ids[i]` is the new id of the node at
    /// position `i`). The new ids must be distinct.
    pub fn relabeled(&self, new_ids: &[NodeId]) -> Result<ConcreteGraph> {
        if new_ids.len() != self.nodes.len() {
            return Err(Error::Shape(format!(
                "relabeling has {} ids for {} nodes",
                new_ids.len(),
                self.nodes.len()
            )));
        }
        let edges: Vec<_> = self
            .edge_indices()
            .map(|(i, j)| (new_ids[i], new_ids[j]))
            .collect();
        let g = Self::build(new_ids.iter().copied(), edges, self.allow_self_loops)?;
        if g.node_count() != self.node_count() {
            return Err(Error::InvalidIso("relabeling ids are not distinct".into()));
        }
        Ok(g)
    }
}

fn merge_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

/// A node map between two concrete graphs. Construction only checks that the
/// map is total on the source; [`GraphIso::validate`] checks the rest.
#[derive(Clone)]
pub struct GraphIso {
    source: Arc<ConcreteGraph>,
    target: Arc<ConcreteGraph>,
    /// Image id of each source node, aligned with `source.nodes()`.
    map: Vec<NodeId>,
}

impl fmt::Debug for GraphIso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.pairs()).finish()
    }
}

impl PartialEq for GraphIso {
    fn eq(&self, other: &Self) -> bool {
        self.map == other.map && self.source == other.source && self.target == other.target
    }
}

impl GraphIso {
    /// Builds a map from `(source id, target id)` pairs. Fails when a source
    /// node is missing, listed twice or unknown.
    pub fn from_pairs(
        source: Arc<ConcreteGraph>,
        target: Arc<ConcreteGraph>,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut map = vec![None; source.node_count()];
        for (a, b) in pairs {
            let i = source
                .index_of(a)
                .ok_or_else(|| Error::InvalidIso(format!("source id {a} is not a node")))?;
            if map[i].replace(b).is_some() {
                return Err(Error::InvalidIso(format!("source id {a} mapped twice")));
            }
        }
        let map = map
            .into_iter()
            .enumerate()
            .map(|(i, m)| m.ok_or_else(|| Error::InvalidIso(format!("source id {} unmapped", source.id(i)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphIso { source, target, map })
    }

    /// Builds a map from target positions aligned with source positions.
    pub fn from_index_map(source: Arc<ConcreteGraph>, target: Arc<ConcreteGraph>, image: &[usize]) -> Result<Self> {
        if image.len() != source.node_count() || image.iter().any(|&j| j >= target.node_count()) {
            return Err(Error::InvalidIso("index map out of range".into()));
        }
        let map = image.iter().map(|&j| target.id(j)).collect();
        Ok(GraphIso { source, target, map })
    }

    /// Builds and validates; returns an error unless the map is an isomorphism.
    pub fn checked(
        source: Arc<ConcreteGraph>,
        target: Arc<ConcreteGraph>,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let iso = Self::from_pairs(source, target, pairs)?;
        if !iso.validate()? {
            return Err(Error::InvalidIso("map does not preserve edges".into()));
        }
        Ok(iso)
    }

    pub fn identity(g: Arc<ConcreteGraph>) -> Self {
        let map = g.nodes().to_vec();
        GraphIso {
            source: g.clone(),
            target: g,
            map,
        }
    }

    pub fn source(&self) -> &Arc<ConcreteGraph> {
        &self.source
    }

    pub fn target(&self) -> &Arc<ConcreteGraph> {
        &self.target
    }

    /// Image of a source id.
    pub fn apply(&self, id: NodeId) -> Option<NodeId> {
        self.source.index_of(id).map(|i| self.map[i])
    }

    /// Images aligned with `source().nodes()`.
    pub fn images(&self) -> &[NodeId] {
        &self.map
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.source.nodes().iter().copied().zip(self.map.iter().copied())
    }

    /// Target positions aligned with source positions. Errors when an image
    /// is not a target node.
    pub fn index_map(&self) -> Result<Vec<usize>> {
        self.map
            .iter()
            .map(|&b| {
                self.target
                    .index_of(b)
                    .ok_or_else(|| Error::InvalidIso(format!("image id {b} is not a target node")))
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.map.as_slice() == self.source.nodes()
    }

    /// `Ok(true)` iff the map is a bijection that preserves edges in both
    /// directions. Malformed maps (unknown images, non-injective, size
    /// mismatch) are an error rather than `false`.
    pub fn validate(&self) -> Result<bool> {
        if self.source.node_count() != self.target.node_count() {
            return Err(Error::InvalidIso(format!(
                "node counts differ ({} vs {})",
                self.source.node_count(),
                self.target.node_count()
            )));
        }
        let idx = self.index_map()?;
        let mut seen = vec![false; idx.len()];
        for &j in &idx {
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidIso(format!(
                    "target id {} hit twice",
                    self.target.id(j)
                )));
            }
        }
        if self.source.edge_count() != self.target.edge_count() {
            return Ok(false);
        }
        // equal edge counts + injective edge image => both directions hold
        Ok(self
            .source
            .edge_indices()
            .all(|(i, j)| self.target.has_edge_index(idx[i], idx[j])))
    }

    /// `next ∘ self`: apply `self`, then `next`. The middle graphs must match.
    pub fn then(&self, next: &GraphIso) -> Result<GraphIso> {
        if *self.target != *next.source {
            return Err(Error::InvalidIso("composition through different graphs".into()));
        }
        let map = self
            .map
            .iter()
            .map(|&m| next.apply(m).ok_or_else(|| Error::InvalidIso(format!("id {m} unmapped"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphIso {
            source: self.source.clone(),
            target: next.target.clone(),
            map,
        })
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &GraphIso) -> Result<GraphIso> {
        first.then(self)
    }

    pub fn inverse(&self) -> Result<GraphIso> {
        let idx = self.index_map()?;
        let mut map = vec![usize::MAX; idx.len()];
        for (i, &j) in idx.iter().enumerate() {
            if map[j] != usize::MAX {
                return Err(Error::InvalidIso("map is not injective".into()));
            }
            map[j] = self.source.id(i);
        }
        if self.target.node_count() != idx.len() {
            return Err(Error::InvalidIso("map is not surjective".into()));
        }
        Ok(GraphIso {
            source: self.target.clone(),
            target: self.source.clone(),
            map,
        })
    }
}

/// Free-function form of [`GraphIso::validate`].
pub fn validate_iso(candidate: &GraphIso) -> Result<bool> {
    candidate.validate()
}

/// Relabels `g` with `new_ids` and returns the relabeled graph together with
/// the isomorphism from `g` onto it.
pub fn relabel(g: &Arc<ConcreteGraph>, new_ids: &[NodeId]) -> Result<(Arc<ConcreteGraph>, GraphIso)> {
    let target = Arc::new(g.relabeled(new_ids)?);
    let iso = GraphIso::from_pairs(g.clone(), target.clone(), g.nodes().iter().copied().zip(new_ids.iter().copied()))?;
    Ok((target, iso))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Arc<ConcreteGraph> {
        Arc::new(ConcreteGraph::undirected_n(3, [(0, 1), (1, 2)]).unwrap())
    }

    #[test]
    fn construction_invariants() {
        assert!(matches!(
            ConcreteGraph::new([0, 1], [(0, 2)]),
            Err(Error::DanglingEdge(0, 2))
        ));
        assert!(matches!(ConcreteGraph::new([0, 1], [(1, 1)]), Err(Error::SelfLoop(1))));
        assert!(matches!(
            ConcreteGraph::new([0, 1], [(0, 1), (0, 1)]),
            Err(Error::DuplicateEdge(0, 1))
        ));
        let g = ConcreteGraph::with_self_loops([0, 1], [(1, 1)]).unwrap();
        assert!(g.has_edge(1, 1));
        let g = ConcreteGraph::new([9, 5, 7], [(5, 9), (9, 7)]).unwrap();
        assert_eq!(g.nodes(), &[5, 7, 9]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(5, 9), (9, 7)]);
        assert!(!g.is_symmetric());
        assert!(g.symmetrized().is_symmetric());
    }

    #[test]
    fn identity_on_triangle_is_valid() {
        let t = Arc::new(ConcreteGraph::undirected_n(3, [(0, 1), (1, 2), (2, 0)]).unwrap());
        assert!(validate_iso(&GraphIso::identity(t)).unwrap());
    }

    #[test]
    fn path_swap_of_end_and_middle_is_not_an_iso() {
        let p = path3();
        let iso = GraphIso::from_pairs(p.clone(), p, [(0, 1), (1, 0), (2, 2)]).unwrap();
        assert!(!validate_iso(&iso).unwrap());
    }

    #[test]
    fn path_reversal_is_an_iso() {
        let p = path3();
        let iso = GraphIso::from_pairs(p.clone(), p, [(0, 2), (1, 1), (2, 0)]).unwrap();
        assert!(validate_iso(&iso).unwrap());
    }

    #[test]
    fn path_bijections_brute_force() {
        // exactly two of the six bijections of the 3-path preserve edges
        let p = path3();
        let mut valid = 0;
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let iso = GraphIso::from_pairs(p.clone(), p.clone(), (0..3).zip(perm)).unwrap();
            if iso.validate().unwrap() {
                valid += 1;
            }
        }
        assert_eq!(valid, 2);
    }

    #[test]
    fn malformed_maps_are_errors_not_false() {
        let p = path3();
        assert!(GraphIso::from_pairs(p.clone(), p.clone(), [(0, 1), (1, 0)]).is_err());
        assert!(GraphIso::from_pairs(p.clone(), p.clone(), [(0, 1), (1, 0), (2, 2), (7, 0)]).is_err());
        let not_bijective = GraphIso::from_pairs(p.clone(), p.clone(), [(0, 1), (1, 1), (2, 2)]).unwrap();
        assert!(not_bijective.validate().is_err());
        let unknown_image = GraphIso::from_pairs(p.clone(), p, [(0, 1), (1, 5), (2, 2)]).unwrap();
        assert!(unknown_image.validate().is_err());
    }

    #[test]
    fn composition_and_inverse() {
        let p = path3();
        let (q, f) = relabel(&p, &[10, 20, 30]).unwrap();
        let (_, g) = relabel(&q, &[3, 2, 1]).unwrap();
        let gf = f.then(&g).unwrap();
        assert!(gf.validate().unwrap());
        assert_eq!(gf.apply(0), Some(3));
        let back = gf.then(&gf.inverse().unwrap()).unwrap();
        assert!(back.is_identity());
        assert!(g.then(&f).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let g = ConcreteGraph::new([4, 8, 15], [(4, 8), (15, 4)]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: ConcreteGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }
}
