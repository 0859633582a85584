//! Canonical labeling, isomorphism search and automorphism generators.
//!
//! All three share one search tree: an ordered partition is refined to an
//! equitable one (counting out- and in-neighbours per cell), then the first
//! smallest non-singleton cell is individualized vertex by vertex. Cell order
//! depends only on structure, so isomorphic inputs produce corresponding trees.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::group::Perm;
use super::{ConcreteGraph, GraphIso, NodeId};
use crate::error::{Error, Result};

/// Largest graph accepted by canonicalization and automorphism search.
pub const DEFAULT_SIZE_CAP: usize = 64;

type Partition = Vec<Vec<usize>>;

/// Adjacency encoding under the canonical order. Equal iff the (colored)
/// graphs are isomorphic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalEncoding {
    pub n: usize,
    pub colors: Vec<u32>,
    pub bits: Vec<u64>,
}

impl CanonicalEncoding {
    /// Stable hex string, used as a cache key.
    pub fn to_hex(&self) -> String {
        let mut s = format!("{}:", self.n);
        for c in &self.colors {
            s.push_str(&format!("{c:x}."));
        }
        s.push(':');
        for w in &self.bits {
            s.push_str(&format!("{w:016x}"));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CanonicalForm {
    encoding: CanonicalEncoding,
    /// Original node position at each canonical position.
    order: Vec<usize>,
    /// `(original id, canonical position)` in ascending id order.
    relabeling: Vec<(NodeId, usize)>,
}

impl CanonicalForm {
    pub fn encoding(&self) -> &CanonicalEncoding {
        &self.encoding
    }

    pub fn relabeling(&self) -> &[(NodeId, usize)] {
        &self.relabeling
    }

    /// Position (in the source graph's ascending order) of the node placed
    /// at each canonical position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position_of(&self, id: NodeId) -> Option<usize> {
        self.relabeling
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|k| self.relabeling[k].1)
    }
}

/// Marked-node-fixing automorphism generators of a graph.
#[derive(Clone, Debug)]
pub struct AutGenerators {
    graph: Arc<ConcreteGraph>,
    marked: Vec<NodeId>,
    perms: Vec<Perm>,
}

impl AutGenerators {
    pub fn graph(&self) -> &Arc<ConcreteGraph> {
        &self.graph
    }

    pub fn marked(&self) -> &[NodeId] {
        &self.marked
    }

    /// Generators as permutations of node positions.
    pub fn perms(&self) -> &[Perm] {
        &self.perms
    }

    pub fn generators(&self) -> Vec<GraphIso> {
        self.perms
            .iter()
            .map(|p| GraphIso::from_index_map(self.graph.clone(), self.graph.clone(), p.as_slice()).expect("in range"))
            .collect()
    }

    /// Generators built from arbitrary automorphisms (used for testing
    /// group enumeration). Each must fix the marked nodes.
    pub fn from_perms(graph: Arc<ConcreteGraph>, marked: Vec<NodeId>, perms: Vec<Perm>) -> Result<Self> {
        for p in &perms {
            let iso = GraphIso::from_index_map(graph.clone(), graph.clone(), p.as_slice())?;
            if !iso.validate()? {
                return Err(Error::InvalidIso("generator is not an automorphism".into()));
            }
            for &m in &marked {
                let i = graph.require_index(m)?;
                if p.apply(i) != i {
                    return Err(Error::InvalidIso(format!("generator moves marked node {m}")));
                }
            }
        }
        Ok(AutGenerators { graph, marked, perms })
    }
}

fn check_cap(g: &ConcreteGraph, cap: usize) -> Result<()> {
    if g.node_count() > cap {
        return Err(Error::Capacity {
            what: "graph size",
            size: g.node_count(),
            cap,
        });
    }
    Ok(())
}

fn marked_colors(g: &ConcreteGraph, marked: &[NodeId]) -> Result<Vec<u32>> {
    let mut colors = vec![0u32; g.node_count()];
    for (k, &m) in marked.iter().enumerate() {
        let i = g.require_index(m)?;
        if colors[i] != 0 {
            return Err(Error::Contract(format!("node {m} marked twice")));
        }
        colors[i] = k as u32 + 1;
    }
    Ok(colors)
}

/// Canonical form of an unmarked graph.
pub fn canonical_form(g: &ConcreteGraph) -> Result<CanonicalForm> {
    canonical_form_marked(g, &[])
}

/// Canonical form where `marked[k]` is distinguished with its own color
/// `k + 1`; isomorphisms between equal encodings map marked nodes in order.
pub fn canonical_form_marked(g: &ConcreteGraph, marked: &[NodeId]) -> Result<CanonicalForm> {
    check_cap(g, DEFAULT_SIZE_CAP)?;
    let colors = marked_colors(g, marked)?;
    let gens = aut_perms(g, &colors);
    let mut best: Option<(CanonicalEncoding, Vec<usize>)> = None;
    let mut path = Vec::new();
    canon_search(g, &colors, initial_partition(&colors), &mut path, &gens, &mut best);
    let (encoding, order) = best.unwrap_or_else(|| {
        (
            CanonicalEncoding {
                n: 0,
                colors: Vec::new(),
                bits: Vec::new(),
            },
            Vec::new(),
        )
    });
    let mut relabeling: Vec<(NodeId, usize)> = order.iter().enumerate().map(|(pos, &i)| (g.id(i), pos)).collect();
    relabeling.sort_unstable();
    Ok(CanonicalForm {
        encoding,
        order,
        relabeling,
    })
}

/// Searches for an isomorphism `a → b` that maps each pinned `(x, y)` pair
/// `x ↦ y`.
pub fn find_iso(a: &Arc<ConcreteGraph>, b: &Arc<ConcreteGraph>, pins: &[(NodeId, NodeId)]) -> Result<Option<GraphIso>> {
    let left: Vec<NodeId> = pins.iter().map(|p| p.0).collect();
    let right: Vec<NodeId> = pins.iter().map(|p| p.1).collect();
    let ca = marked_colors(a, &left)?;
    let cb = marked_colors(b, &right)?;
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return Ok(None);
    }
    let found = search_iso(a, b, &ca, &cb, initial_partition(&ca), initial_partition(&cb));
    Ok(found.map(|m| GraphIso::from_index_map(a.clone(), b.clone(), &m).expect("leaf map in range")))
}

/// Generators of the group of automorphisms fixing every marked node.
pub fn automorphism_generators(g: &Arc<ConcreteGraph>, marked: &[NodeId]) -> Result<AutGenerators> {
    check_cap(g, DEFAULT_SIZE_CAP)?;
    let colors = marked_colors(g, marked)?;
    Ok(AutGenerators {
        graph: g.clone(),
        marked: marked.to_vec(),
        perms: aut_perms(g, &colors),
    })
}

fn initial_partition(colors: &[u32]) -> Partition {
    let mut by_color: Vec<(u32, usize)> = colors.iter().copied().zip(0..).collect();
    by_color.sort_unstable();
    let mut cells: Partition = Vec::new();
    for (k, &(c, v)) in by_color.iter().enumerate() {
        if k == 0 || by_color[k - 1].0 != c {
            cells.push(Vec::new());
        }
        cells.last_mut().unwrap().push(v);
    }
    cells
}

/// Per-cell `(cell, out count, in count)` for vertex `v`.
fn signature(g: &ConcreteGraph, cell_of: &[usize], v: usize) -> Vec<(usize, u32, u32)> {
    let mut outs: Vec<usize> = g.out_neighbours(v).iter().map(|&w| cell_of[w]).collect();
    let mut ins: Vec<usize> = g.in_neighbours(v).iter().map(|&w| cell_of[w]).collect();
    outs.sort_unstable();
    ins.sort_unstable();
    let mut sig: Vec<(usize, u32, u32)> = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < outs.len() || j < ins.len() {
        let c = match (outs.get(i), ins.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let mut entry = (c, 0, 0);
        while outs.get(i) == Some(&c) {
            entry.1 += 1;
            i += 1;
        }
        while ins.get(j) == Some(&c) {
            entry.2 += 1;
            j += 1;
        }
        sig.push(entry);
    }
    sig
}

fn cell_index(cells: &Partition, n: usize) -> Vec<usize> {
    let mut cell_of = vec![0; n];
    for (c, cell) in cells.iter().enumerate() {
        for &v in cell {
            cell_of[v] = c;
        }
    }
    cell_of
}

/// Splits cells by neighbour counts until the partition is equitable.
fn refine(g: &ConcreteGraph, mut cells: Partition) -> Partition {
    let n = g.node_count();
    loop {
        let cell_of = cell_index(&cells, n);
        let mut next: Partition = Vec::with_capacity(cells.len());
        let mut split = false;
        for cell in &cells {
            if cell.len() == 1 {
                next.push(cell.clone());
                continue;
            }
            let mut keyed: Vec<(Vec<(usize, u32, u32)>, usize)> =
                cell.iter().map(|&v| (signature(g, &cell_of, v), v)).collect();
            keyed.sort();
            let before = next.len();
            let mut start = 0;
            for k in 1..=keyed.len() {
                if k == keyed.len() || keyed[k].0 != keyed[start].0 {
                    next.push(keyed[start..k].iter().map(|x| x.1).collect());
                    start = k;
                }
            }
            split |= next.len() - before > 1;
        }
        cells = next;
        if !split {
            return cells;
        }
    }
}

fn target_cell(cells: &Partition) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, c) in cells.iter().enumerate() {
        if c.len() > 1 && best.is_none_or(|b| c.len() < cells[b].len()) {
            best = Some(k);
        }
    }
    best
}

fn individualize(cells: &Partition, t: usize, v: usize) -> Partition {
    let mut out = Vec::with_capacity(cells.len() + 1);
    out.extend_from_slice(&cells[..t]);
    out.push(vec![v]);
    out.push(cells[t].iter().copied().filter(|&w| w != v).collect());
    out.extend_from_slice(&cells[t + 1..]);
    out
}

/// Structural summary of an equitable partition; corresponding partitions
/// of isomorphic graphs have equal summaries.
fn quotient(g: &ConcreteGraph, colors: &[u32], cells: &Partition) -> Vec<(u32, usize, Vec<(usize, u32, u32)>)> {
    let cell_of = cell_index(cells, g.node_count());
    cells
        .iter()
        .map(|c| (colors[c[0]], c.len(), signature(g, &cell_of, c[0])))
        .collect()
}

fn search_iso(
    a: &ConcreteGraph,
    b: &ConcreteGraph,
    ca: &[u32],
    cb: &[u32],
    pa: Partition,
    pb: Partition,
) -> Option<Vec<usize>> {
    let pa = refine(a, pa);
    let pb = refine(b, pb);
    if pa.len() != pb.len() || quotient(a, ca, &pa) != quotient(b, cb, &pb) {
        return None;
    }
    match target_cell(&pa) {
        None => {
            let mut map = vec![0; a.node_count()];
            for (x, y) in pa.iter().zip(&pb) {
                map[x[0]] = y[0];
            }
            let ok = (0..a.node_count()).all(|i| ca[i] == cb[map[i]])
                && a.edge_indices().all(|(i, j)| b.has_edge_index(map[i], map[j]));
            ok.then_some(map)
        }
        Some(t) => {
            let v = pa[t][0];
            pb[t].iter().find_map(|&w| search_iso(a, b, ca, cb, individualize(&pa, t, v), individualize(&pb, t, w)))
        }
    }
}

/// Stabilizer-chain generators along the first path of the search tree.
/// Levels are processed deepest first, so at each level the generators
/// found so far that fix the prefix generate the deeper stabilizer, and one
/// new generator per missing orbit point completes the level.
fn aut_perms(g: &ConcreteGraph, colors: &[u32]) -> Vec<Perm> {
    let n = g.node_count();
    let mut levels: Vec<(Partition, usize, usize)> = Vec::new();
    let mut p = refine(g, initial_partition(colors));
    while let Some(t) = target_cell(&p) {
        let v = p[t][0];
        let next = refine(g, individualize(&p, t, v));
        levels.push((p, t, v));
        p = next;
    }
    let mut gens: Vec<Perm> = Vec::new();
    for lvl in (0..levels.len()).rev() {
        let (part, t, v) = &levels[lvl];
        let prefix: Vec<usize> = levels[..lvl].iter().map(|l| l.2).collect();
        for &w in &part[*t] {
            if w == *v {
                continue;
            }
            let mut orbits = Orbits::new(n);
            for gen in gens.iter().filter(|p| prefix.iter().all(|&x| p.apply(x) == x)) {
                orbits.absorb(gen);
            }
            if orbits.find(w) == orbits.find(*v) {
                continue;
            }
            if let Some(m) = search_iso(g, g, colors, colors, individualize(part, *t, *v), individualize(part, *t, w)) {
                gens.push(Perm::from_vec(m));
            }
        }
    }
    gens
}

fn encode(g: &ConcreteGraph, colors: &[u32], order: &[usize]) -> CanonicalEncoding {
    let n = order.len();
    let mut bits = vec![0u64; (n * n).div_ceil(64)];
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            if g.has_edge_index(i, j) {
                let k = r * n + c;
                // most significant bit first so that word order is lexicographic
                bits[k / 64] |= 1u64 << (63 - (k % 64));
            }
        }
    }
    CanonicalEncoding {
        n,
        colors: order.iter().map(|&i| colors[i]).collect(),
        bits,
    }
}

fn canon_search(
    g: &ConcreteGraph,
    colors: &[u32],
    cells: Partition,
    path: &mut Vec<usize>,
    gens: &[Perm],
    best: &mut Option<(CanonicalEncoding, Vec<usize>)>,
) {
    let cells = refine(g, cells);
    match target_cell(&cells) {
        None => {
            let order: Vec<usize> = cells.iter().map(|c| c[0]).collect();
            let enc = encode(g, colors, &order);
            if best.as_ref().is_none_or(|(b, _)| enc < *b) {
                *best = Some((enc, order));
            }
        }
        Some(t) => {
            let mut orbits = Orbits::new(g.node_count());
            for gen in gens.iter().filter(|p| path.iter().all(|&x| p.apply(x) == x)) {
                orbits.absorb(gen);
            }
            let mut explored: Vec<usize> = Vec::new();
            for &v in &cells[t] {
                let root = orbits.find(v);
                if explored.contains(&root) {
                    continue;
                }
                explored.push(root);
                path.push(v);
                canon_search(g, colors, individualize(&cells, t, v), path, gens, best);
                path.pop();
            }
        }
    }
}

/// Union-find over vertex orbits.
struct Orbits {
    parent: Vec<usize>,
}

impl Orbits {
    fn new(n: usize) -> Self {
        Orbits { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn absorb(&mut self, p: &Perm) {
        for i in 0..self.parent.len() {
            let (a, b) = (self.find(i), self.find(p.apply(i)));
            if a != b {
                self.parent[a.max(b)] = a.min(b);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::enumerate_group;

    fn arc(g: ConcreteGraph) -> Arc<ConcreteGraph> {
        Arc::new(g)
    }

    fn cycle(n: usize) -> ConcreteGraph {
        ConcreteGraph::undirected_n(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn relabeled_triangles_share_encoding() {
        let a = ConcreteGraph::undirected([5, 7, 9], [(5, 7), (7, 9), (9, 5)]).unwrap();
        let b = cycle(3);
        assert_eq!(canonical_form(&a).unwrap().encoding(), canonical_form(&b).unwrap().encoding());
    }

    #[test]
    fn path_and_star_differ() {
        let p4 = ConcreteGraph::undirected_n(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let s3 = ConcreteGraph::undirected_n(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_ne!(canonical_form(&p4).unwrap().encoding(), canonical_form(&s3).unwrap().encoding());
        assert!(find_iso(&arc(p4), &arc(s3), &[]).unwrap().is_none());
    }

    #[test]
    fn empty_graph() {
        let cf = canonical_form(&ConcreteGraph::empty()).unwrap();
        assert_eq!(cf.encoding().n, 0);
        assert!(cf.encoding().bits.is_empty());
        assert!(cf.relabeling().is_empty());
    }

    #[test]
    fn size_cap() {
        let g = ConcreteGraph::new(0..65, []).unwrap();
        assert!(matches!(canonical_form(&g), Err(Error::Capacity { .. })));
        assert!(matches!(automorphism_generators(&arc(g), &[]), Err(Error::Capacity { .. })));
    }

    #[test]
    fn relabeling_maps_to_canonical_positions() {
        let g = ConcreteGraph::undirected([3, 10, 11, 40], [(3, 10), (10, 11), (11, 40)]).unwrap();
        let cf = canonical_form(&g).unwrap();
        for (id, pos) in cf.relabeling() {
            assert_eq!(g.id(cf.order()[*pos]), *id);
        }
    }

    #[test]
    fn pinned_four_cycle_iso() {
        let a = arc(ConcreteGraph::undirected([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap());
        let b = arc(ConcreteGraph::undirected([10, 20, 30, 40], [(10, 20), (20, 30), (30, 40), (40, 10)]).unwrap());
        let iso = find_iso(&a, &b, &[(1, 30)]).unwrap().unwrap();
        assert!(iso.validate().unwrap());
        assert_eq!(iso.apply(1), Some(30));
    }

    #[test]
    fn group_orders() {
        let tri = arc(cycle(3));
        assert_eq!(enumerate_group(&automorphism_generators(&tri, &[]).unwrap()).unwrap().len(), 6);
        let c4 = arc(cycle(4));
        assert_eq!(enumerate_group(&automorphism_generators(&c4, &[]).unwrap()).unwrap().len(), 8);
        let edge = arc(ConcreteGraph::new([0, 1], [(0, 1)]).unwrap());
        let gens = automorphism_generators(&edge, &[0, 1]).unwrap();
        assert!(gens.perms().is_empty());
        assert_eq!(enumerate_group(&gens).unwrap().len(), 1);
    }

    #[test]
    fn directed_cycle_has_only_rotations() {
        let g = arc(ConcreteGraph::new(0..5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap());
        assert_eq!(enumerate_group(&automorphism_generators(&g, &[]).unwrap()).unwrap().len(), 5);
    }

    #[test]
    fn marked_nodes_are_respected_by_encoding() {
        // path 0-1-2: marking an end vs the middle gives different encodings
        let p = ConcreteGraph::undirected_n(3, [(0, 1), (1, 2)]).unwrap();
        let end = canonical_form_marked(&p, &[0]).unwrap();
        let other_end = canonical_form_marked(&p, &[2]).unwrap();
        let mid = canonical_form_marked(&p, &[1]).unwrap();
        assert_eq!(end.encoding(), other_end.encoding());
        assert_ne!(end.encoding(), mid.encoding());
    }
}
