//! k-hop node and edge neighbourhoods, and restriction of isomorphisms to
//! them.
//!
//! Hop distance ignores edge direction and neighbourhoods are induced
//! subgraphs that keep their parent's node ids. For `k = 0` a node
//! neighbourhood is the single node while an edge neighbourhood holds both
//! endpoints.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{automorphism_generators, enumerate_group_with_cap, relabel, ConcreteGraph, GraphIso, NodeId};

/// Induced subgraph with one marked node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeNeighbourhood {
    pub graph: Arc<ConcreteGraph>,
    pub marked: NodeId,
}

/// Induced subgraph with a marked directed edge `(p, q)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeNeighbourhood {
    pub graph: Arc<ConcreteGraph>,
    pub marked: (NodeId, NodeId),
}

/// Which endpoint of a marked edge to restrict to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeEnd {
    /// The source `p`.
    Tail,
    /// The destination `q`.
    Head,
}

/// The rule producing neighbourhoods: everything within `hops` edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighbourhoodAssignment {
    pub hops: usize,
}

impl Default for NeighbourhoodAssignment {
    fn default() -> Self {
        NeighbourhoodAssignment { hops: 1 }
    }
}

impl NeighbourhoodAssignment {
    pub fn new(hops: usize) -> Self {
        NeighbourhoodAssignment { hops }
    }
}

/// A neighbourhood rule. [`NeighbourhoodAssignment`] is the one used
/// everywhere; the trait exists so that [`validate_assignment`] can be run
/// against other rules.
pub trait NeighbourhoodRule {
    /// Node positions (ascending) of the neighbourhood of position `p`.
    fn node_ball(&self, g: &ConcreteGraph, p: usize) -> Vec<usize>;
    /// Node positions (ascending) of the neighbourhood of edge `(p, q)`.
    fn edge_ball(&self, g: &ConcreteGraph, p: usize, q: usize) -> Vec<usize>;
    fn describe(&self) -> String;
}

impl NeighbourhoodRule for NeighbourhoodAssignment {
    fn node_ball(&self, g: &ConcreteGraph, p: usize) -> Vec<usize> {
        ball(g, &[p], self.hops)
    }

    fn edge_ball(&self, g: &ConcreteGraph, p: usize, q: usize) -> Vec<usize> {
        ball(g, &[p, q], self.hops)
    }

    fn describe(&self) -> String {
        format!("{}-hop induced neighbourhoods (hop distance ignores edge direction)", self.hops)
    }
}

/// Positions within `hops` undirected steps of any seed, ascending.
pub fn ball(g: &ConcreteGraph, seeds: &[usize], hops: usize) -> Vec<usize> {
    let n = g.node_count();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist[s] == usize::MAX {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    let mut out: Vec<usize> = seeds.to_vec();
    while let Some(v) = queue.pop_front() {
        if dist[v] == hops {
            continue;
        }
        for &w in g.out_neighbours(v).iter().chain(g.in_neighbours(v)) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn node_neighbourhood(g: &ConcreteGraph, p: NodeId, a: &NeighbourhoodAssignment) -> Result<NodeNeighbourhood> {
    node_neighbourhood_with(g, p, a)
}

pub fn edge_neighbourhood(g: &ConcreteGraph, p: NodeId, q: NodeId, a: &NeighbourhoodAssignment) -> Result<EdgeNeighbourhood> {
    edge_neighbourhood_with(g, p, q, a)
}

pub fn node_neighbourhood_with(g: &ConcreteGraph, p: NodeId, rule: &dyn NeighbourhoodRule) -> Result<NodeNeighbourhood> {
    let i = g.require_index(p)?;
    Ok(NodeNeighbourhood {
        graph: Arc::new(g.induced_by_indices(&rule.node_ball(g, i))),
        marked: p,
    })
}

pub fn edge_neighbourhood_with(
    g: &ConcreteGraph,
    p: NodeId,
    q: NodeId,
    rule: &dyn NeighbourhoodRule,
) -> Result<EdgeNeighbourhood> {
    let (i, j) = match (g.index_of(p), g.index_of(q)) {
        (Some(i), Some(j)) if g.has_edge_index(i, j) => (i, j),
        _ => return Err(Error::MissingEdge(p, q)),
    };
    Ok(EdgeNeighbourhood {
        graph: Arc::new(g.induced_by_indices(&rule.edge_ball(g, i, j))),
        marked: (p, q),
    })
}

impl EdgeNeighbourhood {
    /// Node neighbourhood of one endpoint, computed inside the edge
    /// neighbourhood (equal to the one in the parent graph because the
    /// edge neighbourhood contains the whole ball).
    pub fn endpoint(&self, end: EdgeEnd, a: &NeighbourhoodAssignment) -> NodeNeighbourhood {
        let id = match end {
            EdgeEnd::Tail => self.marked.0,
            EdgeEnd::Head => self.marked.1,
        };
        node_neighbourhood(&self.graph, id, a).expect("marked node is present")
    }
}

/// Restricts a global isomorphism `φ: G → G'` to `G_p → G'_{φ(p)}`.
/// Returns the local isomorphism; its target is the neighbourhood of `φ(p)`
/// in `φ.target`.
pub fn restrict_to_node(phi: &GraphIso, nb: &NodeNeighbourhood, a: &NeighbourhoodAssignment) -> Result<GraphIso> {
    restrict_to_node_with(phi, nb, a)
}

pub fn restrict_to_node_with(phi: &GraphIso, nb: &NodeNeighbourhood, rule: &dyn NeighbourhoodRule) -> Result<GraphIso> {
    if !phi.validate()? {
        return Err(Error::InvalidIso("global map does not preserve edges".into()));
    }
    let image = phi.apply(nb.marked).ok_or(Error::UnknownNode(nb.marked))?;
    let target = node_neighbourhood_with(phi.target(), image, rule)?;
    restrict_onto(phi, &nb.graph, target.graph)
}

/// Restricts a global isomorphism to `G_pq → G'_{φ(p)φ(q)}`.
pub fn restrict_to_edge(phi: &GraphIso, nb: &EdgeNeighbourhood, a: &NeighbourhoodAssignment) -> Result<GraphIso> {
    restrict_to_edge_with(phi, nb, a)
}

pub fn restrict_to_edge_with(phi: &GraphIso, nb: &EdgeNeighbourhood, rule: &dyn NeighbourhoodRule) -> Result<GraphIso> {
    if !phi.validate()? {
        return Err(Error::InvalidIso("global map does not preserve edges".into()));
    }
    let (p, q) = nb.marked;
    let ip = phi.apply(p).ok_or(Error::UnknownNode(p))?;
    let iq = phi.apply(q).ok_or(Error::UnknownNode(q))?;
    let target = edge_neighbourhood_with(phi.target(), ip, iq, rule)?;
    restrict_onto(phi, &nb.graph, target.graph)
}

/// `phi` restricted to the nodes of `sub`, landing in `target`. Errors when
/// the restriction is not an isomorphism onto `target`.
fn restrict_onto(phi: &GraphIso, sub: &Arc<ConcreteGraph>, target: Arc<ConcreteGraph>) -> Result<GraphIso> {
    let pairs = sub
        .nodes()
        .iter()
        .map(|&u| phi.apply(u).map(|v| (u, v)).ok_or(Error::UnknownNode(u)))
        .collect::<Result<Vec<_>>>()?;
    let local = GraphIso::from_pairs(sub.clone(), target, pairs)?;
    match local.validate() {
        Ok(true) => Ok(local),
        Ok(false) => Err(Error::InvalidIso("restriction does not preserve edges".into())),
        Err(e) => Err(e),
    }
}

/// Restricts a marked-edge isomorphism `ψ: G_pq → G'_{p'q'}` to the node
/// neighbourhood of the tail (`ψ_p`) or head (`ψ_q`).
pub fn restrict_edge_iso(
    psi: &GraphIso,
    from: &EdgeNeighbourhood,
    to: &EdgeNeighbourhood,
    end: EdgeEnd,
    a: &NeighbourhoodAssignment,
) -> Result<GraphIso> {
    if psi.source() != &from.graph || psi.target() != &to.graph {
        return Err(Error::InvalidIso("isomorphism does not connect the given neighbourhoods".into()));
    }
    if psi.apply(from.marked.0) != Some(to.marked.0) || psi.apply(from.marked.1) != Some(to.marked.1) {
        return Err(Error::InvalidIso("marked edge not mapped to marked edge".into()));
    }
    if !psi.validate()? {
        return Err(Error::InvalidIso("map does not preserve edges".into()));
    }
    let src = from.endpoint(end, a);
    let dst = to.endpoint(end, a);
    restrict_onto(psi, &src.graph, dst.graph)
}

/// Outcome of [`validate_assignment`].
#[derive(Clone, Debug, Serialize)]
pub struct AssignmentReport {
    pub rule: String,
    pub graphs: usize,
    pub edges_checked: usize,
    pub isomorphisms_checked: usize,
    pub violation: Option<String>,
}

impl AssignmentReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks the three neighbourhood-assignment criteria on a corpus:
/// containment `N_p ⊆ N_pq ⊇ N_q` on every edge, restriction of sampled
/// global relabelings, and restriction of sampled edge-neighbourhood
/// isomorphisms (relabelings and automorphisms). Reports the first violation.
pub fn validate_assignment(a: &NeighbourhoodAssignment, corpus: &[ConcreteGraph]) -> AssignmentReport {
    validate_assignment_with(a, corpus, 7)
}

pub fn validate_assignment_with(rule: &dyn NeighbourhoodRule, corpus: &[ConcreteGraph], seed: u64) -> AssignmentReport {
    let mut report = AssignmentReport {
        rule: rule.describe(),
        graphs: corpus.len(),
        edges_checked: 0,
        isomorphisms_checked: 0,
        violation: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (gi, g) in corpus.iter().enumerate() {
        if let Err(v) = check_graph(rule, g, gi, &mut rng, &mut report) {
            report.violation = Some(v);
            return report;
        }
    }
    report
}

fn check_graph(
    rule: &dyn NeighbourhoodRule,
    g: &ConcreteGraph,
    gi: usize,
    rng: &mut ChaCha8Rng,
    report: &mut AssignmentReport,
) -> std::result::Result<(), String> {
    let g = Arc::new(g.clone());
    // criterion 2: containment
    for (i, j) in g.edge_indices() {
        report.edges_checked += 1;
        let e = rule.edge_ball(&g, i, j);
        for end in [i, j] {
            let nb = rule.node_ball(&g, end);
            if let Some(&missing) = nb.iter().find(|x| e.binary_search(x).is_err()) {
                return Err(format!(
                    "criterion 2: graph {gi}, edge ({}, {}): node {} of N_{} missing from N_pq",
                    g.id(i),
                    g.id(j),
                    g.id(missing),
                    g.id(end)
                ));
            }
        }
        if e.binary_search(&i).is_err() || e.binary_search(&j).is_err() {
            return Err(format!("criterion 2: graph {gi}, edge ({}, {}) lacks an endpoint", g.id(i), g.id(j)));
        }
    }
    // criterion 1: a random relabeling restricts to local isomorphisms
    let mut ids: Vec<NodeId> = (0..g.node_count()).map(|k| k * 3 + 1 + rng.random_range(0..3)).collect();
    ids.shuffle(rng);
    let (_, phi) = relabel(&g, &ids).map_err(|e| e.to_string())?;
    report.isomorphisms_checked += 1;
    for &p in g.nodes() {
        let nb = node_neighbourhood_with(&g, p, rule).map_err(|e| e.to_string())?;
        let local = restrict_to_node_with(&phi, &nb, rule).map_err(|e| format!("criterion 1: graph {gi}, node {p}: {e}"))?;
        if local.apply(p) != phi.apply(p) {
            return Err(format!("criterion 1: graph {gi}, node {p}: marked node not preserved"));
        }
    }
    for (p, q) in g.edges() {
        let nb = edge_neighbourhood_with(&g, p, q, rule).map_err(|e| e.to_string())?;
        restrict_to_edge_with(&phi, &nb, rule).map_err(|e| format!("criterion 1: graph {gi}, edge ({p}, {q}): {e}"))?;
        // criterion 3: edge-neighbourhood automorphisms and a relabeling of
        // the edge neighbourhood restrict to node isomorphisms
        let gens = automorphism_generators(&nb.graph, &[p, q]).map_err(|e| e.to_string())?;
        let mut local_isos: Vec<(GraphIso, Arc<ConcreteGraph>)> = match enumerate_group_with_cap(&gens, 256) {
            Ok(all) => all.into_iter().map(|x| (x, nb.graph.clone())).collect(),
            Err(_) => gens.generators().into_iter().map(|x| (x, nb.graph.clone())).collect(),
        };
        let mut fresh: Vec<NodeId> = (0..nb.graph.node_count()).map(|k| 1000 + 2 * k).collect();
        fresh.shuffle(rng);
        let (relabeled, psi) = relabel(&nb.graph, &fresh).map_err(|e| e.to_string())?;
        local_isos.push((psi, relabeled));
        for (psi, target) in local_isos {
            report.isomorphisms_checked += 1;
            let (tp, tq) = (psi.apply(p).unwrap(), psi.apply(q).unwrap());
            for (src, dst) in [(p, tp), (q, tq)] {
                let from = node_neighbourhood_with(&nb.graph, src, rule).map_err(|e| e.to_string())?;
                let to = node_neighbourhood_with(&target, dst, rule).map_err(|e| e.to_string())?;
                restrict_onto(&psi, &from.graph, to.graph)
                    .map_err(|e| format!("criterion 3: graph {gi}, edge ({p}, {q}), endpoint {src}: {e}"))?;
            }
        }
    }
    Ok(())
}
