//! Synthetic expressiveness suites on 25 nodes with mean degree 6:
//! (A) non-isomorphic non-regular random graphs, (B) non-isomorphic random
//! 6-regular graphs, (C) the strongly regular graphs with parameters
//! (25, 12, 5, 6), (D) relabelings of a single graph.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{canonical_form, ConcreteGraph};

use super::graph6::parse_graph6;

pub const SUITE_NODES: usize = 25;
const SUITE_SIZE: usize = 100;
const DEGREE: usize = 6;
const MAX_ATTEMPTS: usize = 100_000;

const SR25: &str = include_str!("../../data/sr25.g6");

/// The 15 strongly regular graphs with parameters (25, 12, 5, 6).
pub fn strongly_regular_25() -> Result<Vec<ConcreteGraph>> {
    parse_graph6(SR25, "sr25.g6")
}

#[derive(Clone, Debug)]
pub struct Suites {
    pub non_regular: Vec<ConcreteGraph>,
    pub regular: Vec<ConcreteGraph>,
    pub strongly_regular: Vec<ConcreteGraph>,
    pub isomorphic: Vec<ConcreteGraph>,
}

impl Suites {
    /// `(name, graphs)` in suite order A–D.
    pub fn named(&self) -> [(&'static str, &[ConcreteGraph]); 4] {
        [
            ("A-nonregular", &self.non_regular),
            ("B-regular", &self.regular),
            ("C-strongly-regular", &self.strongly_regular),
            ("D-isomorphic", &self.isomorphic),
        ]
    }
}

pub fn synth_suites(seed: u64) -> Result<Suites> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let non_regular = distinct(&mut rng, "non-regular graphs", |r| {
        let g = erdos_renyi(r);
        Ok((!is_regular(&g)).then_some(g))
    })?;
    let regular = distinct(&mut rng, "6-regular graphs", random_regular)?;
    let base = loop {
        let g = erdos_renyi(&mut rng);
        if !is_regular(&g) {
            break g;
        }
    };
    let mut ids: Vec<usize> = (0..SUITE_NODES).collect();
    let isomorphic = (0..SUITE_SIZE)
        .map(|_| {
            ids.shuffle(&mut rng);
            base.relabeled(&ids)
        })
        .collect::<Result<_>>()?;
    Ok(Suites {
        non_regular,
        regular,
        strongly_regular: strongly_regular_25()?,
        isomorphic,
    })
}

/// Draws until `SUITE_SIZE` pairwise non-isomorphic graphs are found.
fn distinct(
    rng: &mut ChaCha8Rng,
    what: &str,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> Result<Option<ConcreteGraph>>,
) -> Result<Vec<ConcreteGraph>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(SUITE_SIZE);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(g) = draw(rng)? {
            if seen.insert(canonical_form(&g)?.encoding().clone()) {
                out.push(g);
                if out.len() == SUITE_SIZE {
                    return Ok(out);
                }
            }
        }
    }
    Err(Error::Generation {
        attempts: MAX_ATTEMPTS,
        what: what.into(),
    })
}

/// G(n, p) with expected degree 6.
fn erdos_renyi(rng: &mut impl Rng) -> ConcreteGraph {
    let p = DEGREE as f64 / (SUITE_NODES - 1) as f64;
    let mut edges = Vec::new();
    for j in 1..SUITE_NODES {
        for i in 0..j {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    ConcreteGraph::undirected_n(SUITE_NODES, edges).expect("simple graph")
}

/// Pairing of degree stubs, choosing only pairs that keep the graph
/// simple; `None` when the process gets stuck.
fn random_regular(rng: &mut impl Rng) -> Result<Option<ConcreteGraph>> {
    let mut stubs: Vec<usize> = (0..SUITE_NODES).flat_map(|v| std::iter::repeat_n(v, DEGREE)).collect();
    let mut set = HashSet::new();
    let ok = |set: &HashSet<(usize, usize)>, a: usize, b: usize| a != b && !set.contains(&(a.min(b), a.max(b)));
    while !stubs.is_empty() {
        let n = stubs.len();
        let mut pick = None;
        for _ in 0..50 {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if ok(&set, stubs[i], stubs[j]) {
                pick = Some((i, j));
                break;
            }
        }
        if pick.is_none() {
            let valid: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| ok(&set, stubs[i], stubs[j]))
                .collect();
            match valid.choose(rng) {
                Some(&p) => pick = Some(p),
                None => return Ok(None),
            }
        }
        let (i, j) = pick.expect("chosen");
        let (a, b) = (stubs[i], stubs[j]);
        set.insert((a.min(b), a.max(b)));
        stubs.swap_remove(i.max(j));
        stubs.swap_remove(i.min(j));
    }
    Ok(Some(ConcreteGraph::undirected_n(SUITE_NODES, set)?))
}

pub(crate) fn is_regular(g: &ConcreteGraph) -> bool {
    let d: Vec<usize> = (0..g.node_count()).map(|i| g.undirected_degree(i)).collect();
    d.windows(2).all(|w| w[0] == w[1])
}
