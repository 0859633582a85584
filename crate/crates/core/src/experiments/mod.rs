//! Harnesses behind the command-line verbs: law checks, expressiveness,
//! lattice reduction, runtime scaling and desk-scale training.

pub mod bench;
pub mod expressiveness;
pub mod gradcheck;
pub mod lattice;
pub mod naturality;
pub mod oracle;
pub mod train;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::graph::{relabel, ConcreteGraph, GraphIso};

/// Undirected `G(n, p)` on ids `0..n`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> ConcreteGraph {
    let mut edges = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    ConcreteGraph::undirected_n(n, edges).expect("simple graph")
}

/// Relabels `g` onto fresh ids drawn from `0..10n` in random order.
pub fn random_relabeling(rng: &mut impl Rng, g: &Arc<ConcreteGraph>) -> Result<GraphIso> {
    let n = g.node_count();
    let mut pool: Vec<usize> = (0..10 * n.max(1)).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    Ok(relabel(g, &pool)?.1)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
