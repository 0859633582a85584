//! The weight-shared linear layer: output at `q` aggregates `k_pq v_p` over
//! the in-edges of `q`, with `k_pq` transported from its class kernel.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{ConcreteGraph, GraphIso};
use crate::kernel::{transport_perms, SharedKernel};
use crate::neighbourhood::NeighbourhoodAssignment;
use crate::rep::{lift_global, GlobalFeature, RepSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Sum,
    /// Divides by the in-degree of the receiving node.
    Mean,
}

#[derive(Clone, Debug)]
pub struct NgnLayer {
    pub kernel: SharedKernel,
    pub aggregation: Aggregation,
    /// When set, edges of unseen classes are errors instead of being
    /// solved on the fly.
    pub strict: bool,
}

impl NgnLayer {
    pub fn new(rho: RepSpec, rho_out: RepSpec, assignment: NeighbourhoodAssignment, seed: u64) -> Self {
        NgnLayer {
            kernel: SharedKernel::new(rho, rho_out, assignment, seed),
            aggregation: Aggregation::Sum,
            strict: false,
        }
    }

    /// Pre-solves every edge class of `corpus`.
    pub fn from_corpus(
        corpus: &[ConcreteGraph],
        rho: RepSpec,
        rho_out: RepSpec,
        assignment: NeighbourhoodAssignment,
        seed: u64,
    ) -> Result<Self> {
        Ok(NgnLayer {
            kernel: SharedKernel::from_corpus(corpus, rho, rho_out, assignment, seed)?,
            aggregation: Aggregation::Sum,
            strict: false,
        })
    }

    pub fn rho(&self) -> &RepSpec {
        &self.kernel.rho
    }

    pub fn rho_out(&self) -> &RepSpec {
        &self.kernel.rho_out
    }

    pub fn assignment(&self) -> &NeighbourhoodAssignment {
        &self.kernel.assignment
    }

    /// Solves any classes of `g` not yet in the table (unless strict).
    pub fn prepare(&mut self, g: &ConcreteGraph) -> Result<()> {
        let solve = !self.strict;
        for (p, q) in g.edges() {
            self.kernel.resolve(g, p, q, solve)?;
        }
        Ok(())
    }

    /// Forward pass, solving unseen classes first unless strict.
    pub fn forward(&mut self, g: &ConcreteGraph, v: &GlobalFeature<f64>) -> Result<GlobalFeature<f64>> {
        self.prepare(g)?;
        self.forward_solved(g, v)
    }

    /// Forward pass over already-solved classes.
    pub fn forward_solved(&self, g: &ConcreteGraph, v: &GlobalFeature<f64>) -> Result<GlobalFeature<f64>> {
        let a = self.kernel.assignment;
        let (rho, rho_out) = (&self.kernel.rho, &self.kernel.rho_out);
        v.check(g, rho, &a)?;
        let mut out = GlobalFeature::zeros(g, rho_out, &a);
        let mut mats = HashMap::new();
        // edges() is sorted by source, so each target sums in ascending
        // source order
        for (p, q) in g.edges() {
            let e = self.kernel.lookup(g, p, q)?;
            let (pp, pq) = transport_perms(&self.kernel.classes()[e.class], rho, rho_out, &e.transport)?;
            let k = mats.entry(e.class).or_insert_with(|| self.kernel.kernels()[e.class].matrix(rho, rho_out));
            let vp = v.block(p).expect("checked");
            let iq = g.index_of(q).expect("edge endpoint");
            let dst = &mut out.blocks_mut()[iq];
            for r in 0..k.nrows() {
                let s: f64 = (0..k.ncols()).map(|c| k[(r, c)] * vp[pp[c]]).sum();
                dst[pq[r]] += s;
            }
        }
        if self.aggregation == Aggregation::Mean {
            for (i, b) in out.blocks_mut().iter_mut().enumerate() {
                let d = g.in_neighbours(i).len().max(1) as f64;
                b.iter_mut().for_each(|x| *x /= d);
            }
        }
        Ok(out)
    }
}

/// `‖ρ̂′(φ)(K_G v) − K_{φG}(ρ̂(φ) v)‖_∞`.
pub fn check_naturality(layer: &mut NgnLayer, g: &ConcreteGraph, phi: &GraphIso, v: &GlobalFeature<f64>) -> Result<f64> {
    let a = *layer.assignment();
    let out = layer.forward(g, v)?;
    let left = lift_global(phi, &out, layer.rho_out(), &a)?;
    let moved = lift_global(phi, v, layer.rho(), &a)?;
    let right = layer.forward(phi.target(), &moved)?;
    Ok(left.max_abs_diff(&right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::graph::{automorphism_generators, enumerate_group, relabel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn k1() -> NeighbourhoodAssignment {
        NeighbourhoodAssignment::default()
    }

    #[test]
    fn edgeless_graph_gives_zero() {
        let g = ConcreteGraph::new([1, 4, 6], []).unwrap();
        let mut layer = NgnLayer::new(RepSpec::standard(2), RepSpec::standard(3), k1(), 0);
        let v = GlobalFeature::from_fn(&g, &RepSpec::standard(2), &k1(), || 1.0);
        let out = layer.forward(&g, &v).unwrap();
        assert!(out.blocks().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn single_edge_trivial_weight_one() {
        let g = ConcreteGraph::new([0, 1], [(0, 1)]).unwrap();
        let t = RepSpec::trivial(1);
        let mut layer = NgnLayer::from_corpus(std::slice::from_ref(&g), t.clone(), t.clone(), k1(), 0).unwrap();
        layer.kernel.kernels_mut()[0].weights[0][0] = 1.0;
        let v = GlobalFeature::new(&g, vec![vec![2.5], vec![-1.0]]).unwrap();
        let out = layer.forward(&g, &v).unwrap();
        // the basis element is ±1; weight 1 gives ±v_p
        let sign = layer.kernel.kernels()[0].bases[0].basis[0][0];
        assert_eq!(out.blocks(), &[vec![0.0], vec![2.5 * sign]]);
    }

    #[test]
    fn trivial_reps_with_one_weight_is_invariant_message_passing() {
        let g = ConcreteGraph::undirected_n(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (1, 4), (0, 3)]).unwrap();
        let (cin, cout) = (2, 3);
        let mut layer = NgnLayer::from_corpus(std::slice::from_ref(&g), RepSpec::trivial(cin), RepSpec::trivial(cout), k1(), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..cin * cout).map(|_| rng.random_range(-1.0..1.0)).collect();
        for k in layer.kernel.kernels_mut() {
            let sign = k.bases[0].basis[0][0];
            k.weights[0] = w.iter().map(|x| x * sign).collect();
        }
        let v = GlobalFeature::from_fn(&g, &RepSpec::trivial(cin), &k1(), || rng.random_range(-1.0..1.0));
        let out = layer.forward(&g, &v).unwrap();
        for (q, block) in out.blocks().iter().enumerate() {
            let mut want = vec![0.0; cout];
            for &p in g.in_neighbours(q) {
                for (b, slot) in want.iter_mut().enumerate() {
                    *slot += (0..cin).map(|a| w[b * cin + a] * v.blocks()[p][a]).sum::<f64>();
                }
            }
            for (x, y) in block.iter().zip(&want) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn naturality_under_relabeling_and_automorphisms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Arc::new(ConcreteGraph::undirected_n(7, [(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 6), (6, 4), (0, 5)]).unwrap());
        let spec = RepSpec::standard(2);
        let mut layer = NgnLayer::new(spec.clone(), "standard*1+trivial*2".parse().unwrap(), k1(), 3);
        let v = GlobalFeature::from_fn(&g, &spec, &k1(), || rng.random_range(-1.0..1.0));
        let id = GraphIso::identity(g.clone());
        assert_eq!(check_naturality(&mut layer, &g, &id, &v).unwrap(), 0.0);
        let (_, phi) = relabel(&g, &[40, 12, 7, 33, 90, 1, 18]).unwrap();
        assert!(check_naturality(&mut layer, &g, &phi, &v).unwrap() < 1e-10);

        let c4 = Arc::new(ConcreteGraph::undirected_n(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap());
        let mut layer = NgnLayer::new(spec.clone(), spec.clone(), k1(), 4);
        let v = GlobalFeature::from_fn(&c4, &spec, &k1(), || rng.random_range(-1.0..1.0));
        for chi in enumerate_group(&automorphism_generators(&c4, &[]).unwrap()).unwrap() {
            assert!(check_naturality(&mut layer, &c4, &chi, &v).unwrap() < 1e-10);
        }
    }

    #[test]
    fn strict_mode_reports_class_miss() {
        let g = ConcreteGraph::undirected_n(3, [(0, 1), (1, 2)]).unwrap();
        let mut layer = NgnLayer::new(RepSpec::standard(1), RepSpec::standard(1), k1(), 0);
        layer.strict = true;
        let v = GlobalFeature::zeros(&g, &RepSpec::standard(1), &k1());
        assert!(matches!(layer.forward(&g, &v), Err(Error::ClassMiss(..))));
    }

    #[test]
    fn mean_divides_by_in_degree() {
        let g = ConcreteGraph::new(0..3, [(0, 2), (1, 2)]).unwrap();
        let t = RepSpec::trivial(1);
        let mut layer = NgnLayer::new(t.clone(), t.clone(), k1(), 2);
        let v = GlobalFeature::new(&g, vec![vec![1.0], vec![3.0], vec![0.0]]).unwrap();
        let sum = layer.forward(&g, &v).unwrap();
        layer.aggregation = Aggregation::Mean;
        let mean = layer.forward(&g, &v).unwrap();
        assert!((mean.blocks()[2][0] * 2.0 - sum.blocks()[2][0]).abs() < 1e-15);
    }
}
