//! Residual of the naturality law over random (graph, relabeling, feature)
//! triples, for the solver-based layer and the GCN² layer.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::GraphIso;
use crate::layer::NgnLayer;
use crate::message::{ngn_gcn2_forward_batched, GcnMessageNet, NetSpec};
use crate::neighbourhood::NeighbourhoodAssignment;
use crate::nn::ParamStore;
use crate::rep::{lift_global, GlobalFeature, RepSpec};

use super::{random_graph, random_relabeling};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NaturalityConfig {
    pub trials: usize,
    pub max_nodes: usize,
    pub seed: u64,
    pub rho: RepSpec,
    pub rho_out: RepSpec,
    /// Standard channels in and out of the GCN² layer.
    pub gcn2_channels: (usize, usize),
    pub net: NetSpec,
    pub hops: usize,
    /// Only test the identity relabeling.
    pub identity_only: bool,
    /// Adds noise to every solved basis (negative control).
    pub corrupt_kernel: bool,
    /// Pre-solve classes on the source graph and look them up strictly on
    /// the relabeled one.
    pub strict_classes: bool,
    pub tolerance: f64,
}

impl Default for NaturalityConfig {
    fn default() -> Self {
        NaturalityConfig {
            trials: 200,
            max_nodes: 20,
            seed: 0,
            rho: RepSpec::standard(2),
            rho_out: "trivial*1+standard*2".parse().expect("valid"),
            gcn2_channels: (2, 3),
            net: NetSpec {
                hidden: 8,
                ..NetSpec::default()
            },
            hops: 1,
            identity_only: false,
            corrupt_kernel: false,
            strict_classes: false,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NaturalityReport {
    pub trials: usize,
    pub max_nodes: usize,
    pub solver_max_residual: f64,
    pub gcn2_max_residual: f64,
    pub classes_solved: usize,
    pub tolerance: f64,
    pub passed: bool,
    pub seconds: f64,
    /// Per trial: nodes, edges, solver residual, GCN² residual.
    pub rows: Vec<(usize, usize, f64, f64)>,
}

pub fn run_naturality(cfg: &NaturalityConfig) -> Result<NaturalityReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let a = NeighbourhoodAssignment::new(cfg.hops);
    let (ci, co) = cfg.gcn2_channels;
    let mut store = ParamStore::<f64>::new();
    let net = GcnMessageNet::new(&mut store, "msg", ci, co, &cfg.net, &mut rng);
    // nonzero biases so that every parameter is exercised
    for i in 0..store.len() {
        if store.name(i).ends_with("bias") {
            store.get_mut(i).data_mut().iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
        }
    }
    let mut rows = Vec::with_capacity(cfg.trials);
    let mut classes = 0;
    for _ in 0..cfg.trials {
        let n = rng.random_range(2..=cfg.max_nodes.max(2));
        let p = rng.random_range(0.1..0.4);
        let g = Arc::new(random_graph(&mut rng, n, p));
        let phi = if cfg.identity_only {
            GraphIso::identity(g.clone())
        } else {
            random_relabeling(&mut rng, &g)?
        };
        let v = GlobalFeature::from_fn(&g, &cfg.rho, &a, || rng.random_range(-1.0..1.0));

        let mut layer = NgnLayer::new(cfg.rho.clone(), cfg.rho_out.clone(), a, rng.random());
        layer.prepare(&g)?;
        if cfg.strict_classes {
            layer.strict = true;
        } else {
            layer.prepare(phi.target())?;
        }
        if cfg.corrupt_kernel {
            for k in layer.kernel.kernels_mut() {
                for b in &mut k.bases {
                    b.basis.iter_mut().flatten().for_each(|x| *x += rng.random_range(-0.5..0.5));
                }
            }
        }
        classes += layer.kernel.classes().len();
        let out = layer.forward_solved(&g, &v)?;
        let left = lift_global(&phi, &out, &cfg.rho_out, &a)?;
        let moved = lift_global(&phi, &v, &cfg.rho, &a)?;
        let right = layer.forward_solved(phi.target(), &moved)?;
        let r_solver = left.max_abs_diff(&right);

        let w = GlobalFeature::from_fn(&g, &RepSpec::standard(ci), &a, || rng.random_range(-1.0..1.0));
        let out = ngn_gcn2_forward_batched(&store, &net, &g, &w, &a)?;
        let left = lift_global(&phi, &out, &RepSpec::standard(co), &a)?;
        let moved = lift_global(&phi, &w, &RepSpec::standard(ci), &a)?;
        let right = ngn_gcn2_forward_batched(&store, &net, phi.target(), &moved, &a)?;
        let r_gcn2 = left.max_abs_diff(&right);
        rows.push((n, g.edge_count(), r_solver, r_gcn2));
    }
    let solver_max = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let gcn2_max = rows.iter().map(|r| r.3).fold(0.0, f64::max);
    Ok(NaturalityReport {
        trials: cfg.trials,
        max_nodes: cfg.max_nodes,
        solver_max_residual: solver_max,
        gcn2_max_residual: gcn2_max,
        classes_solved: classes,
        tolerance: cfg.tolerance,
        passed: solver_max < cfg.tolerance && gcn2_max < cfg.tolerance,
        seconds: start.elapsed().as_secs_f64(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> NaturalityConfig {
        NaturalityConfig {
            trials: 12,
            max_nodes: 9,
            ..NaturalityConfig::default()
        }
    }

    #[test]
    fn random_relabelings_pass() {
        let r = run_naturality(&small()).unwrap();
        assert!(r.passed, "{} {}", r.solver_max_residual, r.gcn2_max_residual);
        assert_eq!(r.rows.len(), 12);
    }

    #[test]
    fn identity_relabelings_give_zero() {
        let r = run_naturality(&NaturalityConfig {
            identity_only: true,
            ..small()
        })
        .unwrap();
        assert_eq!(r.solver_max_residual, 0.0);
        assert_eq!(r.gcn2_max_residual, 0.0);
    }

    #[test]
    fn corrupted_kernels_fail() {
        let r = run_naturality(&NaturalityConfig {
            corrupt_kernel: true,
            ..small()
        })
        .unwrap();
        assert!(!r.passed);
        assert!(r.solver_max_residual > 1e-3);
    }
}
