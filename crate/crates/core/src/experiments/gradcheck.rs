//! Analytic gradients of the GCN² classification loss against central
//! finite differences, in 64-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::message::NetSpec;
use crate::model::{Model, ModelConfig};
use crate::nn::Tensor;

use super::random_graph;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Floor on the denominator of the relative error.
pub const REL_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub graphs: usize,
    pub entries: usize,
    pub max_relative_error: f64,
    /// Worst entry: `(graph, parameter name, analytic, numeric)`.
    pub worst: Option<(usize, String, f64, f64)>,
}

/// Checks every parameter entry of a small GCN² classifier on `graphs`
/// random graphs, one graph per loss.
pub fn gradient_check(graphs: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig::gcn2(2, 3, 2, NetSpec { hidden: 4, ..NetSpec::default() })
        .with_classes(3)
        .with_seed(seed);
    let mut model = Model::<f64>::new(cfg)?;
    // nonzero biases so their rows take part
    for i in 0..model.store.len() {
        model.store.get_mut(i).data_mut().iter_mut().for_each(|x| *x += rng.random_range(-0.3..0.3));
    }
    let mut worst: Option<(usize, String, f64, f64)> = None;
    let mut max_rel: f64 = 0.0;
    let mut entries = 0;
    for gi in 0..graphs {
        let n = rng.random_range(4..=9);
        let g = random_graph(&mut rng, n, 0.45);
        let x = Tensor::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
        let label = rng.random_range(0..3);
        let batch = model.prepare(&[&g], &[&x])?;
        model.store.zero_grads();
        model.loss_and_grads(&batch, &[label])?;
        for p in 0..model.store.len() {
            let analytic = model.store.get(p).grad.clone().expect("every parameter receives a gradient");
            for k in 0..analytic.len() {
                let orig = model.store.get(p).data()[k];
                model.store.get_mut(p).data_mut()[k] = orig + FD_STEP;
                let up = model.loss(&batch, &[label])?;
                model.store.get_mut(p).data_mut()[k] = orig - FD_STEP;
                let down = model.loss(&batch, &[label])?;
                model.store.get_mut(p).data_mut()[k] = orig;
                let numeric = (up - down) / (2.0 * FD_STEP);
                let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(REL_FLOOR);
                entries += 1;
                if rel > max_rel || worst.is_none() {
                    max_rel = max_rel.max(rel);
                    worst = Some((gi, model.store.name(p).to_string(), analytic[k], numeric));
                }
            }
        }
    }
    Ok(GradCheckReport {
        graphs,
        entries,
        max_relative_error: max_rel,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_differences() {
        let r = gradient_check(2, 11).unwrap();
        assert!(r.entries > 100);
        assert!(r.max_relative_error < 1e-5, "{r:?}");
    }
}
