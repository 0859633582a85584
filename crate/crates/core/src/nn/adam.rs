use crate::error::{Error, Result};

use super::{ParamStore, Real};

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(store: &ParamStore<T>, rate: f64) -> Self {
        AdamState {
            rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: (0..store.len()).map(|i| vec![T::zero(); store.get(i).len()]).collect(),
            v: (0..store.len()).map(|i| vec![T::zero(); store.get(i).len()]).collect(),
        }
    }

    /// One update from the gradients held in `store`; parameters without a
    /// gradient are treated as having a zero gradient.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        if store.len() != self.m.len() {
            return Err(Error::Shape(format!("{} parameters, optimizer has {}", store.len(), self.m.len())));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let c1 = T::from_f64(1.0 - self.beta1.powi(t));
        let c2 = T::from_f64(1.0 - self.beta2.powi(t));
        let (rate, eps) = (T::from_f64(self.rate), T::from_f64(self.eps));
        for i in 0..store.len() {
            let p = store.get_mut(i);
            let Some(g) = p.grad.take() else { continue };
            if g.len() != p.len() || self.m[i].len() != p.len() {
                return Err(Error::Shape(format!("gradient of {} entries for {}", g.len(), p.len())));
            }
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (k, w) in p.data_mut().iter_mut().enumerate() {
                m[k] = b1 * m[k] + (T::one() - b1) * g[k];
                v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                *w = *w - rate * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn store(x: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("w", Tensor::new(1, 2, vec![x, -x]).unwrap());
        s
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = store(0.3);
        let mut adam = AdamState::new(&s, 1e-3);
        s.get_mut(0).grad = Some(vec![0.0, 0.0]);
        adam.step(&mut s).unwrap();
        assert_eq!(s.get(0).data(), &[0.3, -0.3]);
    }

    #[test]
    fn first_step_is_rate_times_sign() {
        let mut s = store(0.0);
        let mut adam = AdamState::new(&s, 1e-3);
        s.get_mut(0).grad = Some(vec![2.5, -0.01]);
        adam.step(&mut s).unwrap();
        let d = s.get(0).data();
        assert!((d[0] + 1e-3).abs() < 1e-9 && (d[1] - 1e-3).abs() < 1e-9, "{d:?}");
    }

    #[test]
    fn constant_gradient_step_tends_to_rate() {
        let mut s = store(0.0);
        let mut adam = AdamState::new(&s, 1e-2);
        let mut last = 0.0;
        for _ in 0..2000 {
            s.get_mut(0).grad = Some(vec![0.7, 0.7]);
            let before = s.get(0).data()[0];
            adam.step(&mut s).unwrap();
            last = before - s.get(0).data()[0];
        }
        assert!((last - 1e-2).abs() < 1e-6, "{last}");
    }
}
