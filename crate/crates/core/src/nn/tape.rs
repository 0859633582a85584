use std::sync::Arc;

use crate::error::{Error, Result};

use super::{ParamStore, Real, Sparse, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op<T> {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Relu(Var),
    Scale(Var, T),
    Sparse(Arc<Sparse<T>>, Var),
    Concat(Var, Var),
    Sum(Var),
    /// Stores the softmax probabilities for the backward rule.
    SoftmaxCe(Var, Arc<Vec<usize>>, Vec<T>),
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Records operations in evaluation order so that gradients can be
/// propagated back in one reverse sweep.
pub struct Tape<T: Real> {
    nodes: Vec<Node<T>>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Tape { nodes: Vec::new() }
    }
}

/// Gradients of one backward pass, indexed by [`Var`].
pub struct Grads<T> {
    grads: Vec<Option<Vec<T>>>,
    params: Vec<(usize, usize)>,
}

impl<T: Real> Grads<T> {
    pub fn of(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    /// Adds parameter gradients into the store's gradient slots.
    /// Parameters not reached by the loss get an explicit zero gradient.
    pub fn accumulate_into(&self, store: &mut ParamStore<T>) {
        for &(node, param) in &self.params {
            let t = store.get_mut(param);
            match &self.grads[node] {
                Some(g) => t.accumulate_grad(g),
                None => t.accumulate_grad(&vec![T::zero(); t.len()]),
            }
        }
    }
}

fn shape_err(what: &str, a: [usize; 2], b: [usize; 2]) -> Error {
    Error::Shape(format!("{what}: {a:?} vs {b:?}"))
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn take_value(mut self, v: Var) -> Tensor<T> {
        self.nodes.swap_remove(v.0).value
    }

    /// A constant input.
    pub fn leaf(&mut self, t: Tensor<T>) -> Var {
        self.push(t, Op::Leaf)
    }

    /// A trainable parameter; its gradient is routed back to `store[idx]`.
    pub fn param(&mut self, store: &ParamStore<T>, idx: usize) -> Var {
        let mut t = store.get(idx).clone();
        t.grad = None;
        self.push(t, Op::Param(idx))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        Ok(self.push(v, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(shape_err("add", x.shape(), y.shape()));
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| p + q).collect();
        let v = Tensor::new(x.rows(), x.cols(), data)?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    /// Adds a `1 × n` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (x, b) = (self.value(a), self.value(row));
        if b.rows() != 1 || b.cols() != x.cols() {
            return Err(shape_err("add_row", x.shape(), b.shape()));
        }
        let mut v = x.clone();
        let w = v.cols();
        if w > 0 {
            for r in v.data_mut().chunks_mut(w) {
                r.iter_mut().zip(b.data()).for_each(|(p, &q)| *p = *p + q);
            }
        }
        Ok(self.push(v, Op::AddRow(a, row)))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| if x > T::zero() { x } else { T::zero() });
        self.push(v, Op::Relu(a))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    /// `S · a` for a constant sparse `S` (gathers, scatters, aggregation).
    pub fn sparse(&mut self, s: &Arc<Sparse<T>>, a: Var) -> Result<Var> {
        let v = s.apply(self.value(a))?;
        Ok(self.push(v, Op::Sparse(s.clone(), a)))
    }

    pub fn gather_rows(&mut self, a: Var, idx: &[Option<usize>]) -> Result<Var> {
        let s = Arc::new(Sparse::gather(idx, self.value(a).rows())?);
        self.sparse(&s, a)
    }

    pub fn scatter_add_rows(&mut self, a: Var, idx: &[usize], rows: usize) -> Result<Var> {
        let s = Arc::new(Sparse::scatter(idx, rows)?);
        self.sparse(&s, a)
    }

    /// Sum over all rows, `1 × cols`.
    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).rows();
        self.scatter_add_rows(a, &vec![0; n], 1)
    }

    /// Mean over all rows, `1 × cols`.
    pub fn row_mean(&mut self, a: Var) -> Result<Var> {
        let n = self.value(a).rows();
        let s = Arc::new(Sparse::group_mean(&vec![0; n], 1)?);
        self.sparse(&s, a)
    }

    /// `[a | b]`.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (x, y) = (self.value(a), self.value(b));
        if x.rows() != y.rows() {
            return Err(shape_err("concat_cols", x.shape(), y.shape()));
        }
        let (ca, cb) = (x.cols(), y.cols());
        let mut data = Vec::with_capacity(x.rows() * (ca + cb));
        for r in 0..x.rows() {
            data.extend_from_slice(x.row(r));
            data.extend_from_slice(y.row(r));
        }
        let v = Tensor::new(x.rows(), ca + cb, data)?;
        Ok(self.push(v, Op::Concat(a, b)))
    }

    /// Sum of all entries, a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().fold(T::zero(), |acc, &x| acc + x);
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Mean softmax cross-entropy of `logits` (`batch × classes`) against
    /// class indices.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let x = self.value(logits);
        let (b, k) = (x.rows(), x.cols());
        if labels.len() != b || labels.iter().any(|&l| l >= k) || b == 0 {
            return Err(Error::Shape(format!("{} labels for {b}x{k} logits", labels.len())));
        }
        let mut probs = Vec::with_capacity(b * k);
        let mut loss = T::zero();
        for (r, &l) in labels.iter().enumerate() {
            let row = x.row(r);
            let m = row.iter().fold(T::neg_infinity(), |a, &v| a.max(v));
            let z = row.iter().fold(T::zero(), |a, &v| a + (v - m).exp());
            loss = loss + z.ln() + m - row[l];
            probs.extend(row.iter().map(|&v| (v - m).exp() / z));
        }
        let v = Tensor::scalar(loss / T::from_f64(b as f64));
        Ok(self.push(v, Op::SoftmaxCe(logits, Arc::new(labels.to_vec()), probs)))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Grads<T>> {
        if self.value(loss).shape() != [1, 1] {
            return Err(Error::Contract(format!("backward needs a scalar loss, got {:?}", self.value(loss).shape())));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![T::one()]);
        let mut params = Vec::new();
        for i in (0..=loss.0).rev() {
            if let Op::Param(p) = self.nodes[i].op {
                params.push((i, p));
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        for i in loss.0 + 1..self.nodes.len() {
            if let Op::Param(p) = self.nodes[i].op {
                params.push((i, p));
            }
        }
        Ok(Grads { grads, params })
    }

    fn propagate(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (x, y) = (self.value(*a), self.value(*b));
                let (m, k, n) = (x.rows(), x.cols(), y.cols());
                let mut ga = vec![T::zero(); m * k];
                T::gemm(m, n, k, T::one(), g, false, y.data(), true, T::zero(), &mut ga);
                let mut gb = vec![T::zero(); k * n];
                T::gemm(k, m, n, T::one(), x.data(), true, g, false, T::zero(), &mut gb);
                add_into(grads, *a, &ga);
                add_into(grads, *b, &gb);
            }
            Op::Add(a, b) => {
                add_into(grads, *a, g);
                add_into(grads, *b, g);
            }
            Op::AddRow(a, row) => {
                add_into(grads, *a, g);
                let w = self.value(*row).cols();
                let mut gr = vec![T::zero(); w];
                if w > 0 {
                    for r in g.chunks(w) {
                        gr.iter_mut().zip(r).for_each(|(p, &q)| *p = *p + q);
                    }
                }
                add_into(grads, *row, &gr);
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let ga: Vec<T> = x.data().iter().zip(g).map(|(&v, &d)| if v > T::zero() { d } else { T::zero() }).collect();
                add_into(grads, *a, &ga);
            }
            Op::Scale(a, s) => {
                let ga: Vec<T> = g.iter().map(|&d| d * *s).collect();
                add_into(grads, *a, &ga);
            }
            Op::Sparse(s, a) => {
                let x = self.value(*a);
                let mut slot = grads[a.0].take().unwrap_or_else(|| vec![T::zero(); x.len()]);
                s.apply_transpose_into(g, x.cols(), &mut slot);
                grads[a.0] = Some(slot);
            }
            Op::Concat(a, b) => {
                let (ca, cb) = (self.value(*a).cols(), self.value(*b).cols());
                let w = ca + cb;
                let rows = self.value(*a).rows();
                let mut ga = Vec::with_capacity(rows * ca);
                let mut gb = Vec::with_capacity(rows * cb);
                for r in 0..rows {
                    ga.extend_from_slice(&g[r * w..r * w + ca]);
                    gb.extend_from_slice(&g[r * w + ca..(r + 1) * w]);
                }
                add_into(grads, *a, &ga);
                add_into(grads, *b, &gb);
            }
            Op::Sum(a) => {
                let n = self.value(*a).len();
                add_into(grads, *a, &vec![g[0]; n]);
            }
            Op::SoftmaxCe(a, labels, probs) => {
                let k = self.value(*a).cols();
                let scale = g[0] / T::from_f64(labels.len() as f64);
                let mut ga: Vec<T> = probs.iter().map(|&p| p * scale).collect();
                for (r, &l) in labels.iter().enumerate() {
                    ga[r * k + l] = ga[r * k + l] - scale;
                }
                add_into(grads, *a, &ga);
            }
        }
    }
}

fn add_into<T: Real>(grads: &mut [Option<Vec<T>>], v: Var, g: &[T]) {
    match &mut grads[v.0] {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, &b)| *a = *a + b),
        slot @ None => *slot = Some(g.to_vec()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Tensor<f64> {
        Tensor::from_fn(rows, cols, f)
    }

    #[test]
    fn relu_and_uniform_cross_entropy() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(t(1, 3, |_, c| c as f64 + 1.0));
        let neg = tape.scale(x, -1.0);
        let r = tape.relu(neg);
        assert!(tape.value(r).data().iter().all(|&v| v == 0.0));
        let logits = tape.leaf(Tensor::zeros(2, 5));
        let ce = tape.softmax_cross_entropy(logits, &[0, 3]).unwrap();
        assert!((tape.value(ce).data()[0] - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn linear_gradient() {
        let mut store = ParamStore::new();
        let w = store.add("w", t(2, 3, |r, c| (r + c) as f64));
        let unused = store.add("unused", t(1, 1, |_, _| 1.0));
        let mut tape = Tape::new();
        let x = tape.leaf(t(4, 2, |r, c| (r * 2 + c) as f64 * 0.5));
        let wv = tape.param(&store, w);
        tape.param(&store, unused);
        let y = tape.matmul(x, wv).unwrap();
        let loss = tape.sum(y);
        let grads = tape.backward(loss).unwrap();
        grads.accumulate_into(&mut store);
        // d/dW sum(XW) = Xᵀ 1
        let x = tape.value(x);
        let gw = store.get(w).grad.clone().unwrap();
        for r in 0..2 {
            let col_sum: f64 = (0..4).map(|i| x.at(i, r)).sum();
            for c in 0..3 {
                assert_eq!(gw[r * 3 + c], col_sum);
            }
        }
        assert_eq!(store.get(unused).grad.as_deref(), Some(&[0.0][..]));
        assert_eq!(grads.of(loss), Some(&[1.0][..]));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(2, 2));
        assert!(matches!(tape.backward(x), Err(Error::Contract(_))));
    }

    /// Central differences on every parameter entry of a small net that
    /// uses every primitive.
    #[test]
    fn composite_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut store = ParamStore::<f64>::new();
        let w1 = store.add("w1", Tensor::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0)));
        let b1 = store.add("b1", Tensor::from_fn(1, 4, |_, _| rng.random_range(-1.0..1.0)));
        let w2 = store.add("w2", Tensor::from_fn(6, 3, |_, _| rng.random_range(-1.0..1.0)));
        let x = Tensor::from_fn(5, 3, |_, _| rng.random_range(-1.0..1.0));
        let extra = Tensor::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let agg = Arc::new(Sparse::from_triples(5, 5, vec![(0, 1, 0.5), (0, 2, 0.5), (1, 0, 1.0), (3, 4, 1.0), (4, 3, 1.0), (4, 4, 0.3)]).unwrap());
        let run = |store: &ParamStore<f64>| -> (Tape<f64>, Var) {
            let mut tape = Tape::new();
            let xv = tape.leaf(x.clone());
            let ev = tape.leaf(extra.clone());
            let (w1, b1, w2) = (tape.param(store, w1), tape.param(store, b1), tape.param(store, w2));
            let h = tape.matmul(xv, w1).unwrap();
            let h = tape.add_row(h, b1).unwrap();
            let h = tape.relu(h);
            let a = tape.sparse(&agg, h).unwrap();
            let h = tape.add(h, a).unwrap();
            let h = tape.concat_cols(h, ev).unwrap();
            let o = tape.matmul(h, w2).unwrap();
            let g = tape.gather_rows(o, &[Some(4), None, Some(1), Some(1)]).unwrap();
            let s = tape.scatter_add_rows(g, &[0, 1, 1, 2], 3).unwrap();
            let s = tape.scale(s, 0.7);
            let loss = tape.softmax_cross_entropy(s, &[2, 0, 1]).unwrap();
            (tape, loss)
        };
        let (tape, loss) = run(&store);
        tape.backward(loss).unwrap().accumulate_into(&mut store);
        for p in [w1, b1, w2] {
            let analytic = store.get(p).grad.clone().unwrap();
            for k in 0..analytic.len() {
                let orig = store.get(p).data()[k];
                let h = 1e-6 * orig.abs().max(1.0);
                store.get_mut(p).data_mut()[k] = orig + h;
                let (tp, lp) = run(&store);
                store.get_mut(p).data_mut()[k] = orig - h;
                let (tm, lm) = run(&store);
                store.get_mut(p).data_mut()[k] = orig;
                let fd = (tp.value(lp).data()[0] - tm.value(lm).data()[0]) / (2.0 * h);
                let err = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-8);
                assert!(err < 1e-5 || (fd - analytic[k]).abs() < 1e-9, "param {p} entry {k}: {fd} vs {}", analytic[k]);
            }
        }
    }
}
