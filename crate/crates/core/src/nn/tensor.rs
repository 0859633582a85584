use crate::error::{Error, Result};

use super::Real;

/// Dense row-major matrix with an optional gradient slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
    pub grad: Option<Vec<T>>,
}

impl<T: Real> Tensor<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!("{} values for a {rows}x{cols} tensor", data.len())));
        }
        Ok(Tensor { rows, cols, data, grad: None })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
            grad: None,
        }
    }

    pub fn scalar(x: T) -> Self {
        Tensor {
            rows: 1,
            cols: 1,
            data: vec![x],
            grad: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = T::one();
        }
        t
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols.max(1), k % cols.max(1))).collect();
        Tensor { rows, cols, data, grad: None }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!("matmul {:?} x {:?}", self.shape(), other.shape())));
        }
        let mut out = Tensor::zeros(self.rows, other.cols);
        T::gemm(self.rows, self.cols, other.cols, T::one(), &self.data, false, &other.data, false, T::zero(), &mut out.data);
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
            grad: None,
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::from_f64(x.to_f64())).collect(),
            grad: None,
        }
    }

    pub fn max_abs_diff(&self, other: &Tensor<T>) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b).abs().to_f64()).fold(0.0, f64::max)
    }

    pub fn zero_grad(&mut self) {
        self.grad = None;
    }

    pub fn accumulate_grad(&mut self, g: &[T]) {
        match &mut self.grad {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, &b)| *a = *a + b),
            None => self.grad = Some(g.to_vec()),
        }
    }
}

/// Row-compressed sparse matrix used for gathers, scatters and neighbour
/// aggregation. Rows without entries produce zero rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Sparse<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> Sparse<T> {
    /// From `(row, col, value)` triples; duplicates are summed by the
    /// product, order within a row is preserved.
    pub fn from_triples(rows: usize, cols: usize, mut triples: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triples.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::Shape(format!("entry ({r}, {c}) outside {rows}x{cols}")));
        }
        triples.sort_by_key(|&(r, _, _)| r);
        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in &triples {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Sparse {
            rows,
            cols,
            row_ptr,
            col_idx: triples.iter().map(|t| t.1).collect(),
            vals: triples.iter().map(|t| t.2).collect(),
        })
    }

    /// Selection matrix: output row `i` copies input row `idx[i]`, or is
    /// zero for `None`.
    pub fn gather(idx: &[Option<usize>], cols: usize) -> Result<Self> {
        let triples = idx.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j, T::one()))).collect();
        Self::from_triples(idx.len(), cols, triples)
    }

    /// Scatter-add: input row `i` is added into output row `idx[i]`.
    pub fn scatter(idx: &[usize], rows: usize) -> Result<Self> {
        let triples = idx.iter().enumerate().map(|(i, &j)| (j, i, T::one())).collect();
        Self::from_triples(rows, idx.len(), triples)
    }

    /// Mean over groups of input rows: output row `g` averages rows `i`
    /// with `group[i] == g`.
    pub fn group_mean(group: &[usize], groups: usize) -> Result<Self> {
        let mut count = vec![0usize; groups];
        group.iter().for_each(|&g| count[g] += 1);
        let triples = group
            .iter()
            .enumerate()
            .map(|(i, &g)| (g, i, T::one() / T::from_f64(count[g] as f64)))
            .collect();
        Self::from_triples(groups, group.len(), triples)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `S · x`.
    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rows() != self.cols {
            return Err(Error::Shape(format!("sparse {}x{} applied to {:?}", self.rows, self.cols, x.shape())));
        }
        let w = x.cols();
        let mut out = Tensor::zeros(self.rows, w);
        for r in 0..self.rows {
            let dst = &mut out.data[r * w..(r + 1) * w];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (c, v) = (self.col_idx[k], self.vals[k]);
                let src = &x.data[c * w..(c + 1) * w];
                if v == T::one() {
                    dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + s);
                } else {
                    dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + v * s);
                }
            }
        }
        Ok(out)
    }

    /// `Sᵀ · g`, accumulated into `acc` (`cols × w`).
    pub fn apply_transpose_into(&self, g: &[T], w: usize, acc: &mut [T]) {
        for r in 0..self.rows {
            let src = &g[r * w..(r + 1) * w];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (c, v) = (self.col_idx[k], self.vals[k]);
                let dst = &mut acc[c * w..(c + 1) * w];
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d = *d + v * s);
            }
        }
    }
}
