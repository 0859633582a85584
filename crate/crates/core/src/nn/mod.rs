//! Dense tensors, a reverse-mode tape, Adam and checkpoints.

mod adam;
mod checkpoint;
mod real;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use real::Real;
pub use tape::{Grads, Tape, Var};
pub use tensor::{Sparse, Tensor};

use rand::Rng;

use crate::error::{Error, Result};

/// Named trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    /// Adds a tensor and returns its index. Names must be unique.
    pub fn add(&mut self, name: impl Into<String>, t: Tensor<T>) -> usize {
        let name = name.into();
        assert!(!self.names.contains(&name), "duplicate parameter name {name}");
        self.names.push(name);
        self.tensors.push(t);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, i: usize) -> &Tensor<T> {
        &self.tensors[i]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut Tensor<T> {
        &mut self.tensors[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn zero_grads(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    /// Total scalar parameter count.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Replaces values from `other`, matching by name and shape.
    pub fn load_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Format(format!("{} tensors, expected {}", other.len(), self.len())));
        }
        for (name, t) in other.iter() {
            let i = self.index_of(name).ok_or_else(|| Error::Format(format!("unexpected tensor {name}")))?;
            if self.tensors[i].shape() != t.shape() {
                return Err(Error::Shape(format!("{name}: {:?} vs {:?}", t.shape(), self.tensors[i].shape())));
            }
            self.tensors[i] = t.clone();
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

/// Uniform in `±√(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Real>(rows: usize, cols: usize, rng: &mut impl Rng) -> Tensor<T> {
    let a = (6.0 / (rows + cols).max(1) as f64).sqrt();
    Tensor::from_fn(rows, cols, |_, _| T::from_f64(rng.random_range(-a..=a)))
}
