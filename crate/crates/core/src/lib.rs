//! Local natural graph networks: concrete graphs and their isomorphisms,
//! neighbourhood-restricted permutation representations, edge kernels
//! constrained by edge-neighbourhood automorphisms and shared across
//! isomorphism classes, and the GCN² message parameterization.

pub mod data;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod kernel;
pub mod layer;
pub mod message;
pub mod model;
pub mod neighbourhood;
pub mod nn;
pub mod rep;

pub use error::{Error, Result};
