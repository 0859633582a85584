use std::collections::HashSet;

use super::{AutGenerators, GraphIso};
use crate::error::{Error, Result};

/// Largest group `enumerate_group` will materialize.
pub const DEFAULT_GROUP_CAP: usize = 10080;

/// Permutation of positions `0..n`; `apply(i)` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn from_vec(v: Vec<usize>) -> Self {
        Perm(v)
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm(self.0.iter().map(|&i| other.0[i]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// All elements of the group generated by `gens`, identity first.
pub fn enumerate_group(gens: &AutGenerators) -> Result<Vec<GraphIso>> {
    enumerate_group_with_cap(gens, DEFAULT_GROUP_CAP)
}

pub fn enumerate_group_with_cap(gens: &AutGenerators, cap: usize) -> Result<Vec<GraphIso>> {
    let g = gens.graph();
    let perms = closure(g.node_count(), gens.perms(), cap)?;
    Ok(perms
        .iter()
        .map(|p| GraphIso::from_index_map(g.clone(), g.clone(), p.as_slice()).expect("in range"))
        .collect())
}

/// Breadth-first closure under right multiplication by generators.
pub(crate) fn closure(n: usize, gens: &[Perm], cap: usize) -> Result<Vec<Perm>> {
    let id = Perm::identity(n);
    let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
    let mut out = vec![id];
    let mut k = 0;
    while k < out.len() {
        for s in gens {
            let next = out[k].then(s);
            if seen.insert(next.clone()) {
                if out.len() >= cap {
                    return Err(Error::Capacity {
                        what: "group order",
                        size: out.len() + 1,
                        cap,
                    });
                }
                out.push(next);
            }
        }
        k += 1;
    }
    Ok(out)
}
