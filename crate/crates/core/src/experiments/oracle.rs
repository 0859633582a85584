//! Exhaustive references for kernel ranks and group orders.

use crate::error::Result;
use crate::graph::{brute, ConcreteGraph, NodeId};
use crate::kernel::EdgeClass;
use crate::rep::{RepKind, RepSpec};

/// Trace of `ρ(χ)` for a permutation with `fixed` fixed points.
fn trace(spec: &RepSpec, fixed: usize) -> usize {
    spec.fields()
        .iter()
        .map(|f| {
            f.channels
                * match f.kind {
                    RepKind::Trivial => 1,
                    RepKind::Standard => fixed,
                }
        })
        .sum()
}

/// Rank of the group-averaging projector on `Hom(ρ_p, ρ′_q)`, computed as
/// `(1/|A|) Σ_χ tr ρ′(χ_q) · tr ρ(χ_p)` over every automorphism of the
/// representative fixing `p` and `q`, found by exhaustive search.
pub fn projector_rank(class: &EdgeClass, rho: &RepSpec, rho_out: &RepSpec) -> usize {
    let g = &class.representative.graph;
    let (p, q) = class.representative.marked;
    let fixed = [g.index_of(p).expect("marked"), g.index_of(q).expect("marked")];
    let auts = brute::automorphisms(g, &fixed);
    let (bp, bq) = class.endpoint_balls();
    let fix = |m: &[usize], b: &[usize]| b.iter().filter(|&&u| m[u] == u).count();
    let total: usize = auts.iter().map(|m| trace(rho_out, fix(m, &bq)) * trace(rho, fix(m, &bp))).sum();
    debug_assert_eq!(total % auts.len(), 0);
    total / auts.len()
}

/// Number of automorphisms of `g` fixing the listed nodes, by exhaustive
/// search.
pub fn brute_group_order(g: &ConcreteGraph, fixed: &[NodeId]) -> Result<usize> {
    let pos = fixed.iter().map(|&id| g.require_index(id)).collect::<Result<Vec<_>>>()?;
    Ok(brute::automorphisms(g, &pos).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::solve_basis;
    use crate::neighbourhood::{edge_neighbourhood, NeighbourhoodAssignment};

    #[test]
    fn ranks_for_a_symmetric_edge() {
        // p adjacent to q and to two twin leaves: the twins swap
        let g = ConcreteGraph::undirected_n(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let nb = edge_neighbourhood(&g, 0, 1, &NeighbourhoodAssignment::default()).unwrap();
        let class = EdgeClass::singleton(nb, 1).unwrap();
        let (s, t) = (RepSpec::standard(1), RepSpec::trivial(1));
        // |G_p| = 4, |G_q| = 2; fixed points (identity) 4·2 = 8, (swap) 2·2 = 4
        assert_eq!(projector_rank(&class, &s, &s), 6);
        assert_eq!(projector_rank(&class, &t, &t), 1);
        assert_eq!(projector_rank(&class, &s, &t), 3);
        assert_eq!(projector_rank(&class, &RepSpec::standard(2), &RepSpec::standard(3)), 36);
        for (a, b) in [(&s, &s), (&t, &t), (&s, &t), (&t, &s)] {
            assert_eq!(solve_basis(&class, a, b).unwrap().rank(), projector_rank(&class, a, b));
        }
        assert_eq!(brute_group_order(&g, &[0]).unwrap(), 6);
    }
}
