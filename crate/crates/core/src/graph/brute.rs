//! Exhaustive reference searches, independent of the refinement machinery.
//! Exponential; meant for small graphs in checks and reports.

use super::ConcreteGraph;

/// Every automorphism (as a position permutation) fixing the nodes at
/// positions `fixed`. Extends partial maps one position at a time and checks
/// adjacency against the already-mapped prefix.
pub fn automorphisms(g: &ConcreteGraph, fixed: &[usize]) -> Vec<Vec<usize>> {
    isomorphisms(g, g, &fixed.iter().map(|&i| (i, i)).collect::<Vec<_>>())
}

/// Every isomorphism `a → b` honoring the position pins.
pub fn isomorphisms(a: &ConcreteGraph, b: &ConcreteGraph, pins: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    search(a, b, pins, &mut |m| {
        out.push(m.to_vec());
        false
    });
    out
}

/// True when some isomorphism `a → b` exists.
pub fn is_isomorphic(a: &ConcreteGraph, b: &ConcreteGraph) -> bool {
    search(a, b, &[], &mut |_| true)
}

/// Calls `visit` on each isomorphism until it returns true; returns whether
/// the search was stopped that way.
fn search(a: &ConcreteGraph, b: &ConcreteGraph, pins: &[(usize, usize)], visit: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let n = a.node_count();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for &(x, y) in pins {
        if map[x] != usize::MAX || used[y] {
            return false;
        }
        map[x] = y;
        used[y] = true;
    }
    for &(x, _) in pins {
        for &(z, _) in pins {
            if a.has_edge_index(x, z) != b.has_edge_index(map[x], map[z]) {
                return false;
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|&i| map[i] == usize::MAX).collect();
    extend(a, b, &free, 0, &mut map, &mut used, visit)
}

fn extend(
    a: &ConcreteGraph,
    b: &ConcreteGraph,
    free: &[usize],
    k: usize,
    map: &mut [usize],
    used: &mut [bool],
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if k == free.len() {
        return visit(map);
    }
    let x = free[k];
    for y in 0..b.node_count() {
        if used[y] || a.has_edge_index(x, x) != b.has_edge_index(y, y) {
            continue;
        }
        let consistent = (0..a.node_count()).filter(|&z| map[z] != usize::MAX).all(|z| {
            a.has_edge_index(x, z) == b.has_edge_index(y, map[z]) && a.has_edge_index(z, x) == b.has_edge_index(map[z], y)
        });
        if !consistent {
            continue;
        }
        map[x] = y;
        used[y] = true;
        if extend(a, b, free, k + 1, map, used, visit) {
            return true;
        }
        map[x] = usize::MAX;
        used[y] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let c4 = ConcreteGraph::undirected_n(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(automorphisms(&c4, &[]).len(), 8);
        assert_eq!(automorphisms(&c4, &[0]).len(), 2);
        let p4 = ConcreteGraph::undirected_n(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let s3 = ConcreteGraph::undirected_n(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(!is_isomorphic(&p4, &s3));
        assert!(is_isomorphic(&p4, &p4));
    }
}
