//! Ring perception on adjacency lists of `(neighbor, bond)` pairs.

pub(crate) fn is_connected(adjacency: &[Vec<(usize, usize)>]) -> bool {
    if adjacency.is_empty() {
        return true;
    }
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(v, _) in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == adjacency.len()
}

/// Marks every bond that is not a bridge, i.e. lies on at least one cycle.
pub(crate) fn ring_bonds(adjacency: &[Vec<(usize, usize)>], num_bonds: usize) -> Vec<bool> {
    let n = adjacency.len();
    let mut in_ring = vec![true; num_bonds];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    // Iterative DFS: (atom, bond used to enter, next neighbor cursor).
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(frame) = stack.last_mut() {
            let (u, parent_bond, cursor) = *frame;
            if cursor < adjacency[u].len() {
                frame.2 += 1;
                let (v, bond) = adjacency[u][cursor];
                if bond == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = time;
                    low[v] = time;
                    time += 1;
                    stack.push((v, bond, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        in_ring[parent_bond] = false;
                    }
                }
            }
        }
    }
    in_ring
}

/// All simple cycles with `min_len..=max_len` atoms, using ring bonds only.
/// Each cycle is returned once as an atom sequence starting at its smallest
/// atom index.
pub(crate) fn small_cycles(
    adjacency: &[Vec<(usize, usize)>],
    ring_bond: &[bool],
    min_len: usize,
    max_len: usize,
) -> Vec<Vec<usize>> {
    let mut cycles = Vec::new();
    let mut path = Vec::with_capacity(max_len);
    for start in 0..adjacency.len() {
        if !adjacency[start].iter().any(|&(_, b)| ring_bond[b]) {
            continue;
        }
        path.clear();
        path.push(start);
        extend_cycles(adjacency, ring_bond, start, min_len, max_len, &mut path, &mut cycles);
    }
    cycles
}

fn extend_cycles(
    adjacency: &[Vec<(usize, usize)>],
    ring_bond: &[bool],
    start: usize,
    min_len: usize,
    max_len: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let last = *path.last().expect("path starts non-empty");
    for &(next, bond) in &adjacency[last] {
        if !ring_bond[bond] {
            continue;
        }
        if next == start {
            // Orientation filter keeps one of the two traversal directions.
            if path.len() >= min_len && path.len() >= 3 && path[1] < path[path.len() - 1] {
                out.push(path.clone());
            }
            continue;
        }
        if next < start || path.contains(&next) || path.len() == max_len {
            continue;
        }
        path.push(next);
        extend_cycles(adjacency, ring_bond, start, min_len, max_len, path, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); n];
        for (i, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((b, i));
            adj[b].push((a, i));
        }
        adj
    }

    #[test]
    fn bridges_in_toluene_like_graph() {
        // ring 0..6 plus a substituent on atom 0
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 6)];
        let adj = adjacency(7, &edges);
        let rb = ring_bonds(&adj, edges.len());
        assert_eq!(rb, vec![true, true, true, true, true, true, false]);
    }

    #[test]
    fn fused_rings_yield_three_cycles_up_to_ten() {
        // naphthalene skeleton
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 9), (9, 0), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9)];
        let adj = adjacency(10, &edges);
        let rb = ring_bonds(&adj, edges.len());
        assert!(rb.iter().all(|&r| r));
        assert_eq!(small_cycles(&adj, &rb, 3, 6).len(), 2);
        assert_eq!(small_cycles(&adj, &rb, 3, 10).len(), 3);
    }
}
