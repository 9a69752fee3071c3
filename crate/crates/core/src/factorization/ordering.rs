//! Minimum-degree fill-reducing ordering on the adjacency graph of a pattern.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeSet};

use super::SparsityPattern;

/// Returns `perm` with `perm[k]` = original index eliminated k-th.
///
/// Plain minimum degree with clique formation on elimination; ties break on
/// the smallest node index, so a dense pattern yields the identity and the
/// result is deterministic.
pub fn min_degree(pattern: &SparsityPattern) -> Vec<usize> {
    let n = pattern.dim();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for j in 0..n {
        for &i in pattern.col_rows(j) {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
    }
    let mut alive = vec![true; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::with_capacity(n);
    for v in 0..n {
        heap.push(Reverse((adj[v].len(), v)));
    }
    let mut perm = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if !alive[v] || adj[v].len() != deg {
            continue; // stale heap entry
        }
        alive[v] = false;
        perm.push(v);
        let neighbors: Vec<usize> = adj[v].iter().copied().collect();
        for &u in &neighbors {
            adj[u].remove(&v);
        }
        // connect the eliminated node's neighborhood into a clique
        for (a_i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[a_i + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                }
            }
        }
        for &u in &neighbors {
            heap.push(Reverse((adj[u].len(), u)));
        }
        adj[v].clear();
    }
    debug_assert_eq!(perm.len(), n);
    perm
}
