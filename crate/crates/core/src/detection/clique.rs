//! Maximal-clique enumeration (Bron–Kerbosch with Tomita pivoting) on
//! bitset adjacency.

use serde::{Deserialize, Serialize};

/// A set of workers stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorkerSet {
    words: Vec<u64>,
}

impl WorkerSet {
    pub fn empty(workers: usize) -> Self {
        WorkerSet { words: vec![0; workers.div_ceil(64)] }
    }

    pub fn full(workers: usize) -> Self {
        let mut s = WorkerSet::empty(workers);
        for w in 0..workers {
            s.insert(w);
        }
        s
    }

    pub fn from_slice(workers: usize, members: &[usize]) -> Self {
        let mut s = WorkerSet::empty(workers);
        for &m in members {
            s.insert(m);
        }
        s
    }

    pub fn insert(&mut self, w: usize) {
        self.words[w / 64] |= 1 << (w % 64);
    }

    pub fn remove(&mut self, w: usize) {
        self.words[w / 64] &= !(1 << (w % 64));
    }

    pub fn contains(&self, w: usize) -> bool {
        self.words.get(w / 64).is_some_and(|word| word >> (w % 64) & 1 == 1)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn intersection(&self, other: &WorkerSet) -> WorkerSet {
        WorkerSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn intersection_len(&self, other: &WorkerSet) -> usize {
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn union_with(&self, other: &WorkerSet) -> WorkerSet {
        WorkerSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect() }
    }

    pub fn difference(&self, other: &WorkerSet) -> WorkerSet {
        WorkerSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// All maximal cliques of the graph with the given adjacency, each sorted
/// ascending, the list sorted lexicographically.
pub fn maximal_cliques(adjacency: &[WorkerSet]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut current = Vec::new();
    expand(adjacency, &mut current, WorkerSet::full(n), WorkerSet::empty(n), &mut out);
    for c in &mut out {
        c.sort_unstable();
    }
    out.sort();
    out
}

fn expand(adjacency: &[WorkerSet], current: &mut Vec<usize>, mut candidates: WorkerSet, mut excluded: WorkerSet, out: &mut Vec<Vec<usize>>) {
    if candidates.is_empty() {
        if excluded.is_empty() {
            out.push(current.clone());
        }
        return;
    }
    // Tomita pivot: the vertex of P ∪ X with the most neighbours in P
    let pivot = candidates
        .union_with(&excluded)
        .iter()
        .max_by_key(|&u| (candidates.intersection_len(&adjacency[u]), std::cmp::Reverse(u)))
        .expect("P is non-empty");
    let branch = candidates.difference(&adjacency[pivot]);
    for v in branch.iter() {
        current.push(v);
        expand(adjacency, current, candidates.intersection(&adjacency[v]), excluded.intersection(&adjacency[v]), out);
        current.pop();
        candidates.remove(v);
        excluded.insert(v);
    }
}

/// The maximal cliques of largest size.
pub fn maximum_cliques(adjacency: &[WorkerSet]) -> Vec<Vec<usize>> {
    let all = maximal_cliques(adjacency);
    let best = all.iter().map(Vec::len).max().unwrap_or(0);
    all.into_iter().filter(|c| c.len() == best).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Vec<WorkerSet> {
        let mut adj = vec![WorkerSet::empty(n); n];
        for &(a, b) in edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        adj
    }

    #[test]
    fn complete_graph_single_clique() {
        let n = 6;
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        assert_eq!(maximal_cliques(&graph(n, &edges)), vec![(0..n).collect::<Vec<_>>()]);
    }

    #[test]
    fn empty_graph_singletons() {
        let cliques = maximal_cliques(&graph(4, &[]));
        assert_eq!(cliques, vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn triangle_with_tail() {
        let cliques = maximal_cliques(&graph(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]));
        assert_eq!(cliques, vec![vec![0, 1, 2], vec![2, 3]]);
        assert_eq!(maximum_cliques(&graph(4, &[(0, 1), (1, 2), (2, 0), (2, 3)])), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn bitset_ops() {
        let mut s = WorkerSet::from_slice(130, &[0, 63, 64, 129]);
        assert_eq!(s.len(), 4);
        assert_eq!(s.to_vec(), vec![0, 63, 64, 129]);
        s.remove(63);
        assert!(!s.contains(63));
        assert!(s.contains(129));
    }
}
