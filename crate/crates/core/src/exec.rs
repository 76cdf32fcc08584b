//! Execution mode for the data-parallel inner loops.
//!
//! Every loop that fans out over independent work items (files, worker pairs,
//! Monte Carlo trials, sampled strategies) goes through [`Execution::map`] so
//! results are always collected in index order, whichever mode runs them.
//! Without the `parallel` feature, [`Execution::Parallel`] runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run work in parallel.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    /// Apply `f` to every index in `0..n`, returning results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map(n, f),
        }
    }

    /// Map-reduce over `0..n`. `reduce` must be associative and `identity`
    /// must be its neutral element.
    pub fn map_reduce<T, F, R, I>(self, n: usize, identity: I, f: F, reduce: R) -> T
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
        R: Fn(T, T) -> T + Sync + Send,
        I: Fn() -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).fold(identity(), reduce),
            Execution::Parallel => par_map_reduce(n, identity, f, reduce),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
fn par_map_reduce<T, F, R, I>(n: usize, identity: I, f: F, reduce: R) -> T
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
    I: Fn() -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).reduce(identity, reduce)
}

#[cfg(not(feature = "parallel"))]
fn par_map_reduce<T, F, R, I>(n: usize, identity: I, f: F, reduce: R) -> T
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
    I: Fn() -> T + Sync + Send,
{
    (0..n).map(f).fold(identity(), reduce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_on_order() {
        let seq = Execution::Sequential.map(100, |i| i * i);
        let par = Execution::Parallel.map(100, |i| i * i);
        assert_eq!(seq, par);
    }

    #[test]
    fn map_reduce_sums() {
        for mode in [Execution::Sequential, Execution::Parallel] {
            let s = mode.map_reduce(1000, || 0u64, |i| i as u64, |a, b| a + b);
            assert_eq!(s, 999 * 1000 / 2);
        }
    }
}
