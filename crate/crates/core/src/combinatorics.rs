//! Subsets, block designs and worker permutations.
//!
//! Files of the subset scheme are indexed by the colexicographic rank of their
//! worker subset: `{c_1 < ... < c_r}` has rank `sum C(c_i, i)`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Binomial coefficient, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial coefficient overflows u64")
}

/// A sorted `r`-subset of the workers `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RSubset(Vec<usize>);

impl RSubset {
    pub fn new(mut members: Vec<usize>, workers: usize) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("subset {members:?} has repeated members")));
        }
        if let Some(&m) = members.last() {
            if m >= workers {
                return Err(Error::invalid(format!("member {m} out of range for K = {workers}")));
            }
        }
        Ok(RSubset(members))
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, worker: usize) -> bool {
        self.0.binary_search(&worker).is_ok()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

fn check_subset_params(workers: usize, size: usize) -> Result<()> {
    if size == 0 || size > workers {
        return Err(Error::invalid(format!(
            "subset size r = {size} must satisfy 1 <= r <= K = {workers}"
        )));
    }
    Ok(())
}

/// All `r`-subsets of `0..K` in colexicographic order.
pub fn enumerate_r_subsets(workers: usize, size: usize) -> Result<Vec<RSubset>> {
    check_subset_params(workers, size)?;
    let total = binomial(workers as u64, size as u64) as usize;
    let mut out = Vec::with_capacity(total);
    let mut current: Vec<usize> = (0..size).collect();
    loop {
        out.push(RSubset(current.clone()));
        // colex successor: bump the lowest element that has room, reset the ones below it
        let mut j = 0;
        while j < size {
            let limit = if j + 1 < size { current[j + 1] } else { workers };
            if current[j] + 1 < limit {
                break;
            }
            j += 1;
        }
        if j == size {
            break;
        }
        current[j] += 1;
        for (i, slot) in current.iter_mut().enumerate().take(j) {
            *slot = i;
        }
    }
    debug_assert_eq!(out.len(), total);
    Ok(out)
}

/// Colex rank of `subset` among the `|subset|`-subsets of `0..K`.
pub fn subset_rank(subset: &RSubset, workers: usize) -> Result<usize> {
    check_subset_params(workers, subset.len())?;
    if subset.0.last().is_some_and(|&m| m >= workers) {
        return Err(Error::invalid(format!("subset {:?} not within 0..{workers}", subset.0)));
    }
    Ok(subset
        .0
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c as u64, i as u64 + 1) as usize)
        .sum())
}

/// Inverse of [`subset_rank`].
pub fn subset_unrank(index: usize, workers: usize, size: usize) -> Result<RSubset> {
    check_subset_params(workers, size)?;
    let total = binomial(workers as u64, size as u64) as usize;
    if index >= total {
        return Err(Error::invalid(format!(
            "file index {index} out of range 0..{total} for (K, r) = ({workers}, {size})"
        )));
    }
    let mut rest = index as u64;
    let mut members = vec![0; size];
    let mut upper = workers as u64;
    for i in (1..=size as u64).rev() {
        // largest c < upper with C(c, i) <= rest
        let mut c = upper - 1;
        while binomial(c, i) > rest {
            c -= 1;
        }
        members[(i - 1) as usize] = c as usize;
        rest -= binomial(c, i);
        upper = c;
    }
    Ok(RSubset(members))
}

/// A block design on points `0..v` with blocks of size `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDesign {
    pub v: usize,
    pub k: usize,
    pub lambda: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl BlockDesign {
    /// Build a design from explicit blocks and check the pair-coverage property.
    pub fn from_blocks(v: usize, lambda: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let k = blocks.first().map_or(0, Vec::len);
        let blocks = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        let design = BlockDesign { v, k, lambda, blocks };
        design.verify()?;
        Ok(design)
    }

    /// The Fano plane as usually printed with 1-based points
    /// `123 147 246 345 257 156 367`, shifted to 0-based.
    pub fn fano() -> Self {
        let blocks = [[1, 2, 3], [1, 4, 7], [2, 4, 6], [3, 4, 5], [2, 5, 7], [1, 5, 6], [3, 6, 7]]
            .iter()
            .map(|b| b.iter().map(|p| p - 1).collect())
            .collect();
        BlockDesign::from_blocks(7, 1, blocks).expect("Fano plane is a 2-(7,3,1) design")
    }

    /// Number of blocks containing both `p` and `q`, for every pair `p < q`,
    /// as a dense `v * v` table.
    pub fn pair_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.v * self.v];
        for block in &self.blocks {
            for (i, &p) in block.iter().enumerate() {
                for &q in &block[i + 1..] {
                    counts[p * self.v + q] += 1;
                }
            }
        }
        counts
    }

    /// Exhaustively check block sizes, point range and pair coverage.
    pub fn verify(&self) -> Result<()> {
        for block in &self.blocks {
            if block.len() != self.k {
                return Err(Error::invalid(format!("block {block:?} does not have size {}", self.k)));
            }
            if block.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("block {block:?} has repeated points")));
            }
            if block.iter().any(|&p| p >= self.v) {
                return Err(Error::invalid(format!("block {block:?} has a point outside 0..{}", self.v)));
            }
        }
        let counts = self.pair_counts();
        for p in 0..self.v {
            for q in p + 1..self.v {
                let c = counts[p * self.v + q];
                if c != self.lambda {
                    return Err(Error::invalid(format!(
                        "pair ({p}, {q}) covered {c} times, expected lambda = {}",
                        self.lambda
                    )));
                }
            }
        }
        Ok(())
    }

    /// Relabel the points through `perm`.
    pub fn permuted(&self, perm: &WorkerPermutation) -> Result<BlockDesign> {
        if perm.len() != self.v {
            return Err(Error::invalid(format!(
                "permutation of {} workers applied to a design on {} points",
                perm.len(),
                self.v
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let mut mapped: Vec<usize> = b.iter().map(|&p| perm.apply(p)).collect();
                mapped.sort_unstable();
                mapped
            })
            .collect();
        Ok(BlockDesign { v: self.v, k: self.k, lambda: self.lambda, blocks })
    }
}

/// Build a 2-(v,3,1) design: Bose construction for `v = 3 mod 6`, Skolem
/// construction for `v = 1 mod 6`.
pub fn build_steiner_triple_system(v: usize) -> Result<BlockDesign> {
    let blocks = match v % 6 {
        3 if v >= 9 => bose(v),
        1 if v >= 7 => skolem(v),
        _ => return Err(Error::UnsupportedOrder(v)),
    };
    let design = BlockDesign::from_blocks(v, 1, blocks)?;
    debug_assert_eq!(design.blocks.len(), v * (v - 1) / 6);
    Ok(design)
}

fn bose(v: usize) -> Vec<Vec<usize>> {
    // idempotent commutative quasigroup on Z_m, m = 2n+1: x.y = (x+y)/2
    let m = v / 3;
    let half = m.div_ceil(2); // inverse of 2 mod m
    let op = |x: usize, y: usize| (x + y) * half % m;
    let point = |x: usize, layer: usize| x + layer * m;
    let mut blocks = Vec::with_capacity(v * (v - 1) / 6);
    for x in 0..m {
        blocks.push(vec![point(x, 0), point(x, 1), point(x, 2)]);
    }
    for layer in 0..3 {
        for x in 0..m {
            for y in x + 1..m {
                blocks.push(vec![point(x, layer), point(y, layer), point(op(x, y), (layer + 1) % 3)]);
            }
        }
    }
    blocks
}

fn skolem(v: usize) -> Vec<Vec<usize>> {
    // half-idempotent commutative quasigroup on 2n symbols: the addition table
    // of Z_2n with symbol 2i renamed i and 2i+1 renamed n+i
    let n = (v - 1) / 6;
    let m = 2 * n;
    let op = |x: usize, y: usize| {
        let s = (x + y) % m;
        if s % 2 == 0 {
            s / 2
        } else {
            n + s / 2
        }
    };
    let inf = 3 * m;
    let point = |x: usize, layer: usize| x + layer * m;
    let mut blocks = Vec::with_capacity(v * (v - 1) / 6);
    for x in 0..n {
        blocks.push(vec![point(x, 0), point(x, 1), point(x, 2)]);
    }
    for x in 0..n {
        for layer in 0..3 {
            blocks.push(vec![inf, point(n + x, layer), point(x, (layer + 1) % 3)]);
        }
    }
    for layer in 0..3 {
        for x in 0..m {
            for y in x + 1..m {
                blocks.push(vec![point(x, layer), point(y, layer), point(op(x, y), (layer + 1) % 3)]);
            }
        }
    }
    blocks
}

/// A bijection on the workers `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct WorkerPermutation(Vec<usize>);

impl WorkerPermutation {
    pub fn identity(workers: usize) -> Self {
        WorkerPermutation((0..workers).collect())
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; mapping.len()];
        for &m in &mapping {
            if m >= mapping.len() || std::mem::replace(&mut seen[m], true) {
                return Err(Error::invalid(format!("{mapping:?} is not a permutation")));
            }
        }
        Ok(WorkerPermutation(mapping))
    }

    /// `i -> i + 1 mod K`.
    pub fn cyclic_shift(workers: usize) -> Self {
        WorkerPermutation((0..workers).map(|i| (i + 1) % workers).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, worker: usize) -> usize {
        self.0[worker]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &m) in self.0.iter().enumerate() {
            inv[m] = i;
        }
        WorkerPermutation(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &WorkerPermutation) -> Self {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        WorkerPermutation(other.0.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<usize>> for WorkerPermutation {
    type Error = Error;

    fn try_from(mapping: Vec<usize>) -> Result<Self> {
        WorkerPermutation::from_mapping(mapping)
    }
}

impl From<WorkerPermutation> for Vec<usize> {
    fn from(p: WorkerPermutation) -> Self {
        p.0
    }
}

/// Uniform permutation of `0..K` drawn from the given seed.
pub fn sample_permutation(workers: usize, seed: u64) -> WorkerPermutation {
    let mut mapping: Vec<usize> = (0..workers).collect();
    mapping.shuffle(&mut rng::seeded(seed));
    WorkerPermutation(mapping)
}

/// Number of distinct blocks, used to sanity-check designs in tests.
pub fn distinct_blocks(design: &BlockDesign) -> usize {
    design.blocks.iter().collect::<HashSet<_>>().len()
}
