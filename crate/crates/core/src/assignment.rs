//! Worker/file incidence for one iteration under each placement scheme.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{enumerate_r_subsets, BlockDesign, WorkerPermutation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Every `r`-subset of the workers is one file.
    #[default]
    Aspis,
    /// Blocks of a 2-design, points relabelled by a fresh permutation each iteration.
    AspisPlus,
    /// `K / r` disjoint groups, one file per group.
    Detox,
    /// One file per worker, no redundancy.
    Baseline,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Aspis => "aspis",
            SchemeKind::AspisPlus => "aspis_plus",
            SchemeKind::Detox => "detox",
            SchemeKind::Baseline => "baseline",
        }
    }
}

/// Bipartite worker/file incidence.
///
/// `worker_files[j]` is the ascending list of files assigned to worker `j` and
/// `file_workers[i]` the ascending list of workers holding file `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskAssignment {
    pub scheme: SchemeKind,
    #[serde(rename = "K")]
    pub workers: usize,
    pub r: usize,
    pub f: usize,
    pub worker_files: Vec<Vec<usize>>,
    pub file_workers: Vec<Vec<usize>>,
}

impl TaskAssignment {
    /// Build from per-file worker sets; the transpose is derived.
    pub fn from_file_workers(
        scheme: SchemeKind,
        workers: usize,
        file_workers: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let r = file_workers.first().map_or(0, Vec::len);
        let mut worker_files = vec![Vec::new(); workers];
        let mut normalized = Vec::with_capacity(file_workers.len());
        for (i, mut group) in file_workers.into_iter().enumerate() {
            group.sort_unstable();
            if group.len() != r {
                return Err(Error::invalid(format!("file {i} has {} workers, expected {r}", group.len())));
            }
            if group.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("file {i} lists a worker twice")));
            }
            for &w in &group {
                if w >= workers {
                    return Err(Error::invalid(format!("file {i} names worker {w} >= K = {workers}")));
                }
                worker_files[w].push(i);
            }
            normalized.push(group);
        }
        Ok(TaskAssignment { scheme, workers, r, f: normalized.len(), worker_files, file_workers: normalized })
    }

    /// Files per worker when the assignment is load-balanced.
    pub fn load(&self) -> Option<usize> {
        let first = self.worker_files.first()?.len();
        self.worker_files.iter().all(|w| w.len() == first).then_some(first)
    }

    /// Position of `file` inside `worker_files[worker]`.
    pub fn slot(&self, worker: usize, file: usize) -> Option<usize> {
        self.worker_files.get(worker)?.binary_search(&file).ok()
    }

    /// Number of files shared by every worker pair, dense `K * K` (symmetric,
    /// zero diagonal).
    pub fn common_files(&self) -> Vec<u32> {
        let k = self.workers;
        let mut common = vec![0u32; k * k];
        for group in &self.file_workers {
            for (a, &u) in group.iter().enumerate() {
                for &v in &group[a + 1..] {
                    common[u * k + v] += 1;
                    common[v * k + u] += 1;
                }
            }
        }
        common
    }

    /// Check that the two adjacency lists are transposes of each other.
    pub fn check_consistency(&self) -> Result<()> {
        if self.file_workers.len() != self.f || self.worker_files.len() != self.workers {
            return Err(Error::invalid("assignment dimensions disagree with K and f"));
        }
        for (j, files) in self.worker_files.iter().enumerate() {
            for &i in files {
                if self.file_workers.get(i).is_none_or(|g| g.binary_search(&j).is_err()) {
                    return Err(Error::invalid(format!("worker {j} lists file {i} but not vice versa")));
                }
            }
        }
        let incidences: usize = self.worker_files.iter().map(Vec::len).sum();
        if incidences != self.f * self.r {
            return Err(Error::invalid("incidence count differs from f * r"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assignment serializes")
    }
}

fn require_odd(r: usize) -> Result<()> {
    if r % 2 == 0 {
        return Err(Error::UnsupportedParameter(format!(
            "redundancy r = {r} is even; majority voting needs odd r"
        )));
    }
    Ok(())
}

/// Subset placement: file `i` is processed by the workers of the `i`-th
/// `r`-subset in colex order.
pub fn assign_aspis(workers: usize, r: usize) -> Result<TaskAssignment> {
    require_odd(r)?;
    if r < 3 || r > workers {
        return Err(Error::invalid(format!("subset placement needs 3 <= r <= K, got r = {r}, K = {workers}")));
    }
    let files = enumerate_r_subsets(workers, r)?.into_iter().map(|s| s.into_vec()).collect();
    TaskAssignment::from_file_workers(SchemeKind::Aspis, workers, files)
}

/// Design placement: file `i` is processed by `perm(block_i)`.
pub fn assign_aspis_plus(design: &BlockDesign, perm: &WorkerPermutation) -> Result<TaskAssignment> {
    require_odd(design.k)?;
    let permuted = design.permuted(perm)?;
    TaskAssignment::from_file_workers(SchemeKind::AspisPlus, design.v, permuted.blocks)
}

/// Group placement: worker `j` belongs to group `j / r`.
pub fn assign_detox(workers: usize, r: usize) -> Result<TaskAssignment> {
    require_odd(r)?;
    if r == 0 || workers % r != 0 {
        return Err(Error::invalid(format!("group placement needs r | K, got r = {r}, K = {workers}")));
    }
    let files = (0..workers / r).map(|g| (g * r..(g + 1) * r).collect()).collect();
    TaskAssignment::from_file_workers(SchemeKind::Detox, workers, files)
}

/// File `i` is processed by worker `i` alone.
pub fn assign_baseline(workers: usize) -> Result<TaskAssignment> {
    if workers == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    TaskAssignment::from_file_workers(SchemeKind::Baseline, workers, (0..workers).map(|i| vec![i]).collect())
}

/// Contiguous sample ranges of a batch of `batch` samples split into `files`
/// equal files.
pub fn file_ranges(batch: usize, files: usize) -> Result<Vec<Range<usize>>> {
    if files == 0 || batch % files != 0 {
        return Err(Error::invalid(format!("batch size {batch} is not a multiple of the file count {files}")));
    }
    let per = batch / files;
    Ok((0..files).map(|i| i * per..(i + 1) * per).collect())
}
