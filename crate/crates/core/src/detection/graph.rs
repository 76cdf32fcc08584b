use serde::Serialize;

use super::clique::WorkerSet;
use super::equality::{equal_unchecked, EqualityMode};
use crate::assignment::TaskAssignment;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::table::GradientTable;

/// Undirected graph on the workers: an edge means the pair agreed on every
/// file they share.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementGraph {
    workers: usize,
    /// Dense symmetric `K * K` table of agreement counters.
    agreements: Vec<u32>,
    adjacency: Vec<WorkerSet>,
}

#[derive(Debug, Serialize)]
struct EdgeDump<'a> {
    workers: usize,
    edges: &'a [(usize, usize)],
}

impl AgreementGraph {
    pub fn complete(workers: usize) -> Self {
        let adjacency = (0..workers)
            .map(|w| {
                let mut s = WorkerSet::full(workers);
                s.remove(w);
                s
            })
            .collect();
        AgreementGraph { workers, agreements: vec![0; workers * workers], adjacency }
    }

    pub fn from_edges(workers: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![WorkerSet::empty(workers); workers];
        for &(a, b) in edges {
            if a != b {
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
        AgreementGraph { workers, agreements: vec![0; workers * workers], adjacency }
    }

    /// Edge `(u, v)` iff `agreements[u][v] == expected[u][v]`.
    pub fn from_counts(workers: usize, agreements: Vec<u32>, expected: &[u32]) -> Self {
        let mut adjacency = vec![WorkerSet::empty(workers); workers];
        for u in 0..workers {
            for v in u + 1..workers {
                if agreements[u * workers + v] == expected[u * workers + v] {
                    adjacency[u].insert(v);
                    adjacency[v].insert(u);
                }
            }
        }
        AgreementGraph { workers, agreements, adjacency }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn agreement(&self, u: usize, v: usize) -> u32 {
        self.agreements[u * self.workers + v]
    }

    pub fn agreements(&self) -> &[u32] {
        &self.agreements
    }

    pub fn adjacency(&self) -> &[WorkerSet] {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].contains(v)
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) {
        self.adjacency[u].remove(v);
        self.adjacency[v].remove(u);
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.workers)
            .flat_map(|u| self.adjacency[u].iter().filter(move |&v| v > u).map(move |v| (u, v)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(WorkerSet::len).sum::<usize>() / 2
    }

    /// Edge-list JSON for debugging dumps.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&EdgeDump { workers: self.workers, edges: &self.edges() }).expect("edge list serializes")
    }
}

/// Count, for every worker pair, the shared files on which their returns are
/// equal, and connect the pairs that agree on all shared files.
pub fn build_agreement_graph(
    assignment: &TaskAssignment,
    table: &GradientTable,
    mode: EqualityMode,
    exec: Execution,
) -> Result<AgreementGraph> {
    table.check_complete()?;
    let k = assignment.workers;
    let chunks = assignment.f.clamp(1, 64);
    let per = assignment.f.div_ceil(chunks);
    let counted: Result<Vec<u32>> = exec.map_reduce(
        chunks,
        || Ok(vec![0u32; k * k]),
        |c| {
            let mut local = vec![0u32; k * k];
            for file in c * per..((c + 1) * per).min(assignment.f) {
                let copies = table.copies(assignment, file)?;
                for (a, &(u, gu)) in copies.iter().enumerate() {
                    for &(v, gv) in &copies[a + 1..] {
                        if gu.len() != gv.len() {
                            return Err(Error::ProtocolViolation(format!("file {file}: workers {u} and {v} returned different dimensions")));
                        }
                        if equal_unchecked(gu, gv, mode) {
                            local[u * k + v] += 1;
                            local[v * k + u] += 1;
                        }
                    }
                }
            }
            Ok(local)
        },
        |a, b| {
            let (mut a, b) = (a?, b?);
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            Ok(a)
        },
    );
    Ok(AgreementGraph::from_counts(k, counted?, &assignment.common_files()))
}
