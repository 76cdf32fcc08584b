//! Windowed detection for the design placement.
//!
//! Agreement counters accumulate over a detection window of `T_d`
//! iterations. An edge survives only while the pair has agreed on all of its
//! `lambda` shared files in every iteration so far, so edges only disappear
//! until the window resets. Workers whose degree falls below `K - q - 1` are
//! flagged and stay excluded until the next reset.

use super::clique::WorkerSet;
use super::graph::AgreementGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct WindowDetector {
    workers: usize,
    q: usize,
    lambda: u32,
    window: usize,
    step: usize,
    counters: Vec<u64>,
    graph: AgreementGraph,
    /// (worker, iteration of first detection) for every worker flagged in the
    /// current window, in detection order.
    detections: Vec<(usize, usize)>,
}

impl WindowDetector {
    pub fn new(workers: usize, q: usize, lambda: usize, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::invalid("detection window T_d must be at least 1"));
        }
        if lambda == 0 {
            return Err(Error::invalid("design lambda must be at least 1"));
        }
        Ok(WindowDetector {
            workers,
            q,
            lambda: lambda as u32,
            window,
            step: 0,
            counters: vec![0; workers * workers],
            graph: AgreementGraph::complete(workers),
            detections: Vec::new(),
        })
    }

    /// Position `t'` (1-based) of iteration `t` inside its window.
    pub fn step_in_window(&self, t: usize) -> usize {
        t % self.window + 1
    }

    /// Feed the per-iteration agreement counts of iteration `t`; returns the
    /// current adversary estimate.
    pub fn observe(&mut self, t: usize, iteration: &AgreementGraph) -> Result<Vec<usize>> {
        if iteration.workers() != self.workers {
            return Err(Error::invalid(format!(
                "agreement graph on {} workers fed to a detector for {}",
                iteration.workers(),
                self.workers
            )));
        }
        let step = self.step_in_window(t);
        if step == 1 {
            self.graph = AgreementGraph::complete(self.workers);
            self.counters.iter_mut().for_each(|c| *c = 0);
            self.detections.clear();
        }
        self.step = step;
        let k = self.workers;
        let required = u64::from(self.lambda) * step as u64;
        for u in 0..k {
            for v in u + 1..k {
                let total = self.counters[u * k + v] + u64::from(iteration.agreement(u, v));
                self.counters[u * k + v] = total;
                self.counters[v * k + u] = total;
                if total < required {
                    self.graph.remove_edge(u, v);
                }
            }
        }
        let threshold = k.saturating_sub(self.q + 1);
        for w in 0..k {
            if self.graph.degree(w) < threshold && !self.detections.iter().any(|&(d, _)| d == w) {
                self.detections.push((w, t));
            }
        }
        Ok(self.flagged())
    }

    /// The adversary estimate: at most `q` workers, most recently detected
    /// first, ties within one iteration going to the lower worker index.
    pub fn flagged(&self) -> Vec<usize> {
        let mut order = self.detections.clone();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut out: Vec<usize> = order.into_iter().take(self.q).map(|(w, _)| w).collect();
        out.sort_unstable();
        out
    }

    /// Every worker flagged since the last reset, including those truncated out
    /// of [`flagged`](Self::flagged).
    pub fn ever_flagged(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.detections.iter().map(|&(w, _)| w).collect();
        all.sort_unstable();
        all
    }

    pub fn graph(&self) -> &AgreementGraph {
        &self.graph
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn neighbours(&self, w: usize) -> &WorkerSet {
        &self.graph.adjacency()[w]
    }
}
