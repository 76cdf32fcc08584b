//! Monte Carlo measurement of how fast windowed detection catches a
//! limited-collusion coalition on the design placement.
//!
//! A run is cut into segments over which both the detection window and the
//! Byzantine set stay fixed. Latency is measured per segment from its first
//! iteration.

use std::collections::BTreeMap;

use serde::Serialize;

use super::protocol::{Detector, Protocol};
use super::sim::simulate_iteration;
use crate::adversary::{AttackMode, AttackScenario, DistortionSpec};
use crate::aggregation::AggregationRule;
use crate::assignment::assign_aspis_plus;
use crate::combinatorics::{build_steiner_triple_system, sample_permutation};
use crate::detection::EqualityMode;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, Serialize)]
pub struct LatencyConfig {
    pub workers: usize,
    pub q: usize,
    pub byzantine_window: usize,
    pub detection_window: usize,
    pub iterations: usize,
    pub dim: usize,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        LatencyConfig { workers: 15, q: 2, byzantine_window: 50, detection_window: 15, iterations: 150, dim: 4 }
    }
}

/// A run of iterations with the same detection window and Byzantine set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub start: usize,
    /// True when the segment opens a detection window; false when the
    /// Byzantine set was redrawn mid-window.
    pub window_start: bool,
    pub len: usize,
    /// Iterations (counted from 1 at `start`) until every Byzantine of the
    /// segment is flagged, `None` if that never happens inside the segment.
    pub latency: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LatencyReport {
    pub segments: Vec<Segment>,
}

impl LatencyReport {
    /// Segments with the given `window_start` flag grouped by latency;
    /// `None` collects the segments that ended with a Byzantine unflagged.
    pub fn histogram(&self, window_start: bool) -> BTreeMap<Option<usize>, usize> {
        let mut h = BTreeMap::new();
        for s in self.segments.iter().filter(|s| s.window_start == window_start) {
            *h.entry(s.latency).or_insert(0) += 1;
        }
        h
    }

    /// Fraction of segments with the given `window_start` flag in which
    /// detection completed within `bound` iterations.
    pub fn fraction_within(&self, bound: usize, window_start: bool) -> f64 {
        let picked: Vec<&Segment> = self.segments.iter().filter(|s| s.window_start == window_start).collect();
        if picked.is_empty() {
            return 1.0;
        }
        let hit = picked.iter().filter(|s| s.latency.is_some_and(|l| l <= bound)).count();
        hit as f64 / picked.len() as f64
    }

    pub fn merge(&mut self, other: LatencyReport) {
        self.segments.extend(other.segments);
    }
}

/// Run ATT-3 against windowed detection on a Steiner triple system placement
/// with a fresh worker permutation each iteration.
pub fn detection_latency(cfg: &LatencyConfig, seed: u64) -> Result<LatencyReport> {
    if cfg.iterations == 0 {
        return Err(Error::invalid("latency run needs at least one iteration"));
    }
    let design = build_steiner_triple_system(cfg.workers)?;
    let scenario = AttackScenario::new(AttackMode::Att3, cfg.q, DistortionSpec::default()).with_window(cfg.byzantine_window);
    scenario.validate(cfg.workers)?;
    let protocol = Protocol { rule: AggregationRule::MajorityThenMedian, equality: EqualityMode::Exact, exec: Execution::Sequential };
    let mut detector = Detector::for_scheme(crate::assignment::SchemeKind::AspisPlus, cfg.workers, cfg.q, design.lambda, cfg.detection_window)?;

    let mut report = LatencyReport::default();
    let mut current: Option<(usize, usize, Segment)> = None;
    for t in 0..cfg.iterations {
        let perm = sample_permutation(cfg.workers, derive_seed(seed, stream::PERMUTATION, t as u64));
        let assignment = assign_aspis_plus(&design, &perm)?;
        let it = simulate_iteration(&assignment, &scenario, &protocol, &mut detector, cfg.dim, t, seed)?;
        let key = (t / cfg.detection_window, scenario.epoch(t));
        match &mut current {
            Some((w, e, seg)) if (*w, *e) == key => seg.len += 1,
            _ => {
                if let Some((_, _, seg)) = current.take() {
                    report.segments.push(seg);
                }
                current = Some((key.0, key.1, Segment { start: t, window_start: t % cfg.detection_window == 0, len: 1, latency: None }));
            }
        }
        let (_, _, seg) = current.as_mut().expect("segment opened above");
        if seg.latency.is_none() && it.adversaries.iter().all(|a| it.step.flagged.contains(a)) {
            seg.latency = Some(seg.len);
        }
    }
    if let Some((_, _, seg)) = current {
        report.segments.push(seg);
    }
    Ok(report)
}
