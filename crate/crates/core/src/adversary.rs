//! Attack models: who is Byzantine in a given iteration, which files they
//! corrupt, and what they send instead of the true gradient.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::assignment::TaskAssignment;
use crate::error::{Error, Result};
use crate::rng::{self, stream};
use crate::table::{Gradient, GradientTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    /// Non-colluding: every Byzantine corrupts every file it holds.
    Att1,
    /// Omniscient coalition with a common disagreement set `D`.
    Att2,
    /// Random set held for a window of iterations; corrupts Byzantine-majority files only.
    Att3,
}

impl AttackMode {
    pub fn name(self) -> &'static str {
        match self {
            AttackMode::Att1 => "ATT-1",
            AttackMode::Att2 => "ATT-2",
            AttackMode::Att3 => "ATT-3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionSpec {
    /// Per-dimension `mu + z * sigma` over the coalition's view of the batch.
    Alie { z: f64 },
    /// `-scale * mean` of the true gradients the coalition can see.
    Foe { scale: f64 },
    /// `-scale * g`.
    Reversed { scale: f64 },
    /// Every entry equal to `value`.
    Constant { value: f64 },
}

impl Default for DistortionSpec {
    fn default() -> Self {
        DistortionSpec::Reversed { scale: 1.0 }
    }
}

impl DistortionSpec {
    pub fn alie_default() -> Self {
        DistortionSpec::Alie { z: 1.0 }
    }

    pub fn foe_default() -> Self {
        DistortionSpec::Foe { scale: 1.0 }
    }

    /// ALIE with the largest z that still keeps the distorted value inside the
    /// honest majority of `n` votes when `q` of them are Byzantine:
    /// `s = floor(n/2 + 1) - q`, `z = Phi^-1((n - s) / n)`.
    pub fn alie_hiding(n: usize, q: usize) -> Result<Self> {
        if n == 0 || q >= n {
            return Err(Error::invalid(format!("ALIE preset needs 0 <= q < n, got n = {n}, q = {q}")));
        }
        let s = (n / 2 + 1).saturating_sub(q);
        let p = (n - s) as f64 / n as f64;
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(Error::invalid(format!("ALIE preset quantile {p} is degenerate")));
        }
        let z = Normal::standard().inverse_cdf(p);
        Ok(DistortionSpec::Alie { z })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistortionSpec::Alie { z } if !z.is_finite() => Err(Error::invalid("ALIE z-score must be finite")),
            DistortionSpec::Reversed { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::invalid(format!("reversed-gradient scale must be positive, got {scale}")))
            }
            DistortionSpec::Foe { scale } if !scale.is_finite() => Err(Error::invalid("FoE scale must be finite")),
            DistortionSpec::Constant { value } if !value.is_finite() => Err(Error::invalid("constant fill must be finite")),
            _ => Ok(()),
        }
    }
}

/// How the Byzantine set is picked.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    /// Uniform `q`-subset, redrawn every epoch of the attack.
    #[default]
    Random,
    /// The same workers in every iteration.
    Fixed { workers: Vec<usize> },
    /// Fill the first groups of a group placement with `r'` Byzantines each.
    DetoxOptimal,
    /// Round-robin over the groups of a group placement.
    DetoxWeak,
}

fn default_window() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub mode: AttackMode,
    pub q: usize,
    #[serde(default)]
    pub distortion: DistortionSpec,
    #[serde(default)]
    pub selection: Selection,
    /// ATT-2 disagreement set; sampled from the honest workers when absent.
    #[serde(default)]
    pub disagreement: Option<Vec<usize>>,
    /// ATT-3 Byzantine window `T_b`.
    #[serde(default = "default_window")]
    pub byzantine_window: usize,
}

impl AttackScenario {
    pub fn new(mode: AttackMode, q: usize, distortion: DistortionSpec) -> Self {
        AttackScenario {
            mode,
            q,
            distortion,
            selection: Selection::Random,
            disagreement: None,
            byzantine_window: 1,
        }
    }

    pub fn none() -> Self {
        AttackScenario::new(AttackMode::Att1, 0, DistortionSpec::default())
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_disagreement(mut self, d: Vec<usize>) -> Self {
        self.disagreement = Some(d);
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.byzantine_window = window;
        self
    }

    pub fn validate(&self, workers: usize) -> Result<()> {
        if 2 * self.q >= workers && self.q > 0 {
            return Err(Error::invalid(format!("q = {} adversaries violates q < K/2 for K = {workers}", self.q)));
        }
        if self.byzantine_window == 0 {
            return Err(Error::invalid("Byzantine window T_b must be at least 1"));
        }
        self.distortion.validate()?;
        if let Selection::Fixed { workers: fixed } = &self.selection {
            let mut sorted = fixed.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.q || sorted.iter().any(|&w| w >= workers) {
                return Err(Error::invalid(format!("fixed Byzantine set {fixed:?} must hold q = {} distinct workers", self.q)));
            }
        }
        if let Some(d) = &self.disagreement {
            if self.mode != AttackMode::Att2 {
                return Err(Error::invalid("a disagreement set only applies to ATT-2"));
            }
            if d.len() > self.q {
                return Err(Error::invalid(format!("|D| = {} exceeds q = {}", d.len(), self.q)));
            }
            if d.iter().any(|&w| w >= workers) {
                return Err(Error::invalid("disagreement set names a worker outside 0..K"));
            }
        }
        Ok(())
    }

    /// Index of the attack epoch containing iteration `t`; the Byzantine set
    /// is constant within an epoch.
    pub fn epoch(&self, t: usize) -> usize {
        match self.mode {
            AttackMode::Att3 => t / self.byzantine_window,
            AttackMode::Att1 | AttackMode::Att2 => t,
        }
    }
}

/// The Byzantine set for iteration `t`, ascending.
///
/// `r` is the redundancy of the placement, used by the group-aware selections.
pub fn choose_adversaries(scenario: &AttackScenario, workers: usize, r: usize, t: usize, seed: u64) -> Result<Vec<usize>> {
    scenario.validate(workers)?;
    let q = scenario.q;
    let mut chosen = match &scenario.selection {
        Selection::Random => {
            let mut g = rng::derived(seed, stream::ADVERSARIES, scenario.epoch(t) as u64);
            sample(&mut g, workers, q).into_vec()
        }
        Selection::Fixed { workers: fixed } => fixed.clone(),
        Selection::DetoxOptimal => {
            let majority = r.div_ceil(2).max(1);
            let groups = group_count(workers, r)?;
            (0..groups).flat_map(|g| g * r..g * r + majority).chain((0..groups).flat_map(|g| g * r + majority..(g + 1) * r)).take(q).collect()
        }
        Selection::DetoxWeak => {
            let groups = group_count(workers, r)?;
            let mut used = vec![0usize; groups];
            (0..q)
                .map(|i| {
                    let g = i % groups;
                    used[g] += 1;
                    g * r + used[g] - 1
                })
                .collect()
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

fn group_count(workers: usize, r: usize) -> Result<usize> {
    if r == 0 || workers % r != 0 {
        return Err(Error::invalid(format!("group-aware selection needs r | K, got r = {r}, K = {workers}")));
    }
    Ok(workers / r)
}

/// The ATT-2 disagreement set for iteration `t`: the configured one, or a
/// random `q`-subset of the honest workers.
pub fn disagreement_set(scenario: &AttackScenario, workers: usize, adversaries: &[usize], t: usize, seed: u64) -> Result<Vec<usize>> {
    if let Some(d) = &scenario.disagreement {
        if d.iter().any(|w| adversaries.contains(w)) {
            return Err(Error::invalid(format!("disagreement set {d:?} intersects the Byzantine set {adversaries:?}")));
        }
        let mut d = d.clone();
        d.sort_unstable();
        return Ok(d);
    }
    let honest: Vec<usize> = (0..workers).filter(|w| !adversaries.contains(w)).collect();
    let size = scenario.q.min(honest.len());
    let mut g = rng::derived(seed, stream::DISAGREEMENT, scenario.epoch(t) as u64);
    let mut d: Vec<usize> = sample(&mut g, honest.len(), size).into_iter().map(|i| honest[i]).collect();
    d.sort_unstable();
    Ok(d)
}

/// Per-dimension statistics of the true gradients visible to the coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl CoalitionStats {
    /// Mean and population standard deviation over `files` of `truth`.
    pub fn from_files(truth: &[Gradient], files: impl IntoIterator<Item = usize>) -> Self {
        let dim = truth.first().map_or(0, Vec::len);
        let mut sum = vec![0.0; dim];
        let mut sq = vec![0.0; dim];
        let mut n = 0usize;
        for i in files {
            n += 1;
            for (d, &x) in truth[i].iter().enumerate() {
                sum[d] += x;
                sq[d] += x * x;
            }
        }
        let n = n.max(1) as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let std = sq.iter().zip(&mean).map(|(s, m)| (s / n - m * m).max(0.0).sqrt()).collect();
        CoalitionStats { mean, std }
    }

    /// Statistics over every file at least one Byzantine holds.
    pub fn for_coalition(assignment: &TaskAssignment, adversaries: &[usize], truth: &[Gradient]) -> Self {
        let mut seen = vec![false; assignment.f];
        for &a in adversaries {
            for &i in &assignment.worker_files[a] {
                seen[i] = true;
            }
        }
        CoalitionStats::from_files(truth, seen.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i))
    }
}

/// The value a Byzantine sends for a file whose true gradient is `truth`.
pub fn distort(truth: &[f64], spec: &DistortionSpec, stats: &CoalitionStats) -> Gradient {
    match *spec {
        DistortionSpec::Reversed { scale } => truth.iter().map(|g| -scale * g).collect(),
        DistortionSpec::Constant { value } => vec![value; truth.len()],
        DistortionSpec::Alie { z } => stats.mean.iter().zip(&stats.std).map(|(m, s)| m + z * s).collect(),
        DistortionSpec::Foe { scale } => stats.mean.iter().map(|m| -scale * m).collect(),
    }
}

/// Which files the Byzantines corrupt under `mode`.
///
/// `disagreement` is only consulted for ATT-2.
pub fn distorted_files(assignment: &TaskAssignment, adversaries: &[usize], mode: AttackMode, disagreement: &[usize]) -> Vec<bool> {
    let mut is_byz = vec![false; assignment.workers];
    for &a in adversaries {
        is_byz[a] = true;
    }
    let mut in_d = vec![false; assignment.workers];
    for &d in disagreement {
        in_d[d] = true;
    }
    assignment
        .file_workers
        .iter()
        .map(|group| {
            let byz = group.iter().filter(|&&w| is_byz[w]).count();
            let majority = group.len().div_ceil(2);
            match mode {
                AttackMode::Att1 => byz > 0,
                AttackMode::Att2 => byz >= majority && group.iter().all(|&w| is_byz[w] || in_d[w]),
                AttackMode::Att3 => byz >= majority && byz > 0,
            }
        })
        .collect()
}

/// Build the returned-gradient table: honest workers send the truth, Byzantines
/// send the distorted value on the files their attack corrupts.
pub fn byzantine_returns(
    assignment: &TaskAssignment,
    adversaries: &[usize],
    scenario: &AttackScenario,
    disagreement: &[usize],
    truth: &[Gradient],
) -> Result<GradientTable> {
    if scenario.mode == AttackMode::Att2 && disagreement.len() > scenario.q {
        return Err(Error::invalid(format!("|D| = {} exceeds q = {}", disagreement.len(), scenario.q)));
    }
    let mut table = GradientTable::honest(assignment, truth)?;
    if adversaries.is_empty() {
        return Ok(table);
    }
    let stats = CoalitionStats::for_coalition(assignment, adversaries, truth);
    let hit = distorted_files(assignment, adversaries, scenario.mode, disagreement);
    for (i, _) in hit.iter().enumerate().filter(|(_, &h)| h) {
        let value = distort(&truth[i], &scenario.distortion, &stats);
        for &w in &assignment.file_workers[i] {
            if adversaries.binary_search(&w).is_ok() {
                table.set(assignment, w, i, value.clone())?;
            }
        }
    }
    Ok(table)
}
