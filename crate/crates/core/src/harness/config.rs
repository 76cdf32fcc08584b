//! JSON run configuration.

use serde::{Deserialize, Serialize};

use super::task::TaskKind;
use crate::adversary::AttackScenario;
use crate::aggregation::AggregationRule;
use crate::assignment::SchemeKind;
use crate::combinatorics::{binomial, build_steiner_triple_system};
use crate::detection::EqualityMode;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Constant { rate: f64 },
    /// `initial * decay^(t / every)`.
    Geometric { initial: f64, decay: f64, every: usize },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Constant { rate: 0.05 }
    }
}

impl Schedule {
    pub fn rate(&self, t: usize) -> f64 {
        match *self {
            Schedule::Constant { rate } => rate,
            Schedule::Geometric { initial, decay, every } => initial * decay.powi((t / every.max(1)) as i32),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Schedule::Constant { rate } => rate.is_finite() && rate > 0.0,
            Schedule::Geometric { initial, decay, every } => initial.is_finite() && initial > 0.0 && decay > 0.0 && decay <= 1.0 && every > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("learning-rate schedule {self:?} needs positive rates, 0 < decay <= 1 and every >= 1")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    #[serde(flatten)]
    pub kind: TaskKind,
    pub samples: usize,
    pub features: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig { kind: TaskKind::Logistic, samples: 2000, features: 10 }
    }
}

fn default_workers() -> usize {
    7
}

fn default_r() -> usize {
    3
}

fn default_batch() -> usize {
    70
}

fn default_iterations() -> usize {
    100
}

fn default_window() -> usize {
    15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "K", default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default)]
    pub scheme: SchemeKind,
    #[serde(default = "AttackScenario::none")]
    pub attack: AttackScenario,
    #[serde(default)]
    pub task: TaskConfig,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub schedule: Schedule,
    /// Detection window `T_d` for the design placement.
    #[serde(default = "default_window")]
    pub detection_window: usize,
    /// Defaults per scheme when absent; see [`RunConfig::rule`].
    #[serde(default)]
    pub aggregation: Option<AggregationRule>,
    #[serde(default)]
    pub equality: EqualityMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The aggregation rule in effect.
    pub fn rule(&self) -> AggregationRule {
        self.aggregation.unwrap_or(match self.scheme {
            SchemeKind::Baseline => AggregationRule::CoordinateMedian,
            _ => AggregationRule::MajorityThenMedian,
        })
    }

    /// Number of files per batch implied by the scheme.
    pub fn files(&self) -> Result<usize> {
        let (k, r) = (self.workers, self.r);
        match self.scheme {
            SchemeKind::Aspis => {
                if r < 3 || r % 2 == 0 || r > k {
                    return Err(Error::invalid(format!("subset placement needs odd r with 3 <= r <= K, got r = {r}, K = {k}")));
                }
                Ok(binomial(k as u64, r as u64) as usize)
            }
            SchemeKind::AspisPlus => {
                if r != 3 {
                    return Err(Error::UnsupportedParameter(format!("design placement is built from Steiner triple systems, needs r = 3, got {r}")));
                }
                Ok(build_steiner_triple_system(k)?.blocks.len())
            }
            SchemeKind::Detox => {
                if r % 2 == 0 || r == 0 || k % r != 0 {
                    return Err(Error::invalid(format!("group placement needs odd r dividing K, got r = {r}, K = {k}")));
                }
                Ok(k / r)
            }
            SchemeKind::Baseline => Ok(k),
        }
    }

    /// Check every invariant a training run depends on.
    pub fn validate(&self) -> Result<()> {
        if self.workers < 2 {
            return Err(Error::invalid(format!("need K >= 2 workers, got {}", self.workers)));
        }
        let f = self.files()?;
        if self.batch_size == 0 || self.batch_size % f != 0 {
            return Err(Error::invalid(format!("batch size b = {} must be a positive multiple of f = {f}", self.batch_size)));
        }
        if self.batch_size > self.task.samples {
            return Err(Error::invalid(format!("batch size b = {} exceeds dataset size n = {}", self.batch_size, self.task.samples)));
        }
        if self.detection_window == 0 {
            return Err(Error::invalid("detection window T_d must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iteration budget T must be at least 1"));
        }
        self.attack.validate(self.workers)?;
        self.schedule.validate()?;
        if self.scheme != SchemeKind::Aspis && self.rule() == AggregationRule::HonestSelectMean {
            return Err(Error::invalid("honest-select mean needs clique detection on the subset placement"));
        }
        if let AggregationRule::MedianOfMeans { group_size: 0 } = self.rule() {
            return Err(Error::invalid("median-of-means group size must be at least 1"));
        }
        if self.task.samples == 0 || self.task.features == 0 {
            return Err(Error::invalid("task needs at least one sample and one feature"));
        }
        Ok(())
    }
}
