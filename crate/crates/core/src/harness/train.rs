//! The synchronous training loop.

use std::io::Write;

use rand::seq::index::sample;
use serde::Serialize;

use super::config::RunConfig;
use super::protocol::{Detector, Protocol};
use super::sim::distorted_count;
use super::task::{synthetic_task, GradientModel, SyntheticTask};
use crate::adversary::{byzantine_returns, choose_adversaries, disagreement_set, AttackMode};
use crate::assignment::{assign_aspis, assign_aspis_plus, assign_baseline, assign_detox, file_ranges, SchemeKind, TaskAssignment};
use crate::combinatorics::{build_steiner_triple_system, sample_permutation, BlockDesign};
use crate::detection::DetectionStatus;
use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub t: usize,
    /// Full-dataset loss at `w_t`, before the update.
    pub loss: f64,
    pub learning_rate: f64,
    pub distorted: usize,
    pub epsilon: f64,
    /// `identified`, `ambiguous`, `windowed` or `none`.
    pub status: &'static str,
    pub adversaries: Vec<usize>,
    pub detected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub model: Vec<f64>,
    pub final_loss: f64,
}

/// Labels `U1..UK` for 0-based worker indices.
pub fn worker_labels(workers: &[usize]) -> String {
    workers.iter().map(|w| format!("U{}", w + 1)).collect::<Vec<_>>().join(" ")
}

impl Trajectory {
    /// CSV with columns `t,loss,epsilon,detected`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::invalid(format!("writing trajectory: {e}"));
        w.write_record(["t", "loss", "epsilon", "detected"]).map_err(io)?;
        for r in &self.records {
            w.write_record([r.t.to_string(), r.loss.to_string(), r.epsilon.to_string(), worker_labels(&r.detected)]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::invalid(format!("writing trajectory: {e}")))
    }

    pub fn model_json(&self) -> String {
        serde_json::json!({ "dim": self.model.len(), "weights": self.model, "final_loss": self.final_loss }).to_string()
    }
}

enum Placement {
    Fixed(TaskAssignment),
    Design(BlockDesign),
}

impl Placement {
    fn new(cfg: &RunConfig) -> Result<Self> {
        Ok(match cfg.scheme {
            SchemeKind::Aspis => Placement::Fixed(assign_aspis(cfg.workers, cfg.r)?),
            SchemeKind::AspisPlus => Placement::Design(build_steiner_triple_system(cfg.workers)?),
            SchemeKind::Detox => Placement::Fixed(assign_detox(cfg.workers, cfg.r)?),
            SchemeKind::Baseline => Placement::Fixed(assign_baseline(cfg.workers)?),
        })
    }

    fn lambda(&self) -> usize {
        match self {
            Placement::Design(d) => d.lambda,
            Placement::Fixed(_) => 1,
        }
    }

    fn at(&self, t: usize, seed: u64) -> Result<std::borrow::Cow<'_, TaskAssignment>> {
        Ok(match self {
            Placement::Fixed(a) => std::borrow::Cow::Borrowed(a),
            Placement::Design(d) => {
                let perm = sample_permutation(d.v, derive_seed(seed, stream::PERMUTATION, t as u64));
                std::borrow::Cow::Owned(assign_aspis_plus(d, &perm)?)
            }
        })
    }
}

fn at_iteration(t: usize, e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("iteration {t}: {m}")),
        Error::UnsupportedParameter(m) => Error::UnsupportedParameter(format!("iteration {t}: {m}")),
        Error::ProtocolViolation(m) => Error::ProtocolViolation(format!("iteration {t}: {m}")),
        Error::Capacity(m) => Error::Capacity(format!("iteration {t}: {m}")),
        other => other,
    }
}

/// Train on the configured synthetic task.
pub fn train(cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let task = synthetic_task(cfg.task.kind, cfg.task.samples, cfg.task.features, cfg.seed)?;
    train_on(cfg, &task)
}

/// Train with an explicit model; `cfg.task` is ignored except for validation.
pub fn train_on(cfg: &RunConfig, model: &SyntheticTask) -> Result<Trajectory> {
    cfg.validate()?;
    let placement = Placement::new(cfg)?;
    let f = cfg.files()?;
    let ranges = file_ranges(cfg.batch_size, f)?;
    let protocol = Protocol { rule: cfg.rule(), equality: cfg.equality, exec: cfg.execution };
    let mut detector = Detector::for_scheme(cfg.scheme, cfg.workers, cfg.attack.q, placement.lambda(), cfg.detection_window)?;
    let mut w = model.initial_weights(cfg.seed);
    let mut records = Vec::with_capacity(cfg.iterations);

    for t in 0..cfg.iterations {
        let mut step = |t| -> Result<IterationRecord> {
            let mut g = rng::derived(cfg.seed, stream::BATCH, t as u64);
            let batch = sample(&mut g, model.samples(), cfg.batch_size).into_vec();
            let assignment = placement.at(t, cfg.seed)?;
            let truth = cfg.execution.map(f, |i| model.file_gradient(&w, &batch[ranges[i].clone()]));

            let adversaries = choose_adversaries(&cfg.attack, cfg.workers, cfg.r, t, cfg.seed)?;
            let disagreement = if cfg.attack.mode == AttackMode::Att2 && !adversaries.is_empty() {
                disagreement_set(&cfg.attack, cfg.workers, &adversaries, t, cfg.seed)?
            } else {
                Vec::new()
            };
            let table = byzantine_returns(&assignment, &adversaries, &cfg.attack, &disagreement, &truth)?;
            let outcome = protocol.step(&mut detector, t, &assignment, &table)?;
            let distorted = distorted_count(&assignment, &table, protocol.rule, &outcome, &truth)?;
            let status = match (&detector, &outcome.detection) {
                (_, Some(d)) if d.status == DetectionStatus::Identified => "identified",
                (_, Some(_)) => "ambiguous",
                (Detector::Window(_), None) => "windowed",
                _ => "none",
            };
            let rate = cfg.schedule.rate(t);
            let record = IterationRecord {
                t,
                loss: model.loss(&w),
                learning_rate: rate,
                distorted,
                epsilon: distorted as f64 / f as f64,
                status,
                adversaries,
                detected: outcome.flagged,
            };
            w.iter_mut().zip(&outcome.aggregate.update).for_each(|(wi, u)| *wi -= rate * u);
            Ok(record)
        };
        records.push(step(t).map_err(|e| at_iteration(t, e))?);
    }
    let final_loss = model.loss(&w);
    Ok(Trajectory { records, model: w, final_loss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AttackScenario, DistortionSpec, Selection};
    use crate::analysis::{cmax_aspis_att2, report, TableAttack};
    use crate::harness::config::Schedule;
    use crate::harness::task::TaskKind;

    fn csv(t: &Trajectory) -> Vec<u8> {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        buf
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = RunConfig { iterations: 20, ..RunConfig::default() };
        assert_eq!(csv(&train(&cfg).unwrap()), csv(&train(&cfg).unwrap()));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut cfg = RunConfig { iterations: 10, ..RunConfig::default() };
        cfg.attack = AttackScenario::new(AttackMode::Att2, 3, DistortionSpec::alie_default());
        let par = train(&cfg).unwrap();
        cfg.execution = crate::exec::Execution::Sequential;
        assert_eq!(par, train(&cfg).unwrap());
    }

    #[test]
    fn clean_loss_decreases_over_windows() {
        for kind in [TaskKind::Logistic, TaskKind::LeastSquares] {
            let mut cfg = RunConfig { iterations: 100, ..RunConfig::default() };
            cfg.task.kind = kind;
            cfg.schedule = Schedule::Constant { rate: 0.01 };
            let t = train(&cfg).unwrap();
            let means: Vec<f64> = t.records.chunks(10).map(|c| c.iter().map(|r| r.loss).sum::<f64>() / 10.0).collect();
            assert!(means.windows(2).all(|w| w[1] <= w[0]), "{kind:?}: {means:?}");
        }
    }

    #[test]
    fn fixed_d_distortion_matches_closed_form() {
        let mut cfg = RunConfig { iterations: 5, ..RunConfig::default() };
        cfg.attack = AttackScenario::new(AttackMode::Att2, 3, DistortionSpec::default());
        let expected = cmax_aspis_att2(7, 3, 3).unwrap() as usize;
        let t = train(&cfg).unwrap();
        assert!(t.records.iter().all(|r| r.distorted == expected && r.status == "ambiguous"));
    }

    #[test]
    fn detox_distortion_matches_closed_form() {
        let mut cfg = RunConfig { workers: 15, scheme: SchemeKind::Detox, batch_size: 50, iterations: 3, ..RunConfig::default() };
        for (selection, attack) in [(Selection::DetoxOptimal, TableAttack::Optimal), (Selection::DetoxWeak, TableAttack::Weak)] {
            cfg.attack = AttackScenario::new(AttackMode::Att1, 7, DistortionSpec::default()).with_selection(selection);
            let expected = report(SchemeKind::Detox, attack, 15, 3, 7).unwrap().c as usize;
            let t = train(&cfg).unwrap();
            assert!(t.records.iter().all(|r| r.distorted == expected));
        }
    }

    #[test]
    fn design_placement_trains() {
        let mut cfg = RunConfig { scheme: SchemeKind::AspisPlus, workers: 15, batch_size: 70, iterations: 30, ..RunConfig::default() };
        cfg.attack = AttackScenario::new(AttackMode::Att3, 2, DistortionSpec::default()).with_window(50);
        let t = train(&cfg).unwrap();
        assert!(t.records.iter().all(|r| r.status == "windowed"));
        assert!(t.records.iter().any(|r| !r.detected.is_empty()));
        assert!(t.final_loss.is_finite());
    }

    #[test]
    fn baseline_and_mlp_run() {
        let mut cfg = RunConfig { scheme: SchemeKind::Baseline, r: 1, batch_size: 70, iterations: 5, ..RunConfig::default() };
        cfg.task.kind = TaskKind::Mlp { hidden: 4 };
        let t = train(&cfg).unwrap();
        assert_eq!(t.records.len(), 5);
        assert_eq!(t.model.len(), 4 * 10 + 9);
    }

    #[test]
    fn labels_are_one_based() {
        assert_eq!(worker_labels(&[0, 4]), "U1 U5");
        assert_eq!(worker_labels(&[]), "");
    }
}
