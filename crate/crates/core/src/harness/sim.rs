//! One protocol iteration on synthetic gradients, without a model.

use rand::Rng;
use rand_distr::StandardNormal;

use super::protocol::{Detector, Protocol, StepOutcome};
use crate::adversary::{byzantine_returns, choose_adversaries, disagreement_set, AttackMode, AttackScenario};
use crate::aggregation::{count_distorted, AggregationRule};
use crate::detection::{gradients_equal, EqualityMode};
use crate::table::GradientTable;
use crate::assignment::TaskAssignment;
use crate::error::Result;
use crate::rng::{self, stream};
use crate::table::Gradient;

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub adversaries: Vec<usize>,
    pub disagreement: Vec<usize>,
    pub step: StepOutcome,
    /// Files whose aggregated representative is not the true gradient.
    pub distorted: usize,
}

/// Independent standard-normal true gradients, one per file.
pub fn random_gradients(files: usize, dim: usize, seed: u64, t: usize) -> Vec<Gradient> {
    let mut g = rng::derived(seed, stream::TRIAL, t as u64);
    (0..files).map(|_| (0..dim).map(|_| g.sample(StandardNormal)).collect()).collect()
}

/// Draw adversaries for iteration `t`, build their returns on random true
/// gradients and run one protocol step.
pub fn simulate_iteration(
    assignment: &TaskAssignment,
    scenario: &AttackScenario,
    protocol: &Protocol,
    detector: &mut Detector,
    dim: usize,
    t: usize,
    seed: u64,
) -> Result<IterationReport> {
    let truth = random_gradients(assignment.f, dim, seed, t);
    let adversaries = choose_adversaries(scenario, assignment.workers, assignment.r, t, seed)?;
    let disagreement = if scenario.mode == AttackMode::Att2 {
        disagreement_set(scenario, assignment.workers, &adversaries, t, seed)?
    } else {
        Vec::new()
    };
    let table = byzantine_returns(assignment, &adversaries, scenario, &disagreement, &truth)?;
    let step = protocol.step(detector, t, assignment, &table)?;
    let distorted = distorted_count(assignment, &table, protocol.rule, &step, &truth)?;
    Ok(IterationReport { adversaries, disagreement, step, distorted })
}

/// Distorted files after aggregation. Plain averaging has no per-file
/// representative, so there a file counts if any of its copies is wrong.
pub fn distorted_count(
    assignment: &TaskAssignment,
    table: &GradientTable,
    rule: AggregationRule,
    step: &StepOutcome,
    truth: &[Gradient],
) -> Result<usize> {
    if rule != AggregationRule::Mean {
        return count_distorted(assignment, table, &step.aggregate, truth);
    }
    let mut count = 0;
    for (file, value) in truth.iter().enumerate() {
        for (_, copy) in table.copies(assignment, file)? {
            if !gradients_equal(copy, value, EqualityMode::Exact)? {
                count += 1;
                break;
            }
        }
    }
    Ok(count)
}
