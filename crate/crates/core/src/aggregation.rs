//! Turning a gradient table plus a detection outcome into one update.

use serde::{Deserialize, Serialize};

use crate::assignment::TaskAssignment;
use crate::detection::{DetectionOutcome, EqualityMode};
use crate::error::{Error, Result};
use crate::table::{Gradient, GradientTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationRule {
    /// Mean of one trusted copy per file; requires an identified detection.
    HonestSelectMean,
    /// Majority vote per file, then coordinate-wise median of the winners.
    #[default]
    MajorityThenMedian,
    /// Majority vote per file, then median of group means.
    MedianOfMeans { group_size: usize },
    /// Majority vote per file, then coordinate-wise median (alias used for
    /// single-copy placements where the vote is trivial).
    CoordinateMedian,
    /// Plain mean of every returned vector, no voting.
    Mean,
    /// Majority vote per file, then per-dimension sign majority.
    SignMajority,
}

/// How detection constrains aggregation in this iteration.
#[derive(Debug, Clone, Copy)]
pub enum Decision<'a> {
    /// Single-iteration clique detection.
    Detected(&'a DetectionOutcome),
    /// Windowed detection: drop these workers' votes.
    Excluding(&'a [usize]),
    /// No detection.
    Bypass,
}

/// Result of aggregation: the update vector and, per file, the worker whose
/// copy represented that file (`None` if the file was skipped).
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub update: Gradient,
    pub representatives: Vec<Option<usize>>,
}

/// One copy per file with at least one honest assignee, taken from the
/// lowest-index honest worker.
pub fn select_honest_gradients<'a>(
    assignment: &TaskAssignment,
    table: &'a GradientTable,
    honest: &[usize],
) -> Result<Vec<(usize, usize, &'a [f64])>> {
    if honest.is_empty() {
        return Err(Error::DegenerateDetection);
    }
    let mut trusted = vec![false; assignment.workers];
    for &h in honest {
        trusted[h] = true;
    }
    assignment
        .file_workers
        .iter()
        .enumerate()
        .filter_map(|(i, group)| group.iter().find(|&&w| trusted[w]).map(|&w| (i, w)))
        .map(|(i, w)| table.get(assignment, w, i).map(|g| (i, w, g)))
        .collect()
}

/// Index of the majority copy: the first value held by at least
/// `(r + 1) / 2` copies, otherwise the most frequent value, ties to the
/// earliest copy.
pub fn majority_vote(copies: &[&[f64]], mode: EqualityMode) -> Result<usize> {
    if copies.is_empty() {
        return Err(Error::invalid("majority vote over zero copies"));
    }
    let dim = copies[0].len();
    if copies.iter().any(|c| c.len() != dim) {
        return Err(Error::invalid("majority vote over copies of different dimensions"));
    }
    let mut best = (0, 0);
    for (i, a) in copies.iter().enumerate() {
        let votes = copies
            .iter()
            .filter(|b| crate::detection::gradients_equal(a, b, mode).unwrap_or(false))
            .count();
        if 2 * votes > copies.len() {
            return Ok(i);
        }
        if votes > best.1 {
            best = (i, votes);
        }
    }
    Ok(best.0)
}

/// Per-dimension median; even counts take the midpoint of the two middle values.
pub fn coordinate_median(vectors: &[&[f64]]) -> Result<Gradient> {
    let dim = check_vectors(vectors)?;
    let mut column = vec![0.0; vectors.len()];
    Ok((0..dim)
        .map(|d| {
            for (slot, v) in column.iter_mut().zip(vectors) {
                *slot = v[d];
            }
            column.sort_by(f64::total_cmp);
            let n = column.len();
            if n % 2 == 1 {
                column[n / 2]
            } else {
                (column[n / 2 - 1] + column[n / 2]) / 2.0
            }
        })
        .collect())
}

pub fn mean(vectors: &[&[f64]]) -> Result<Gradient> {
    let dim = check_vectors(vectors)?;
    let mut sum = vec![0.0; dim];
    for v in vectors {
        sum.iter_mut().zip(v.iter()).for_each(|(s, x)| *s += x);
    }
    let n = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Split in index order into groups of `group_size`, average each group, then
/// take the coordinate-wise median of the group means.
pub fn median_of_means(vectors: &[&[f64]], group_size: usize) -> Result<Gradient> {
    check_vectors(vectors)?;
    if group_size == 0 || vectors.len() % group_size != 0 {
        return Err(Error::invalid(format!(
            "median-of-means group size {group_size} does not divide {} vectors",
            vectors.len()
        )));
    }
    let means = vectors.chunks(group_size).map(mean).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&[f64]> = means.iter().map(Vec::as_slice).collect();
    coordinate_median(&refs)
}

/// Per-dimension sign of the sum of signs, zero resolved to +1.
pub fn sign_majority(vectors: &[&[f64]]) -> Result<Gradient> {
    let dim = check_vectors(vectors)?;
    Ok((0..dim)
        .map(|d| {
            let s: f64 = vectors.iter().map(|v| sign(v[d])).sum();
            if s < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn check_vectors(vectors: &[&[f64]]) -> Result<usize> {
    let first = vectors.first().ok_or_else(|| Error::invalid("aggregating an empty list of vectors"))?;
    if vectors.iter().any(|v| v.len() != first.len()) {
        return Err(Error::invalid("aggregating vectors of different dimensions"));
    }
    Ok(first.len())
}

fn reduce(rule: AggregationRule, votes: &[&[f64]]) -> Result<Gradient> {
    match rule {
        AggregationRule::MajorityThenMedian | AggregationRule::CoordinateMedian => coordinate_median(votes),
        AggregationRule::MedianOfMeans { group_size } => median_of_means(votes, group_size),
        AggregationRule::SignMajority => sign_majority(votes),
        AggregationRule::Mean | AggregationRule::HonestSelectMean => mean(votes),
    }
}

/// Produce the update for one iteration.
///
/// An identified detection averages one honest copy per file. Otherwise each
/// file is decided by majority vote (over the non-excluded copies, files with
/// none left are skipped) and the winners are reduced with `rule`.
/// [`AggregationRule::Mean`] averages every raw return instead.
pub fn aggregate(
    assignment: &TaskAssignment,
    table: &GradientTable,
    decision: Decision<'_>,
    rule: AggregationRule,
    mode: EqualityMode,
) -> Result<Aggregate> {
    table.check_complete()?;
    if let Decision::Detected(outcome) = decision {
        if outcome.is_identified() {
            return honest_mean(assignment, table, &outcome.honest);
        }
    }
    if rule == AggregationRule::HonestSelectMean {
        return Err(Error::invalid("honest-select mean needs an identified detection outcome"));
    }
    if rule == AggregationRule::Mean {
        let all: Vec<&[f64]> = table.all_returns().collect();
        return Ok(Aggregate { update: mean(&all)?, representatives: vec![None; assignment.f] });
    }
    let excluded: &[usize] = match decision {
        Decision::Excluding(w) => w,
        _ => &[],
    };
    let mut representatives = Vec::with_capacity(assignment.f);
    let mut votes = Vec::with_capacity(assignment.f);
    for file in 0..assignment.f {
        let copies: Vec<(usize, &[f64])> =
            table.copies(assignment, file)?.into_iter().filter(|(w, _)| !excluded.contains(w)).collect();
        if copies.is_empty() {
            representatives.push(None);
            continue;
        }
        let values: Vec<&[f64]> = copies.iter().map(|&(_, g)| g).collect();
        let winner = majority_vote(&values, mode)?;
        representatives.push(Some(copies[winner].0));
        votes.push(values[winner]);
    }
    Ok(Aggregate { update: reduce(rule, &votes)?, representatives })
}

fn honest_mean(assignment: &TaskAssignment, table: &GradientTable, honest: &[usize]) -> Result<Aggregate> {
    let selected = select_honest_gradients(assignment, table, honest)?;
    let mut representatives = vec![None; assignment.f];
    for &(i, w, _) in &selected {
        representatives[i] = Some(w);
    }
    let refs: Vec<&[f64]> = selected.iter().map(|&(_, _, g)| g).collect();
    Ok(Aggregate { update: mean(&refs)?, representatives })
}

/// Files whose representative copy differs from the true gradient, or that
/// were skipped.
pub fn count_distorted(
    assignment: &TaskAssignment,
    table: &GradientTable,
    aggregate: &Aggregate,
    truth: &[Gradient],
) -> Result<usize> {
    let mut count = 0;
    for (file, rep) in aggregate.representatives.iter().enumerate() {
        match rep {
            None => count += 1,
            Some(w) => {
                if !crate::detection::gradients_equal(table.get(assignment, *w, file)?, &truth[file], EqualityMode::Exact)? {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{byzantine_returns, AttackMode, AttackScenario, DistortionSpec};
    use crate::assignment::assign_aspis;
    use crate::detection::{build_agreement_graph, detect_aspis, DetectionStatus};
    use crate::exec::Execution;

    fn v(x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    #[test]
    fn majority_honest_wins() {
        let (g, x) = (v(&[1.0, 2.0]), v(&[9.0, 9.0]));
        assert_eq!(majority_vote(&[&g, &g, &x], EqualityMode::Exact).unwrap(), 0);
    }

    #[test]
    fn majority_distorted_pair_wins() {
        let (g, x) = (v(&[1.0, 2.0]), v(&[9.0, 9.0]));
        let i = majority_vote(&[&x, &x, &g], EqualityMode::Exact).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn majority_all_distinct_takes_first() {
        // every ordering of three distinct values falls back to the first copy
        let vals = [v(&[1.0]), v(&[2.0]), v(&[3.0])];
        for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let copies: Vec<&[f64]> = p.iter().map(|&i| vals[i].as_slice()).collect();
            assert_eq!(majority_vote(&copies, EqualityMode::Exact).unwrap(), 0);
        }
    }

    #[test]
    fn median_examples() {
        let (a, b, c) = (v(&[1.0]), v(&[2.0]), v(&[100.0]));
        assert_eq!(coordinate_median(&[&a, &b, &c]).unwrap(), vec![2.0]);
        assert_eq!(coordinate_median(&[&a]).unwrap(), vec![1.0]);
        let (z, t) = (v(&[0.0]), v(&[10.0]));
        assert_eq!(coordinate_median(&[&z, &z, &t, &t]).unwrap(), vec![5.0]);
        assert!(coordinate_median(&[]).is_err());
    }

    #[test]
    fn median_of_means_examples() {
        let data: Vec<Vec<f64>> = [0.0, 0.0, 6.0, 6.0, 6.0, 0.0].iter().map(|&x| vec![x]).collect();
        let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        assert_eq!(median_of_means(&refs, 2).unwrap(), vec![3.0]);
        assert_eq!(median_of_means(&refs, 6).unwrap(), mean(&refs).unwrap());
        assert!(median_of_means(&refs, 4).is_err());
    }

    #[test]
    fn sign_majority_example() {
        let (a, b, c) = (v(&[2.0]), v(&[-1.0]), v(&[-3.0]));
        assert_eq!(sign_majority(&[&a, &b, &c]).unwrap(), vec![-1.0]);
        let (z, y) = (v(&[0.0]), v(&[0.0]));
        assert_eq!(sign_majority(&[&z, &y]).unwrap(), vec![1.0]);
    }

    fn truth(f: usize) -> Vec<Gradient> {
        (0..f).map(|i| vec![i as f64 + 1.0, (i * i) as f64 * 0.5 - 3.0]).collect()
    }

    #[test]
    fn skipped_files_att1() {
        let a = assign_aspis(7, 3).unwrap();
        let t = truth(a.f);
        for (adv, skipped) in [(vec![0, 1], 0), (vec![0, 1, 2], 1)] {
            let s = AttackScenario::new(AttackMode::Att1, adv.len(), DistortionSpec::default());
            let table = byzantine_returns(&a, &adv, &s, &[], &t).unwrap();
            let g = build_agreement_graph(&a, &table, EqualityMode::Exact, Execution::Sequential).unwrap();
            let out = detect_aspis(&g, adv.len());
            assert_eq!(out.status, DetectionStatus::Identified);
            let sel = select_honest_gradients(&a, &table, &out.honest).unwrap();
            assert_eq!(a.f - sel.len(), skipped);
        }
    }

    #[test]
    fn zero_adversaries_is_plain_mean() {
        let a = assign_aspis(7, 3).unwrap();
        let t = truth(a.f);
        let table = byzantine_returns(&a, &[], &AttackScenario::none(), &[], &t).unwrap();
        let g = build_agreement_graph(&a, &table, EqualityMode::Exact, Execution::Sequential).unwrap();
        let out = detect_aspis(&g, 0);
        let agg = aggregate(&a, &table, Decision::Detected(&out), AggregationRule::default(), EqualityMode::Exact).unwrap();
        let refs: Vec<&[f64]> = t.iter().map(Vec::as_slice).collect();
        assert_eq!(agg.update, mean(&refs).unwrap());
    }

    #[test]
    fn empty_honest_set_is_degenerate() {
        let a = assign_aspis(5, 3).unwrap();
        let table = GradientTable::honest(&a, &truth(a.f)).unwrap();
        assert_eq!(select_honest_gradients(&a, &table, &[]).unwrap_err(), Error::DegenerateDetection);
    }

    #[test]
    fn excluded_votes_are_dropped() {
        let a = assign_aspis(5, 3).unwrap();
        let t = truth(a.f);
        let s = AttackScenario::new(AttackMode::Att3, 2, DistortionSpec::default());
        let table = byzantine_returns(&a, &[0, 1], &s, &[], &t).unwrap();
        let agg = aggregate(&a, &table, Decision::Excluding(&[0, 1]), AggregationRule::default(), EqualityMode::Exact).unwrap();
        assert_eq!(count_distorted(&a, &table, &agg, &t).unwrap(), 0);
        let bypass = aggregate(&a, &table, Decision::Bypass, AggregationRule::default(), EqualityMode::Exact).unwrap();
        assert_eq!(count_distorted(&a, &table, &bypass, &t).unwrap(), 3);
    }
}
