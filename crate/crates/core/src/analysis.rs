//! Distortion counts and fractions for every placement/attack pair, in closed
//! form and by brute force over adversarial strategies.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::SchemeKind;
use crate::combinatorics::{binomial, enumerate_r_subsets};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::{self, stream};

/// Largest cluster the exhaustive file scan accepts.
pub const BRUTE_FORCE_MAX_WORKERS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableAttack {
    /// Optimal fixed-disagreement coalition against the subset placement.
    Att2,
    /// Non-colluding attack against the subset placement.
    Att1,
    /// Worst-case choice of Byzantines for the group and baseline placements.
    Optimal,
    /// Benign (round-robin) choice of Byzantines.
    Weak,
}

impl TableAttack {
    pub fn label(self) -> &'static str {
        match self {
            TableAttack::Att2 => "ATT-2",
            TableAttack::Att1 => "ATT-1",
            TableAttack::Optimal => "optimal",
            TableAttack::Weak => "weak",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetoxAttack {
    Optimal,
    Weak,
}

/// One row of the distortion tables; `epsilon` is `c / f` rounded half-up to
/// three decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub scheme: String,
    pub attack: String,
    #[serde(rename = "K")]
    pub workers: usize,
    pub r: usize,
    pub q: usize,
    pub f: u64,
    pub c: u64,
    pub epsilon: f64,
}

/// `round_half_up(1000 * c / f)`, in exact integer arithmetic.
pub fn thousandths_half_up(c: u64, f: u64) -> u64 {
    assert!(f > 0, "distortion fraction over zero files");
    (2000 * c + f) / (2 * f)
}

pub fn epsilon_3dp(c: u64, f: u64) -> f64 {
    thousandths_half_up(c, f) as f64 / 1000.0
}

fn require_odd(r: usize) -> Result<()> {
    if r % 2 == 0 {
        return Err(Error::UnsupportedParameter(format!("redundancy r = {r} must be odd")));
    }
    Ok(())
}

/// Maximum files the optimal coalition corrupts on the subset placement:
/// `C(2q, r) / 2`.
pub fn cmax_aspis_att2(workers: usize, r: usize, q: usize) -> Result<u64> {
    require_odd(r)?;
    if 2 * q >= workers && q > 0 {
        return Err(Error::invalid(format!("q = {q} violates q < K/2 for K = {workers}")));
    }
    Ok(binomial(2 * q as u64, r as u64) / 2)
}

/// Files held only by Byzantines under the non-colluding attack: `C(q, r)`.
pub fn c_aspis_att1(r: usize, q: usize) -> Result<u64> {
    require_odd(r)?;
    Ok(binomial(q as u64, r as u64))
}

/// Corrupted group votes for the group placement.
///
/// Optimal: `floor(q / r')`. Weak (round-robin): `max(0, q - (K/r)(r' - 1))`.
pub fn c_detox(workers: usize, r: usize, q: usize, attack: DetoxAttack) -> Result<u64> {
    require_odd(r)?;
    if workers % r != 0 {
        return Err(Error::invalid(format!("group placement needs r | K, got r = {r}, K = {workers}")));
    }
    let majority = r.div_ceil(2);
    Ok(match attack {
        DetoxAttack::Optimal => (q / majority) as u64,
        DetoxAttack::Weak => q.saturating_sub(workers / r * (majority - 1)) as u64,
    })
}

pub fn c_baseline(workers: usize, q: usize) -> Result<u64> {
    if q > workers {
        return Err(Error::invalid(format!("q = {q} exceeds K = {workers}")));
    }
    Ok(q as u64)
}

/// One table row.
pub fn report(scheme: SchemeKind, attack: TableAttack, workers: usize, r: usize, q: usize) -> Result<DistortionReport> {
    let (f, c) = match (scheme, attack) {
        (SchemeKind::Aspis, TableAttack::Att2) => (binomial(workers as u64, r as u64), cmax_aspis_att2(workers, r, q)?),
        (SchemeKind::Aspis, TableAttack::Att1) => (binomial(workers as u64, r as u64), c_aspis_att1(r, q)?),
        (SchemeKind::Detox, TableAttack::Optimal) => ((workers / r) as u64, c_detox(workers, r, q, DetoxAttack::Optimal)?),
        (SchemeKind::Detox, TableAttack::Weak) => ((workers / r) as u64, c_detox(workers, r, q, DetoxAttack::Weak)?),
        (SchemeKind::Baseline, TableAttack::Optimal | TableAttack::Weak) => (workers as u64, c_baseline(workers, q)?),
        _ => {
            return Err(Error::invalid(format!("no closed form for {} under {}", scheme.name(), attack.label())));
        }
    };
    Ok(DistortionReport {
        scheme: scheme.name().to_string(),
        attack: attack.label().to_string(),
        workers,
        r,
        q,
        f,
        c,
        epsilon: epsilon_3dp(c, f),
    })
}

/// A `(K, r)` pair and the adversary counts to tabulate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableGrid {
    #[serde(rename = "K")]
    pub workers: usize,
    pub r: usize,
    pub qs: Vec<usize>,
}

/// Rows for every `q` in the grid, in the order: subset placement under
/// ATT-2 and ATT-1, baseline (optimal, weak), group placement (optimal, weak).
pub fn emit_tables(grid: &TableGrid) -> Result<Vec<DistortionReport>> {
    require_odd(grid.r)?;
    if grid.workers % grid.r != 0 {
        return Err(Error::invalid(format!(
            "grid (K, r) = ({}, {}) has r not dividing K; the group placement does not apply",
            grid.workers, grid.r
        )));
    }
    let rows = [
        (SchemeKind::Aspis, TableAttack::Att2),
        (SchemeKind::Aspis, TableAttack::Att1),
        (SchemeKind::Baseline, TableAttack::Optimal),
        (SchemeKind::Baseline, TableAttack::Weak),
        (SchemeKind::Detox, TableAttack::Optimal),
        (SchemeKind::Detox, TableAttack::Weak),
    ];
    grid.qs
        .iter()
        .flat_map(|&q| rows.iter().map(move |&(s, a)| report(s, a, grid.workers, grid.r, q)))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[DistortionReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::invalid(format!("CSV write failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::invalid(format!("CSV write failed: {e}")))?;
    Ok(())
}

pub fn to_json(rows: &[DistortionReport]) -> String {
    serde_json::to_string_pretty(rows).expect("reports serialize")
}

/// Adversarial strategy space for [`brute_force_cmax`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategySpace {
    /// Every common disagreement set `D ⊆ H`, `|D| <= q`.
    CommonD,
    /// Independent random `D_i ⊆ U \ {A_i}`, `|D_i| <= q`, per adversary.
    RandomPerAdversary { samples: usize, seed: u64 },
}

/// Files corrupted under disagreement sets `d[i]` (bitmask per adversary
/// `A_i`, with `adversaries[i]` its worker). A file is corrupted iff some
/// `A' ⊆ A ∩ F` with `|A'| >= r'` has `F \ A' ⊆ ∩_{i ∈ A'} D_i`.
pub fn corrupted_file_count(files: &[u32], adversaries: &[usize], d: &[u32], r: usize) -> usize {
    let majority = r.div_ceil(2) as u32;
    let index_of = |w: usize| adversaries.iter().position(|&a| a == w);
    let adv_mask: u32 = adversaries.iter().map(|&a| 1u32 << a).sum();
    files
        .iter()
        .filter(|&&file| {
            let present = file & adv_mask;
            // walk non-empty submasks of the Byzantines in the file
            let mut sub = present;
            while sub != 0 {
                if sub.count_ones() >= majority {
                    let mut common = u32::MAX;
                    let mut bits = sub;
                    while bits != 0 {
                        let w = bits.trailing_zeros() as usize;
                        common &= d[index_of(w).expect("member of A")];
                        bits &= bits - 1;
                    }
                    if file & !sub & !common == 0 {
                        return true;
                    }
                }
                sub = (sub - 1) & present;
            }
            false
        })
        .count()
}

/// Maximum corrupted-file count over the given strategy space for the subset
/// placement, with the Byzantines fixed to workers `0..q`.
pub fn brute_force_cmax(workers: usize, r: usize, q: usize, space: StrategySpace, exec: Execution) -> Result<u64> {
    if workers > BRUTE_FORCE_MAX_WORKERS {
        return Err(Error::Capacity(format!(
            "exhaustive scan supports K <= {BRUTE_FORCE_MAX_WORKERS}, got K = {workers}"
        )));
    }
    require_odd(r)?;
    if q >= workers {
        return Err(Error::invalid(format!("q = {q} must be below K = {workers}")));
    }
    let files: Vec<u32> = enumerate_r_subsets(workers, r)?
        .iter()
        .map(|s| s.members().iter().map(|&w| 1u32 << w).sum())
        .collect();
    let adversaries: Vec<usize> = (0..q).collect();
    let honest: Vec<usize> = (q..workers).collect();
    let best = match space {
        StrategySpace::CommonD => {
            let subsets = 1usize << honest.len();
            exec.map_reduce(
                subsets,
                || 0usize,
                |bits| {
                    if bits.count_ones() as usize > q {
                        return 0;
                    }
                    let d: u32 = honest.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &h)| 1u32 << h).sum();
                    corrupted_file_count(&files, &adversaries, &vec![d; q], r)
                },
                usize::max,
            )
        }
        StrategySpace::RandomPerAdversary { samples, seed } => exec.map_reduce(
            samples,
            || 0usize,
            |s| {
                let mut g = rng::derived(seed, stream::STRATEGY, s as u64);
                let d: Vec<u32> = adversaries
                    .iter()
                    .map(|&a| {
                        let others: Vec<usize> = (0..workers).filter(|&w| w != a).collect();
                        let size = g.gen_range(0..=q);
                        sample(&mut g, others.len(), size).into_iter().map(|i| 1u32 << others[i]).sum()
                    })
                    .collect();
                corrupted_file_count(&files, &adversaries, &d, r)
            },
            usize::max,
        ),
    };
    Ok(best as u64)
}
