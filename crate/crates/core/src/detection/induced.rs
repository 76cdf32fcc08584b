//! Agreement graphs derived directly from an attack's structure on the
//! subset placement, without materializing the `C(K, r)` files.
//!
//! With deterministic distortions every Byzantine copy of a file is the same
//! value, so two Byzantines always agree, two honest workers always agree, and
//! a Byzantine `a` and an honest `h` disagree iff some shared file is
//! corrupted.

use super::clique::WorkerSet;
use super::graph::AgreementGraph;
use crate::adversary::AttackMode;
use crate::error::{Error, Result};

/// Agreement graph that the subset placement with `K` workers and
/// redundancy `r` would produce under the given attack.
pub fn induced_agreement_graph(
    workers: usize,
    r: usize,
    mode: AttackMode,
    adversaries: &[usize],
    disagreement: &[usize],
) -> Result<AgreementGraph> {
    if r < 2 || r > workers {
        return Err(Error::invalid(format!("need 2 <= r <= K, got r = {r}, K = {workers}")));
    }
    let byz = WorkerSet::from_slice(workers, adversaries);
    let d = WorkerSet::from_slice(workers, disagreement);
    let q = byz.len();
    let majority = r.div_ceil(2);
    // non-Byzantine members of D other than h
    let d_rest = d.difference(&byz).len().saturating_sub(1);
    let mut edges = Vec::new();
    for u in 0..workers {
        for v in u + 1..workers {
            let (bu, bv) = (byz.contains(u), byz.contains(v));
            let agree = if bu == bv {
                true
            } else {
                let h = if bu { v } else { u };
                !shared_file_corrupted(mode, r, majority, q, d.contains(h), d_rest, workers)
            };
            if agree {
                edges.push((u, v));
            }
        }
    }
    Ok(AgreementGraph::from_edges(workers, &edges))
}

/// Whether some file containing a Byzantine `a` and an honest `h` is corrupted.
fn shared_file_corrupted(mode: AttackMode, r: usize, majority: usize, q: usize, h_in_d: bool, d_rest: usize, workers: usize) -> bool {
    match mode {
        AttackMode::Att1 => true,
        // need j >= r' Byzantines (a plus j-1 others) and r-j honest members, all in D
        AttackMode::Att2 => h_in_d && (majority..r).any(|j| j - 1 < q && r - j - 1 <= d_rest),
        // need j >= r' Byzantines and r-j honest members, any of them
        AttackMode::Att3 => (majority..r).any(|j| j - 1 < q && r - j - 1 < workers - q),
    }
}
