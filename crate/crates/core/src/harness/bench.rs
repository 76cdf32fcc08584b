//! Timing of maximal-clique enumeration on attack-induced agreement graphs.

use std::time::Instant;

use rand::seq::index::sample;
use serde::Serialize;

use crate::adversary::AttackMode;
use crate::detection::{induced_agreement_graph, maximal_cliques};
use crate::error::{Error, Result};
use crate::rng::{self, stream};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliqueTiming {
    #[serde(rename = "K")]
    pub workers: usize,
    pub q: usize,
    pub attack: String,
    pub milliseconds: f64,
    #[serde(skip)]
    pub maximal_cliques: usize,
    #[serde(skip)]
    pub maximum_cliques: usize,
}

/// Build the agreement graph that `attack` induces on the subset placement
/// (random Byzantine set, random `q`-subset disagreement set for ATT-2) and
/// time maximal-clique enumeration on it.
pub fn bench_cliques(workers: usize, r: usize, q: usize, attack: AttackMode, seed: u64) -> Result<CliqueTiming> {
    if attack == AttackMode::Att3 {
        return Err(Error::UnsupportedParameter("clique benchmark covers ATT-1 and ATT-2 only".into()));
    }
    if 2 * q >= workers && q > 0 {
        return Err(Error::invalid(format!("q = {q} violates q < K/2 for K = {workers}")));
    }
    let mut g = rng::derived(seed, stream::ADVERSARIES, 0);
    let mut adversaries = sample(&mut g, workers, q).into_vec();
    adversaries.sort_unstable();
    let honest: Vec<usize> = (0..workers).filter(|w| adversaries.binary_search(w).is_err()).collect();
    let mut disagreement: Vec<usize> = if attack == AttackMode::Att2 {
        sample(&mut g, honest.len(), q).into_iter().map(|i| honest[i]).collect()
    } else {
        Vec::new()
    };
    disagreement.sort_unstable();
    let graph = induced_agreement_graph(workers, r, attack, &adversaries, &disagreement)?;

    let start = Instant::now();
    let cliques = maximal_cliques(graph.adjacency());
    let milliseconds = (start.elapsed().as_secs_f64() * 1e6).round() / 1e3;
    let largest = cliques.iter().map(Vec::len).max().unwrap_or(0);
    let maximum = cliques.iter().filter(|c| c.len() == largest).count();
    Ok(CliqueTiming {
        workers,
        q,
        attack: attack.name().to_string(),
        milliseconds,
        maximal_cliques: cliques.len(),
        maximum_cliques: maximum,
    })
}
