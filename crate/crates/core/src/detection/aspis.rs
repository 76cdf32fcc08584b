use serde::Serialize;

use super::clique::maximum_cliques;
use super::graph::AgreementGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionStatus {
    Identified,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectionOutcome {
    pub status: DetectionStatus,
    /// Workers declared honest (empty when ambiguous).
    pub honest: Vec<usize>,
    /// Adversary estimate (empty when ambiguous).
    pub adversaries: Vec<usize>,
    /// Number of maximum cliques found.
    pub max_cliques: usize,
    pub max_clique_size: usize,
}

impl DetectionOutcome {
    pub fn is_identified(&self) -> bool {
        self.status == DetectionStatus::Identified
    }

    /// Outcome for a run without detection: everyone is trusted.
    pub fn trust_all(workers: usize) -> Self {
        DetectionOutcome {
            status: DetectionStatus::Identified,
            honest: (0..workers).collect(),
            adversaries: Vec::new(),
            max_cliques: 1,
            max_clique_size: workers,
        }
    }
}

/// Clique-based detection on a single-iteration agreement graph.
///
/// A unique maximum clique is declared honest and everything else adversarial.
/// More than one maximum clique is ambiguous. A unique maximum clique smaller
/// than `K - q` cannot contain all honest workers under the `q` bound, so it
/// is also reported ambiguous.
pub fn detect_aspis(graph: &AgreementGraph, q: usize) -> DetectionOutcome {
    let k = graph.workers();
    let cliques = maximum_cliques(graph.adjacency());
    let size = cliques.first().map_or(0, Vec::len);
    let ambiguous = DetectionOutcome {
        status: DetectionStatus::Ambiguous,
        honest: Vec::new(),
        adversaries: Vec::new(),
        max_cliques: cliques.len(),
        max_clique_size: size,
    };
    if cliques.len() != 1 || size + q < k {
        return ambiguous;
    }
    let threshold = k.saturating_sub(q + 1);
    let (honest, adversaries): (Vec<usize>, Vec<usize>) =
        (0..k).partition(|&w| cliques[0].binary_search(&w).is_ok() && graph.degree(w) >= threshold);
    DetectionOutcome { status: DetectionStatus::Identified, honest, adversaries, max_cliques: 1, max_clique_size: size }
}
