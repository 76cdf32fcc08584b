//! Agreement-graph construction and adversary detection.

mod aspis;
mod clique;
mod equality;
mod graph;
mod induced;
mod window;

pub use aspis::{detect_aspis, DetectionOutcome, DetectionStatus};
pub use clique::{maximal_cliques, maximum_cliques, WorkerSet};
pub use equality::{gradients_equal, relative_difference, EqualityMode, GRADIENT_TOLERANCE};
pub use graph::{build_agreement_graph, AgreementGraph};
pub use induced::induced_agreement_graph;
pub use window::WindowDetector;
