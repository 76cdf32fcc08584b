//! The parameter server's per-iteration decision: detect, then aggregate.

use crate::aggregation::{aggregate, Aggregate, AggregationRule, Decision};
use crate::assignment::{SchemeKind, TaskAssignment};
use crate::detection::{build_agreement_graph, detect_aspis, AgreementGraph, DetectionOutcome, EqualityMode, WindowDetector};
use crate::error::Result;
use crate::exec::Execution;
use crate::table::GradientTable;

/// Detection state carried across iterations.
#[derive(Debug, Clone)]
pub enum Detector {
    /// Single-iteration clique detection with adversary bound `q`.
    Clique { q: usize },
    /// Windowed degree-based detection.
    Window(WindowDetector),
    /// No detection; every vote counts.
    Off,
}

impl Detector {
    /// The detector a scheme runs with: clique detection for the subset
    /// placement, windowed detection for the design placement and none for
    /// the others.
    pub fn for_scheme(scheme: SchemeKind, workers: usize, q: usize, lambda: usize, window: usize) -> Result<Self> {
        Ok(match scheme {
            SchemeKind::Aspis => Detector::Clique { q },
            SchemeKind::AspisPlus => Detector::Window(WindowDetector::new(workers, q, lambda, window)?),
            SchemeKind::Detox | SchemeKind::Baseline => Detector::Off,
        })
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub aggregate: Aggregate,
    /// Single-iteration agreement graph, when detection ran.
    pub graph: Option<AgreementGraph>,
    /// Clique detection result, when clique detection ran.
    pub detection: Option<DetectionOutcome>,
    /// Workers treated as Byzantine this iteration.
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct Protocol {
    pub rule: AggregationRule,
    pub equality: EqualityMode,
    pub exec: Execution,
}

impl Protocol {
    /// Run detection and aggregation for iteration `t` once all returns are in.
    pub fn step(&self, detector: &mut Detector, t: usize, assignment: &TaskAssignment, table: &GradientTable) -> Result<StepOutcome> {
        table.check_complete()?;
        match detector {
            Detector::Off => Ok(StepOutcome {
                aggregate: aggregate(assignment, table, Decision::Bypass, self.rule, self.equality)?,
                graph: None,
                detection: None,
                flagged: Vec::new(),
            }),
            Detector::Clique { q } => {
                let graph = build_agreement_graph(assignment, table, self.equality, self.exec)?;
                let outcome = detect_aspis(&graph, *q);
                let aggregate = aggregate(assignment, table, Decision::Detected(&outcome), self.rule, self.equality)?;
                Ok(StepOutcome { aggregate, flagged: outcome.adversaries.clone(), graph: Some(graph), detection: Some(outcome) })
            }
            Detector::Window(window) => {
                let graph = build_agreement_graph(assignment, table, self.equality, self.exec)?;
                let flagged = window.observe(t, &graph)?;
                let aggregate = aggregate(assignment, table, Decision::Excluding(&flagged), self.rule, self.equality)?;
                Ok(StepOutcome { aggregate, graph: Some(graph), detection: None, flagged })
            }
        }
    }
}
