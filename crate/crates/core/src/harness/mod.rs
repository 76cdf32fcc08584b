//! End-to-end simulation: synthetic tasks, the training loop, single-iteration
//! experiments and benchmarks.

pub mod bench;
pub mod config;
pub mod latency;
pub mod protocol;
pub mod sim;
pub mod task;
pub mod train;

pub use bench::{bench_cliques, CliqueTiming};
pub use config::{RunConfig, Schedule, TaskConfig};
pub use latency::{detection_latency, LatencyConfig, LatencyReport, Segment};
pub use protocol::{Detector, Protocol, StepOutcome};
pub use sim::{distorted_count, random_gradients, simulate_iteration, IterationReport};
pub use task::{synthetic_task, GradientModel, SyntheticTask, TaskKind};
pub use train::{train, train_on, worker_labels, IterationRecord, Trajectory};
