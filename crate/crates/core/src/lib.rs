//! Redundant gradient assignment with clique-based detection of Byzantine workers.
//!
//! Files of a training batch are replicated over groups of workers. The parameter
//! server compares the copies it receives, builds an agreement graph over workers
//! and uses its cliques to decide which returns to trust before aggregating.

pub mod adversary;
pub mod aggregation;
pub mod analysis;
pub mod assignment;
pub mod combinatorics;
pub mod detection;
pub mod error;
pub mod exec;
pub mod harness;
pub mod rng;
pub mod table;

pub use error::{Error, Result};
