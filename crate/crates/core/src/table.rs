//! Returned gradients for one iteration, laid out like `worker_files`.

use crate::assignment::TaskAssignment;
use crate::error::{Error, Result};

pub type Gradient = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientTable {
    dim: usize,
    /// `returns[j][s]` is worker `j`'s value for its `s`-th assigned file.
    returns: Vec<Vec<Option<Gradient>>>,
}

impl GradientTable {
    /// A table with every slot still missing.
    pub fn empty(assignment: &TaskAssignment, dim: usize) -> Self {
        let returns = assignment.worker_files.iter().map(|files| vec![None; files.len()]).collect();
        GradientTable { dim, returns }
    }

    /// Every worker returns the true gradient of each of its files.
    pub fn honest(assignment: &TaskAssignment, truth: &[Gradient]) -> Result<Self> {
        if truth.len() != assignment.f {
            return Err(Error::invalid(format!(
                "{} true gradients supplied for {} files",
                truth.len(),
                assignment.f
            )));
        }
        let dim = truth.first().map_or(0, Vec::len);
        if truth.iter().any(|g| g.len() != dim) {
            return Err(Error::invalid("true gradients have mixed dimensions"));
        }
        let returns = assignment
            .worker_files
            .iter()
            .map(|files| files.iter().map(|&i| Some(truth[i].clone())).collect())
            .collect();
        Ok(GradientTable { dim, returns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, assignment: &TaskAssignment, worker: usize, file: usize, value: Gradient) -> Result<()> {
        if value.len() != self.dim {
            return Err(Error::invalid(format!("gradient of dimension {} in a table of dimension {}", value.len(), self.dim)));
        }
        let slot = assignment
            .slot(worker, file)
            .ok_or_else(|| Error::invalid(format!("worker {worker} is not assigned file {file}")))?;
        self.returns[worker][slot] = Some(value);
        Ok(())
    }

    pub fn get(&self, assignment: &TaskAssignment, worker: usize, file: usize) -> Result<&[f64]> {
        let slot = assignment
            .slot(worker, file)
            .ok_or_else(|| Error::invalid(format!("worker {worker} is not assigned file {file}")))?;
        self.returns[worker][slot]
            .as_deref()
            .ok_or_else(|| Error::ProtocolViolation(format!("worker {worker} has not returned file {file}")))
    }

    /// All copies of `file`, in ascending worker order.
    pub fn copies<'a>(&'a self, assignment: &TaskAssignment, file: usize) -> Result<Vec<(usize, &'a [f64])>> {
        assignment.file_workers[file]
            .iter()
            .map(|&w| self.get(assignment, w, file).map(|g| (w, g)))
            .collect()
    }

    /// Synchronous-round check: every worker has returned every file.
    pub fn check_complete(&self) -> Result<()> {
        for (j, row) in self.returns.iter().enumerate() {
            if let Some(s) = row.iter().position(Option::is_none) {
                return Err(Error::ProtocolViolation(format!("worker {j} is missing its return for slot {s}")));
            }
        }
        Ok(())
    }

    /// Iterate over every returned vector.
    pub fn all_returns(&self) -> impl Iterator<Item = &[f64]> {
        self.returns.iter().flatten().filter_map(|g| g.as_deref())
    }
}
