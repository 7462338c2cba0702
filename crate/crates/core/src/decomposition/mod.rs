//! Task graphs for the recursive, iterative and blocked schedules.
//!
//! Every graph is made of two task kinds: a host-side triangular solve on one
//! diagonal leaf block, and a device-side update `B[rows] -= L[rows, cols] ·
//! X[cols]`. Dependencies come from a data-flow pass over the leaf row blocks
//! of `B`, so the graph carries exactly the read-after-write and
//! write-after-write orderings the kernels need.

mod build;
mod execute;
mod validate;

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::LinalgError;

pub use build::{build, build_blocked, build_iterative, build_recursive, build_with, GraphOptions};
pub use execute::{execute_in_order, execute_sequential};
pub use validate::{validate, ValidationError, ValidationErrorKind};
pub(crate) use validate::topological_order;

/// Largest supported refinement iteration.
pub const MAX_ITERATION: u32 = 30;

/// Decomposition scheme. The declaration order is the tie-break order used by the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Recursive,
    Iterative,
    Blocked,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Recursive, Model::Iterative, Model::Blocked];

    pub fn name(self) -> &'static str {
        match self {
            Model::Recursive => "recursive",
            Model::Iterative => "iterative",
            Model::Blocked => "blocked",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "recursive" => Ok(Model::Recursive),
            "iterative" => Ok(Model::Iterative),
            "blocked" => Ok(Model::Blocked),
            _ => Err(UnknownModel),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown model (expected recursive, iterative or blocked)")]
pub struct UnknownModel;

/// Iteration `i` and the matching number of diagonal leaves `r = 2^i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RefinementLevel {
    iteration: u32,
    level: u64,
}

impl RefinementLevel {
    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    /// `r` as a count; refinement levels never exceed `2^30`.
    pub fn leaves(&self) -> usize {
        self.level as usize
    }
}

pub fn refinement(iteration: u32) -> Result<RefinementLevel, DecompositionError> {
    if iteration > MAX_ITERATION {
        return Err(DecompositionError::RefinementOverflow { iteration });
    }
    Ok(RefinementLevel {
        iteration,
        level: 1u64 << iteration,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl TaskId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Ts,
    Gemm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Host,
    Device,
}

/// One node of the graph.
///
/// `rows` are the rows of `B` the task writes. For a solve, `cols == rows`
/// (the diagonal block of `L`); for an update, `cols` selects both the columns
/// of `L` and the already solved rows of `X` it reads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub kind: TaskKind,
    pub placement: Placement,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub rhs: usize,
    /// Round index, blocked schedule only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    /// Recursion depth of an update, recursive schedule only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    pub deps: Vec<TaskId>,
    pub payload_bytes_h2d: u64,
    pub payload_bytes_d2h: u64,
}

impl Task {
    /// `(p, q, w)`: target rows, inner dimension, right-hand-side width.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows.len(), self.cols.len(), self.rhs)
    }

    /// Multiply-adds performed by the task's kernel.
    pub fn multiply_adds(&self) -> u64 {
        let (p, q, w) = self.dims();
        match self.kind {
            TaskKind::Gemm => p as u64 * q as u64 * w as u64,
            TaskKind::Ts => (p as u64 * p.saturating_sub(1) as u64 / 2) * w as u64,
        }
    }

    pub fn is_device(&self) -> bool {
        self.placement == Placement::Device
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph {
    pub model: Model,
    pub n: usize,
    pub rhs: usize,
    pub element_bytes: u64,
    pub refinement: RefinementLevel,
    pub tasks: Vec<Task>,
}

impl TaskGraph {
    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id.index()]
    }

    pub fn iteration(&self) -> u32 {
        self.refinement.iteration
    }

    pub fn ts_tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.iter().filter(|t| t.kind == TaskKind::Ts)
    }

    pub fn gemm_tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.iter().filter(|t| t.kind == TaskKind::Gemm)
    }

    /// Number of distinct rounds used by the blocked schedule.
    pub fn round_count(&self) -> usize {
        self.tasks
            .iter()
            .filter_map(|t| t.round)
            .max()
            .map_or(0, |r| r as usize + 1)
    }

    /// Update tasks grouped by round.
    pub fn rounds(&self) -> Vec<Vec<TaskId>> {
        let mut rounds: Vec<Vec<TaskId>> = (0..self.round_count()).map(|_| Vec::new()).collect();
        for t in &self.tasks {
            if let Some(r) = t.round {
                rounds[r as usize].push(t.id);
            }
        }
        rounds
    }

    pub fn gemm_multiply_adds(&self) -> u64 {
        self.gemm_tasks().map(Task::multiply_adds).sum()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DecompositionError {
    #[error("refinement iteration {iteration} exceeds the supported maximum")]
    RefinementOverflow { iteration: u32 },
    #[error("refinement too deep: {level} leaves requested for a system of size {n}")]
    RefinementTooDeep { n: usize, level: u64 },
    #[error("system size must be at least 1")]
    EmptyProblem,
    #[error("could not fill round {round} of the blocked schedule")]
    RoundAssignment { round: u32 },
    #[error("execution order is not a topological order of the graph")]
    OrderNotTopological,
    #[error("matrix has {actual} rows but the graph was built for n = {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("task {task}: {source}")]
    Kernel { task: TaskId, source: LinalgError },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}
