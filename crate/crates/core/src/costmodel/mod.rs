//! Closed-form latency model for the three schedules.
//!
//! A schedule at iteration `i` (refinement `r = 2^i`) costs `r · TS(i)` on the
//! host plus the device, transfer and invocation terms of its updates:
//!
//! | model     | update terms                                   |
//! |-----------|------------------------------------------------|
//! | recursive | `Σ_{j<i} 2^j · gemm(j)`, one per recursion node |
//! | iterative | `Σ_{j=0}^{r-2} gemm(i, j)`, one shrinking panel each |
//! | blocked   | `(r-1) · r/2 · gemm(i)`, uniform square blocks  |
//!
//! Nothing overlaps: the total is the plain sum of all components.

mod estimate;
mod profile;

use alloc::vec::Vec;

use crate::decomposition::{Model, Task, TaskGraph, TaskKind};

pub use estimate::{speedup, CostEstimate};
pub use profile::{DeviceProfile, GemmTerm, HostTsLatency};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("no host solve latency for iteration {iteration}; calibrate the profile first")]
    CalibrationRequired { iteration: u32 },
    #[error("invalid profile field `{field}`: {reason}")]
    InvalidProfile { field: &'static str, reason: &'static str },
    #[error("expected {expected} update terms, got {actual}")]
    TermCount { expected: usize, actual: usize },
    #[error("refinement iteration {iteration} is too deep for a system of size {n}")]
    TooDeep { n: usize, iteration: u32 },
    #[error("task dimensions must be positive")]
    EmptyTask,
}

/// System size and right-hand-side count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Problem {
    pub n: usize,
    pub rhs: usize,
}

impl Problem {
    /// `n` right-hand sides, as in the many-RHS solve.
    pub fn square(n: usize) -> Self {
        Self { n, rhs: n }
    }
}

fn leaves(iteration: u32) -> Result<u64, CostError> {
    crate::decomposition::refinement(iteration)
        .map(|r| r.level())
        .map_err(|_| CostError::TooDeep { n: 0, iteration })
}

fn aggregate(model: Model, iteration: u32, host_comp_s: f64, groups: &[(f64, GemmTerm)]) -> CostEstimate {
    let mut device = 0.0;
    let mut h2d = 0.0;
    let mut d2h = 0.0;
    let mut sync = 0.0;
    for (mult, term) in groups {
        device += mult * term.comp_s;
        h2d += mult * term.h2d_s;
        d2h += mult * term.d2h_s;
        sync += mult * term.sync_s;
    }
    CostEstimate::new(model, iteration, host_comp_s, device, h2d, d2h, sync)
}

/// `r·TS(i) + Σ_{j<i} 2^j·gemm(j)`, with `per_depth[j]` the terms of one depth-`j` update.
pub fn recursive_formula(iteration: u32, ts_s: f64, per_depth: &[GemmTerm]) -> Result<CostEstimate, CostError> {
    if per_depth.len() != iteration as usize {
        return Err(CostError::TermCount {
            expected: iteration as usize,
            actual: per_depth.len(),
        });
    }
    let r = leaves(iteration)? as f64;
    let groups: Vec<(f64, GemmTerm)> = per_depth
        .iter()
        .enumerate()
        .map(|(j, t)| ((1u64 << j) as f64, *t))
        .collect();
    Ok(aggregate(Model::Recursive, iteration, r * ts_s, &groups))
}

/// `r·TS(i) + Σ_{j=0}^{r-2} gemm(i, j)`, one term per panel.
pub fn iterative_formula(iteration: u32, ts_s: f64, per_panel: &[GemmTerm]) -> Result<CostEstimate, CostError> {
    let r = leaves(iteration)?;
    let expected = (r - 1) as usize;
    if per_panel.len() != expected {
        return Err(CostError::TermCount {
            expected,
            actual: per_panel.len(),
        });
    }
    let groups: Vec<(f64, GemmTerm)> = per_panel.iter().map(|t| (1.0, *t)).collect();
    Ok(aggregate(Model::Iterative, iteration, r as f64 * ts_s, &groups))
}

/// `r·TS(i) + ((r-1)·r/2)·gemm(i)`.
pub fn blocked_formula(iteration: u32, ts_s: f64, per_block: GemmTerm) -> Result<CostEstimate, CostError> {
    let r = leaves(iteration)?;
    let blocks = ((r - 1) * r / 2) as f64;
    Ok(aggregate(Model::Blocked, iteration, r as f64 * ts_s, &[(blocks, per_block)]))
}

fn check_depth(problem: Problem, iteration: u32) -> Result<f64, CostError> {
    let r = leaves(iteration)?;
    if (problem.n as u64) < r || problem.n == 0 {
        return Err(CostError::TooDeep { n: problem.n, iteration });
    }
    Ok(r as f64)
}

/// Recursive model: a depth-`j` update is `n/2^(j+1)` square against `rhs` columns.
pub fn cost_recursive(problem: Problem, iteration: u32, profile: &DeviceProfile) -> Result<CostEstimate, CostError> {
    let r = check_depth(problem, iteration)?;
    let (n, w) = (problem.n as f64, problem.rhs as f64);
    let ts = profile.ts_latency(iteration, n / r, w)?;
    let terms: Vec<GemmTerm> = (0..iteration)
        .map(|j| {
            let m = n / (1u64 << (j + 1)) as f64;
            profile.gemm_term(m, m, w)
        })
        .collect();
    recursive_formula(iteration, ts, &terms)
}

/// Iterative model: panel `j` is `(r-1-j)·n/r` rows by `n/r` columns.
pub fn cost_iterative(problem: Problem, iteration: u32, profile: &DeviceProfile) -> Result<CostEstimate, CostError> {
    let r = check_depth(problem, iteration)?;
    let (n, w) = (problem.n as f64, problem.rhs as f64);
    let b = n / r;
    let ts = profile.ts_latency(iteration, b, w)?;
    let panels = r as usize - 1;
    let terms: Vec<GemmTerm> = (0..panels)
        .map(|j| profile.gemm_term((panels - j) as f64 * b, b, w))
        .collect();
    iterative_formula(iteration, ts, &terms)
}

/// Blocked model: every block is `n/r` square.
pub fn cost_blocked(problem: Problem, iteration: u32, profile: &DeviceProfile) -> Result<CostEstimate, CostError> {
    let r = check_depth(problem, iteration)?;
    let (n, w) = (problem.n as f64, problem.rhs as f64);
    let b = n / r;
    let ts = profile.ts_latency(iteration, b, w)?;
    blocked_formula(iteration, ts, profile.gemm_term(b, b, w))
}

pub fn estimate(model: Model, problem: Problem, iteration: u32, profile: &DeviceProfile) -> Result<CostEstimate, CostError> {
    match model {
        Model::Recursive => cost_recursive(problem, iteration, profile),
        Model::Iterative => cost_iterative(problem, iteration, profile),
        Model::Blocked => cost_blocked(problem, iteration, profile),
    }
}

/// Latency of a single task.
///
/// Solves cost `TS(i)` on the host; updates cost `2pqw / rate` on the device
/// plus one transfer each way and one invocation overhead.
pub fn node_cost(task: &Task, model: Model, iteration: u32, profile: &DeviceProfile) -> Result<CostEstimate, CostError> {
    let (p, q, w) = task.dims();
    if p == 0 || q == 0 || w == 0 {
        return Err(CostError::EmptyTask);
    }
    match task.kind {
        TaskKind::Ts => {
            let ts = profile.ts_latency(iteration, p as f64, w as f64)?;
            Ok(CostEstimate::new(model, iteration, ts, 0.0, 0.0, 0.0, 0.0))
        }
        TaskKind::Gemm => Ok(CostEstimate::new(
            model,
            iteration,
            0.0,
            profile.gemm_seconds(p as f64, q as f64, w as f64),
            profile.h2d_seconds(task.payload_bytes_h2d as f64),
            profile.d2h_seconds(task.payload_bytes_d2h as f64),
            profile.sync_overhead,
        )),
    }
}

/// Sum of [`node_cost`] over every task of the graph.
pub fn graph_cost(graph: &TaskGraph, profile: &DeviceProfile) -> Result<CostEstimate, CostError> {
    let mut total = CostEstimate::zero(graph.model, graph.iteration());
    for t in &graph.tasks {
        total = total.combine(&node_cost(t, graph.model, graph.iteration(), profile)?);
    }
    Ok(total)
}

/// Largest single update working set (`L` block, `X` panel and `B` panel) in bytes.
///
/// Updates run one per device queue, so this is the device memory one
/// candidate needs. Zero when nothing is offloaded.
pub fn working_set_bytes(model: Model, problem: Problem, iteration: u32, element_bytes: u64) -> Result<u64, CostError> {
    let r = check_depth(problem, iteration)? as usize;
    if r == 1 {
        return Ok(0);
    }
    let (n, w) = (problem.n, problem.rhs);
    let b = n / r;
    let (p, q) = match model {
        Model::Recursive => (n / 2, n.div_ceil(2)),
        Model::Iterative => (n - b, b),
        Model::Blocked => (n - (r - 1) * b, b),
    };
    let (p, q, w) = (p as u64, q as u64, w as u64);
    Ok((p * q + q * w + p * w) * element_bytes)
}

#[cfg(test)]
mod tests;
