//! Refinement sweep, candidate enumeration and budgeted selection.
//!
//! A refinement sweep keeps splitting the leaves while two half-size leaf
//! solves beat one full-size solve, `2·TS(i+1) < TS(i)`. Every accepted
//! iteration of every model becomes a [`Candidate`]; [`select`] then picks one
//! candidate per problem instance so that the summed predicted latency is
//! minimal and the summed device memory stays within the budget.

mod report;
mod search;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::costmodel::{estimate, working_set_bytes, CostError, CostEstimate, DeviceProfile, Problem};
use crate::decomposition::{Model, MAX_ITERATION};

pub use report::explain;
pub use search::{select, select_with, SearchStats, SelectOptions};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DseError {
    #[error("the host solve latency table is empty")]
    EmptyTable,
    #[error("candidate {id}: predicted latency must be positive and finite")]
    InvalidCandidate { id: u32 },
    #[error("duplicate candidate id {id}")]
    DuplicateId { id: u32 },
    #[error(transparent)]
    Cost(#[from] CostError),
}

/// Why a refinement sweep stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum StopReason {
    /// `2·TS(at) ≥ TS(at-1)`: splitting once more no longer pays off.
    Stalled { at: u32 },
    /// The next level would leave empty leaves.
    SizeFloor,
    /// The measured table has no entry for the next iteration.
    TableExhausted,
    MaxIteration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub iteration: u32,
    pub ts_s: f64,
    pub estimate: CostEstimate,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub model: Model,
    pub problem: Problem,
    /// Accepted iterations in order, followed by the rejected one if the sweep stalled.
    pub steps: Vec<RefinementStep>,
    pub stop: StopReason,
}

impl RefinementTrace {
    pub fn last_accepted(&self) -> u32 {
        self.steps.iter().filter(|s| s.accepted).map(|s| s.iteration).max().unwrap_or(0)
    }

    pub fn accepted(&self) -> impl Iterator<Item = &RefinementStep> {
        self.steps.iter().filter(|s| s.accepted)
    }

    pub fn stall_iteration(&self) -> Option<u32> {
        match self.stop {
            StopReason::Stalled { at } => Some(at),
            _ => None,
        }
    }
}

fn leaf_ts(problem: Problem, profile: &DeviceProfile, iteration: u32) -> Result<f64, CostError> {
    let r = (1u64 << iteration) as f64;
    profile.ts_latency(iteration, problem.n as f64 / r, problem.rhs as f64)
}

/// Evaluates `i = 0, 1, …` until the stopping condition fires.
///
/// The set of accepted iterations depends only on `TS` (and `n` through the
/// size floor), not on the model; the model only selects which estimate is
/// attached to each step.
pub fn refine_until_stall(problem: Problem, profile: &DeviceProfile, model: Model) -> Result<RefinementTrace, DseError> {
    if profile.ts_table_len() == Some(0) {
        return Err(DseError::EmptyTable);
    }
    let mut steps = Vec::new();
    let mut i = 0u32;
    let mut ts = leaf_ts(problem, profile, 0)?;
    steps.push(RefinementStep {
        iteration: 0,
        ts_s: ts,
        estimate: estimate(model, problem, 0, profile)?,
        accepted: true,
    });
    let stop = loop {
        if i == MAX_ITERATION {
            break StopReason::MaxIteration;
        }
        let next = i + 1;
        if (problem.n as u64) < (1u64 << next) {
            break StopReason::SizeFloor;
        }
        let next_ts = match leaf_ts(problem, profile, next) {
            Ok(v) => v,
            Err(CostError::CalibrationRequired { .. }) => break StopReason::TableExhausted,
            Err(e) => return Err(e.into()),
        };
        let accepted = 2.0 * next_ts < ts;
        steps.push(RefinementStep {
            iteration: next,
            ts_s: next_ts,
            estimate: estimate(model, problem, next, profile)?,
            accepted,
        });
        if !accepted {
            break StopReason::Stalled { at: next };
        }
        i = next;
        ts = next_ts;
    };
    Ok(RefinementTrace { model, problem, steps, stop })
}

/// One configuration of one problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u32,
    /// Index of the problem instance; a selection holds one candidate per instance.
    pub instance: u32,
    pub model: Model,
    pub iteration: u32,
    pub predicted: CostEstimate,
    /// Device memory in bytes.
    pub resource_cost: u64,
}

impl Candidate {
    pub fn description(&self) -> String {
        if self.iteration == 0 {
            format!("instance {}: host only", self.instance)
        } else {
            format!(
                "instance {}: {} i={} (r={}), all updates offloaded",
                self.instance,
                self.model,
                self.iteration,
                1u64 << self.iteration
            )
        }
    }
}

/// Every model × every accepted iteration of every instance.
pub fn enumerate_candidates(problems: &[Problem], profile: &DeviceProfile) -> Result<Vec<Candidate>, DseError> {
    Ok(explore_traces(problems, profile)?.1)
}

fn explore_traces(problems: &[Problem], profile: &DeviceProfile) -> Result<(Vec<RefinementTrace>, Vec<Candidate>), DseError> {
    let mut traces = Vec::new();
    let mut out = Vec::new();
    for (k, &problem) in problems.iter().enumerate() {
        let per_model: Vec<RefinementTrace> = Model::ALL
            .iter()
            .map(|&m| refine_until_stall(problem, profile, m))
            .collect::<Result<_, _>>()?;
        let last = per_model[0].last_accepted();
        for i in 0..=last {
            for trace in &per_model {
                let step = &trace.steps[i as usize];
                out.push(Candidate {
                    id: out.len() as u32,
                    instance: k as u32,
                    model: trace.model,
                    iteration: i,
                    predicted: step.estimate,
                    resource_cost: working_set_bytes(trace.model, problem, i, profile.element_bytes)?,
                });
            }
        }
        traces.extend(per_model);
    }
    Ok((traces, out))
}

/// Selected candidates and how the search got there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DseResult {
    /// Chosen candidate ids, one per instance in instance order.
    pub chosen: Vec<u32>,
    pub picks: Vec<Candidate>,
    pub predicted_total_s: f64,
    /// Summed host-only latency of the chosen instances, when every instance has an `i = 0` candidate.
    pub baseline_s: Option<f64>,
    pub predicted_speedup: Option<f64>,
    pub budget: u64,
    pub budget_used: u64,
    /// No selection fit the budget; `picks` holds the host-only configurations.
    pub fallback: bool,
    pub search_stats: SearchStats,
    /// Refinement sweeps behind the candidates, when produced by [`explore`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<RefinementTrace>,
}

impl DseResult {
    /// Model of the first instance's pick.
    pub fn model(&self) -> Option<Model> {
        self.picks.first().map(|c| c.model)
    }

    pub fn iteration(&self) -> Option<u32> {
        self.picks.first().map(|c| c.iteration)
    }
}

/// Sweep, enumerate and select in one call.
pub fn explore(problems: &[Problem], profile: &DeviceProfile, budget: u64) -> Result<DseResult, DseError> {
    let (traces, candidates) = explore_traces(problems, profile)?;
    let mut result = select(&candidates, budget)?;
    result.traces = traces;
    Ok(result)
}
