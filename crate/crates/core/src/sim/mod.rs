//! Deterministic discrete-event simulation of a task graph on a host worker
//! pool, device queues and a two-channel link.
//!
//! Tasks are placed one at a time in the smallest-id-first topological order.
//! Each task starts as soon as its dependencies have finished and the
//! resources it needs are free; a resource is free once the last task placed
//! on it has finished, so later tasks never slip into earlier gaps. A device
//! task occupies the host-to-device channel, then a device queue (invocation
//! overhead plus compute), then the device-to-host channel.
//!
//! With overlap disabled every task waits for all previously placed tasks,
//! which reproduces the non-overlapped cost model exactly. Enabling overlap
//! only removes constraints, so it never lengthens the schedule.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::costmodel::{node_cost, CostError, DeviceProfile};
use crate::decomposition::{topological_order, validate, TaskGraph, TaskId, TaskKind, ValidationError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Simulate,
    Hybrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecutionConfig {
    pub mode: ExecMode,
    pub host_workers: u32,
    pub device_queues: u32,
    pub overlap_enabled: bool,
    /// Keep `L` on the device: updates upload only their `X` panel.
    #[serde(default)]
    pub resident_l: bool,
    pub profile: DeviceProfile,
}

impl ExecutionConfig {
    /// One worker, one queue, no overlap.
    pub fn serial(profile: DeviceProfile) -> Self {
        Self {
            mode: ExecMode::Simulate,
            host_workers: 1,
            device_queues: 1,
            overlap_enabled: false,
            resident_l: false,
            profile,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Resource {
    HostPool(u32),
    DeviceQueue(u32),
    LinkH2D,
    LinkD2H,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::HostPool(k) => write!(f, "host{k}"),
            Resource::DeviceQueue(k) => write!(f, "device{k}"),
            Resource::LinkH2D => f.write_str("h2d"),
            Resource::LinkD2H => f.write_str("d2h"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub task: TaskId,
    pub resource: Resource,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub events: Vec<TimelineEvent>,
    pub makespan_s: f64,
}

impl Timeline {
    pub fn from_events(events: Vec<TimelineEvent>) -> Self {
        let makespan_s = events.iter().map(|e| e.end_s).fold(0.0, f64::max);
        Self { events, makespan_s }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("host_workers and device_queues must be at least 1")]
    NoResources,
}

/// Index of the earliest-free slot, lowest index on ties.
fn earliest(free: &[f64]) -> usize {
    let mut best = 0;
    for (k, &t) in free.iter().enumerate() {
        if t < free[best] {
            best = k;
        }
    }
    best
}

pub fn simulate(graph: &TaskGraph, config: &ExecutionConfig) -> Result<Timeline, SimError> {
    validate(graph)?;
    if config.host_workers == 0 || config.device_queues == 0 {
        return Err(SimError::NoResources);
    }
    let order = topological_order(graph).expect("validated graphs are acyclic");
    let profile = &config.profile;
    let iteration = graph.iteration();

    let mut host_free = vec![0.0f64; config.host_workers as usize];
    let mut queue_free = vec![0.0f64; config.device_queues as usize];
    let (mut h2d_free, mut d2h_free) = (0.0f64, 0.0f64);
    let mut horizon = 0.0f64;
    let mut finish = vec![0.0f64; graph.tasks.len()];
    let mut events = Vec::with_capacity(graph.tasks.len() * 3);

    for id in order {
        let task = graph.task(id);
        let cost = node_cost(task, graph.model, iteration, profile)?;
        let mut ready = task.deps.iter().map(|d| finish[d.index()]).fold(0.0, f64::max);
        if !config.overlap_enabled {
            ready = ready.max(horizon);
        }
        let end = match task.kind {
            TaskKind::Ts => {
                let w = earliest(&host_free);
                let start = ready.max(host_free[w]);
                let end = start + cost.host_comp_s();
                host_free[w] = end;
                events.push(TimelineEvent { task: id, resource: Resource::HostPool(w as u32), start_s: start, end_s: end });
                end
            }
            TaskKind::Gemm => {
                let h2d_s = if config.resident_l {
                    let (p, q, _) = task.dims();
                    let bytes = task.payload_bytes_h2d.saturating_sub(p as u64 * q as u64 * graph.element_bytes);
                    profile.h2d_seconds(bytes as f64)
                } else {
                    cost.h2d_s()
                };
                let up_start = ready.max(h2d_free);
                let up_end = up_start + h2d_s;
                h2d_free = up_end;
                let q = earliest(&queue_free);
                let run_start = up_end.max(queue_free[q]);
                let run_end = run_start + cost.sync_s() + cost.device_comp_s();
                queue_free[q] = run_end;
                let down_start = run_end.max(d2h_free);
                let down_end = down_start + cost.d2h_s();
                d2h_free = down_end;
                events.push(TimelineEvent { task: id, resource: Resource::LinkH2D, start_s: up_start, end_s: up_end });
                events.push(TimelineEvent { task: id, resource: Resource::DeviceQueue(q as u32), start_s: run_start, end_s: run_end });
                events.push(TimelineEvent { task: id, resource: Resource::LinkD2H, start_s: down_start, end_s: down_end });
                down_end
            }
        };
        finish[id.index()] = end;
        horizon = horizon.max(end);
    }
    Ok(Timeline { events, makespan_s: horizon })
}

#[cfg(test)]
mod tests;
