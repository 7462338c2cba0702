//! Refinement sweeps: predicted latency and speedup for every model and
//! every iteration up to the stall.

use redsea_core::costmodel::{speedup, CostEstimate, DeviceProfile, Problem};
use redsea_core::decomposition::{build_with, GraphOptions, Model};
use redsea_core::dse::{refine_until_stall, DseError};
use redsea_core::sim::{simulate, ExecutionConfig, SimError};
use serde::Serialize;

use crate::format::fmt_g;

pub const CSV_COLUMNS: [&str; 10] = [
    "model",
    "iteration",
    "refinement",
    "host_comp_s",
    "device_comp_s",
    "h2d_s",
    "d2h_s",
    "sync_s",
    "total_s",
    "speedup",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub model: Model,
    pub iteration: u32,
    pub refinement: u64,
    pub estimate: CostEstimate,
    /// Against the `i = 0` host-only latency of the same model.
    pub speedup: f64,
    /// Whether the stopping condition accepted this iteration.
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated_s: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Dse(#[from] DseError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Graph(#[from] redsea_core::decomposition::DecompositionError),
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Deepest iteration to report; the sweep also stops at the stall.
    pub max_iteration: Option<u32>,
    /// Also simulate every row's task graph with this configuration.
    pub simulate: Option<ExecutionConfig>,
}

/// Rows are ordered by model (as given), then iteration. The stall
/// iteration, whose latency is worse than its predecessor, is included.
pub fn sweep(problem: Problem, profile: &DeviceProfile, models: &[Model], options: &SweepOptions) -> Result<Vec<SweepRow>, SweepError> {
    let mut rows = Vec::new();
    for &model in models {
        let trace = refine_until_stall(problem, profile, model)?;
        let baseline = trace.steps[0].estimate.total_s();
        for step in &trace.steps {
            if options.max_iteration.is_some_and(|m| step.iteration > m) {
                break;
            }
            let simulated_s = match &options.simulate {
                Some(cfg) => {
                    let opts = GraphOptions {
                        rhs: problem.rhs,
                        element_bytes: profile.element_bytes,
                    };
                    let graph = build_with(model, problem.n, step.iteration, opts)?;
                    Some(simulate(&graph, cfg)?.makespan_s)
                }
                None => None,
            };
            rows.push(SweepRow {
                model,
                iteration: step.iteration,
                refinement: 1u64 << step.iteration,
                estimate: step.estimate,
                speedup: speedup(&step.estimate, baseline),
                accepted: step.accepted,
                simulated_s,
            });
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.model.name().to_string(),
            r.iteration.to_string(),
            r.refinement.to_string(),
            fmt_g(e.host_comp_s()),
            fmt_g(e.device_comp_s()),
            fmt_g(e.h2d_s()),
            fmt_g(e.d2h_s()),
            fmt_g(e.sync_s()),
            fmt_g(e.total_s()),
            fmt_g(r.speedup),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn to_json(rows: &[SweepRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}
