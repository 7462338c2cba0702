use serde::{Deserialize, Serialize};

use crate::decomposition::Model;

/// Component-wise latency of one schedule, in seconds.
///
/// `total_s` is always the plain sum of the five components; it is recomputed
/// on construction and on deserialization, never stored independently.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawEstimate")]
pub struct CostEstimate {
    model: Model,
    iteration: u32,
    host_comp_s: f64,
    device_comp_s: f64,
    h2d_s: f64,
    d2h_s: f64,
    sync_s: f64,
    total_s: f64,
}

#[derive(Deserialize)]
struct RawEstimate {
    model: Model,
    iteration: u32,
    host_comp_s: f64,
    device_comp_s: f64,
    h2d_s: f64,
    d2h_s: f64,
    sync_s: f64,
}

impl From<RawEstimate> for CostEstimate {
    fn from(r: RawEstimate) -> Self {
        Self::new(r.model, r.iteration, r.host_comp_s, r.device_comp_s, r.h2d_s, r.d2h_s, r.sync_s)
    }
}

impl CostEstimate {
    pub fn new(model: Model, iteration: u32, host_comp_s: f64, device_comp_s: f64, h2d_s: f64, d2h_s: f64, sync_s: f64) -> Self {
        Self {
            model,
            iteration,
            host_comp_s,
            device_comp_s,
            h2d_s,
            d2h_s,
            sync_s,
            total_s: host_comp_s + device_comp_s + h2d_s + d2h_s + sync_s,
        }
    }

    pub fn zero(model: Model, iteration: u32) -> Self {
        Self::new(model, iteration, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    pub fn host_comp_s(&self) -> f64 {
        self.host_comp_s
    }

    pub fn device_comp_s(&self) -> f64 {
        self.device_comp_s
    }

    pub fn h2d_s(&self) -> f64 {
        self.h2d_s
    }

    pub fn d2h_s(&self) -> f64 {
        self.d2h_s
    }

    pub fn sync_s(&self) -> f64 {
        self.sync_s
    }

    pub fn total_s(&self) -> f64 {
        self.total_s
    }

    /// Transfer latency, both directions.
    pub fn comm_s(&self) -> f64 {
        self.h2d_s + self.d2h_s
    }

    /// Host plus device computation.
    pub fn comp_s(&self) -> f64 {
        self.host_comp_s + self.device_comp_s
    }

    /// Component-wise sum, keeping this estimate's model and iteration.
    pub fn combine(&self, other: &CostEstimate) -> CostEstimate {
        CostEstimate::new(
            self.model,
            self.iteration,
            self.host_comp_s + other.host_comp_s,
            self.device_comp_s + other.device_comp_s,
            self.h2d_s + other.h2d_s,
            self.d2h_s + other.d2h_s,
            self.sync_s + other.sync_s,
        )
    }

    pub fn is_non_negative(&self) -> bool {
        [self.host_comp_s, self.device_comp_s, self.h2d_s, self.d2h_s, self.sync_s]
            .iter()
            .all(|v| *v >= 0.0)
    }
}

/// `baseline_s / estimate.total_s`.
pub fn speedup(estimate: &CostEstimate, baseline_s: f64) -> f64 {
    baseline_s / estimate.total_s
}
