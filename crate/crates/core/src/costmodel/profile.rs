use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::CostError;

/// Host latency of one diagonal leaf solve, `TS(i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HostTsLatency {
    /// Measured seconds indexed by refinement iteration.
    Table(Vec<f64>),
    /// `leaf² · rhs / (host_cores · core_flop_rate) + leaf_overhead_s`.
    Analytic { core_flop_rate: f64, leaf_overhead_s: f64 },
}

/// Parameters of the host + accelerator machine that every cost term is computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub host_ts_latency: HostTsLatency,
    /// Effective device GEMM throughput, flop/s.
    pub device_gemm_rate: f64,
    /// Host-to-device bandwidth, bytes/s.
    pub h2d_bandwidth: f64,
    /// Device-to-host bandwidth, bytes/s.
    pub d2h_bandwidth: f64,
    /// Fixed cost per transfer, seconds.
    pub link_latency: f64,
    /// Synchronization/invocation overhead per device task, seconds.
    pub sync_overhead: f64,
    pub host_cores: u32,
    pub element_bytes: u64,
}

/// Device-side latency terms of one update task.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GemmTerm {
    pub comp_s: f64,
    pub h2d_s: f64,
    pub d2h_s: f64,
    pub sync_s: f64,
}

impl GemmTerm {
    pub fn comm_s(&self) -> f64 {
        self.h2d_s + self.d2h_s
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), CostError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CostError::InvalidProfile { field, reason: "must be positive and finite" })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), CostError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CostError::InvalidProfile { field, reason: "must be non-negative and finite" })
    }
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<(), CostError> {
        positive("device_gemm_rate", self.device_gemm_rate)?;
        positive("h2d_bandwidth", self.h2d_bandwidth)?;
        positive("d2h_bandwidth", self.d2h_bandwidth)?;
        non_negative("link_latency", self.link_latency)?;
        non_negative("sync_overhead", self.sync_overhead)?;
        if self.host_cores == 0 {
            return Err(CostError::InvalidProfile { field: "host_cores", reason: "must be at least 1" });
        }
        if self.element_bytes == 0 {
            return Err(CostError::InvalidProfile { field: "element_bytes", reason: "must be at least 1" });
        }
        match &self.host_ts_latency {
            HostTsLatency::Table(table) => {
                for &v in table {
                    non_negative("host_ts_latency", v)?;
                }
            }
            HostTsLatency::Analytic { core_flop_rate, leaf_overhead_s } => {
                positive("host_ts_latency.core_flop_rate", *core_flop_rate)?;
                non_negative("host_ts_latency.leaf_overhead_s", *leaf_overhead_s)?;
            }
        }
        Ok(())
    }

    /// `TS(i)` for a leaf of `leaf_rows` rows and `rhs` right-hand sides.
    pub fn ts_latency(&self, iteration: u32, leaf_rows: f64, rhs: f64) -> Result<f64, CostError> {
        match &self.host_ts_latency {
            HostTsLatency::Table(table) => table
                .get(iteration as usize)
                .copied()
                .ok_or(CostError::CalibrationRequired { iteration }),
            HostTsLatency::Analytic { core_flop_rate, leaf_overhead_s } => {
                let rate = self.host_cores as f64 * core_flop_rate;
                Ok(leaf_rows * leaf_rows * rhs / rate + leaf_overhead_s)
            }
        }
    }

    /// Number of iterations a measured table covers; `None` for the analytic form.
    pub fn ts_table_len(&self) -> Option<usize> {
        match &self.host_ts_latency {
            HostTsLatency::Table(t) => Some(t.len()),
            HostTsLatency::Analytic { .. } => None,
        }
    }

    pub fn h2d_seconds(&self, bytes: f64) -> f64 {
        bytes / self.h2d_bandwidth + self.link_latency
    }

    pub fn d2h_seconds(&self, bytes: f64) -> f64 {
        bytes / self.d2h_bandwidth + self.link_latency
    }

    pub fn gemm_seconds(&self, p: f64, q: f64, w: f64) -> f64 {
        2.0 * p * q * w / self.device_gemm_rate
    }

    /// Terms of a `p×q` by `q×w` update: the `L` block and `X` panel go up,
    /// the `p×w` result comes back.
    pub fn gemm_term(&self, p: f64, q: f64, w: f64) -> GemmTerm {
        let eb = self.element_bytes as f64;
        GemmTerm {
            comp_s: self.gemm_seconds(p, q, w),
            h2d_s: self.h2d_seconds((p * q + q * w) * eb),
            d2h_s: self.d2h_seconds(p * w * eb),
            sync_s: self.sync_overhead,
        }
    }
}
