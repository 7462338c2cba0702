//! File formats, calibration, the threaded hybrid executor, sweeps and the
//! command-line front end for [`redsea_core`].

pub mod calibrate;
pub mod cli;
pub mod figures;
pub mod format;
pub mod hybrid;
pub mod io;
pub mod sweep;
pub mod trace;

pub use hybrid::{execute_hybrid, execute_hybrid_with, CpuBackend, DeviceBackend, HybridError, HybridOutput};
