//! Triangular solves with many right-hand sides, decomposed for host plus
//! accelerator execution.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the numerical
//! kernels ([`linalg`]), the recursive, iterative and blocked task graphs
//! ([`decomposition`]), the analytical latency model ([`costmodel`]), the
//! refinement and offload search ([`dse`]) and a deterministic discrete-event
//! simulator ([`sim`]). File formats, calibration, threaded execution and the
//! command-line tool live in the `redsea` crate.
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod costmodel;
pub mod decomposition;
pub mod dse;
pub mod linalg;
pub mod sim;
