//! Resource allocation for wireless-powered mobile edge computing assisted by
//! self-sustainable reflecting surfaces with a practical phase-shift model.
//!
//! A block of length `T` is split into IRS charging (`tau1`), WD charging
//! (`tau2`) and offloading (`t1`). [`pipeline::solve_p0`] chooses all of it:
//! the IRS charging covariance by bisection, the WD charging beam and
//! reflection by a penalty BCD, and detectors, uplink reflection, powers and
//! CPU frequencies by a second penalty BCD, for every `tau2` on a grid.

pub mod allocation;
pub mod channel;
pub mod cli;
pub mod config;
pub mod convex;
pub mod error;
pub mod io;
pub mod linalg;
pub mod offload;
pub mod phase;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod wet;

pub use allocation::{audit, objective_bits, Allocation};
pub use config::{AlgorithmConfig, PhaseModel, SystemConfig};
pub use error::{Error, Result};
pub use pipeline::{run_baseline, run_scheme, run_sweep, solve_p0, Scheme, SweepParam, SweepSpec};
