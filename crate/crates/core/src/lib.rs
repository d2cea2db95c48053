//! Simulation and numerical verification toolkit for quickest detection of
//! the first change point in a coupled N-sensor system.
//!
//! The toolkit simulates the coupled observation processes, runs per-sensor
//! CUSUM charts and the multi-chart stopping rule, calibrates thresholds
//! against false-alarm energy targets, estimates detection-delay and
//! false-alarm functionals by Monte Carlo, and independently cross-checks
//! the same quantities by solving the associated mean-exit-energy boundary
//! value problems with finite differences.

pub mod calibration;
pub mod detector;
pub mod drift;
pub mod error;
pub mod montecarlo;
pub mod pde;
pub mod sim;
pub mod stats;

pub use calibration::{
    asymptotic_h, calibrate_h_mc, f_cusum, solve_nu, CalibrationMethod, CalibrationResult,
    McCalibParams,
};
pub use detector::{
    cusum_step, run_multichart, run_single_cusum, CrossingRule, CusumState, StoppingOutcome,
};
pub use drift::DriftModel;
pub use error::{Error, Result};
pub use sim::{energy_integral, simulate_paths, PathBundle, SensorSet, SimConfig};
