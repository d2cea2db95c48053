//! Post-change drift models shared by all sensors.
//!
//! Each model maps the full current observation vector to the drift that every
//! sensor acquires after its own change point. Evaluation is a pure function
//! of `(t, state)` and never consumes randomness, so the same model instance
//! can drive both the simulator and the detector's likelihood-ratio statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift law applied to a sensor once its change point has passed.
///
/// All sensors share the same law (signal symmetry); coupling enters through
/// the dependence on the whole observation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftModel {
    /// State-independent drift `level` for every sensor.
    Constant { level: f64 },
    /// Mean-reverting coupling: every sensor drifts by `-rate * sum_j z_j`.
    CoupledAutoregressive { rate: f64 },
    /// Two-sensor rotational pair. With `matrix_times_state = false` the
    /// drift is the constant vector `(1, -1)` read off the displayed
    /// constant-matrix form; with `true` it is the skew coupling
    /// `(z_2, -z_1)` suggested by the sinusoidal description.
    RotationalPair {
        #[serde(default)]
        matrix_times_state: bool,
    },
}

impl DriftModel {
    pub fn constant(level: f64) -> Self {
        DriftModel::Constant { level }
    }

    /// Checks model parameters and compatibility with an `n_sensors` system.
    pub fn validate(&self, n_sensors: usize) -> Result<()> {
        match self {
            DriftModel::Constant { level } => {
                if !level.is_finite() {
                    return Err(Error::NonFinite("constant drift level"));
                }
            }
            DriftModel::CoupledAutoregressive { rate } => {
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "autoregressive rate must be finite and > 0, got {rate}"
                    )));
                }
            }
            DriftModel::RotationalPair { .. } => {
                if n_sensors != 2 {
                    return Err(Error::ModelSensorMismatch {
                        expected: 2,
                        actual: n_sensors,
                    });
                }
            }
        }
        Ok(())
    }

    /// Drift of sensor `i` given the current observation vector.
    pub fn drift(&self, sensor: usize, state: &[f64]) -> f64 {
        match self {
            DriftModel::Constant { level } => *level,
            DriftModel::CoupledAutoregressive { rate } => {
                -rate * state.iter().sum::<f64>()
            }
            DriftModel::RotationalPair { matrix_times_state } => {
                if *matrix_times_state {
                    // (0 1; -1 0) * z
                    match sensor {
                        0 => state[1],
                        _ => -state[0],
                    }
                } else {
                    match sensor {
                        0 => 1.0,
                        _ => -1.0,
                    }
                }
            }
        }
    }

    /// Drift vector for all sensors at once.
    pub fn drift_vec(&self, state: &[f64], out: &mut [f64]) {
        debug_assert_eq!(state.len(), out.len());
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.drift(i, state);
        }
    }
}
