//! Euler-Maruyama simulation of the coupled N-sensor observation processes.
//!
//! Each sensor observes pure Brownian noise before its change point and
//! noise plus the shared model drift afterwards. Drift is evaluated at the
//! left endpoint of every step on the full observation vector, so coupled
//! models see the state of all sensors. Paths are reproducible bit-for-bit
//! from `(SimConfig, DriftModel)`: normals come from a ChaCha stream keyed
//! by `(seed, stream)`, which also makes replication-parallel runs safe.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::drift::DriftModel;
use crate::error::{Error, Result};

/// Simulation parameters for one bundle of sensor paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_sensors: usize,
    /// Time step of the Euler-Maruyama grid.
    pub dt: f64,
    /// Simulated horizon; snapped to a whole number of steps.
    pub horizon: f64,
    /// Per-sensor change points; `f64::INFINITY` means the sensor never changes.
    pub change_points: Vec<f64>,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 {
            return Err(Error::InvalidConfig("n_sensors must be >= 1".into()));
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !self.horizon.is_finite() || self.horizon <= self.dt {
            return Err(Error::InvalidConfig(format!(
                "horizon ({}) must exceed dt ({})",
                self.horizon, self.dt
            )));
        }
        if self.change_points.len() != self.n_sensors {
            return Err(Error::InvalidConfig(format!(
                "expected {} change points, got {}",
                self.n_sensors,
                self.change_points.len()
            )));
        }
        for (i, tau) in self.change_points.iter().enumerate() {
            if tau.is_nan() || *tau < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "change point {i} must lie in [0, inf], got {tau}"
                )));
            }
        }
        Ok(())
    }

    /// Number of steps covering the horizon (horizon snapped to the grid).
    pub fn n_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    /// Change points snapped to the nearest grid step, round half up.
    /// Infinite change points become `None`.
    pub fn change_steps(&self) -> Vec<Option<usize>> {
        self.change_points
            .iter()
            .map(|&tau| {
                if tau.is_infinite() {
                    None
                } else {
                    Some((tau / self.dt + 0.5).floor() as usize)
                }
            })
            .collect()
    }
}

/// Discretized sensor paths together with the increments and the drift
/// actually applied at each step (zero before the sensor's change point).
///
/// Layout is step-major: entry `(k, i)` lives at `k * n_sensors + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub n_sensors: usize,
    pub dt: f64,
    /// Grid times `t_k = k * dt`, length `n_steps + 1`.
    pub times: Vec<f64>,
    /// Observation values, `(n_steps + 1) * n_sensors`.
    pub z: Vec<f64>,
    /// Increments, `n_steps * n_sensors`; `z[k+1] - z[k] == dz[k]` exactly.
    pub dz: Vec<f64>,
    /// Applied drift at the left endpoint of each step, `n_steps * n_sensors`.
    pub alpha: Vec<f64>,
}

impl PathBundle {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    #[inline]
    pub fn z_at(&self, step: usize, sensor: usize) -> f64 {
        self.z[step * self.n_sensors + sensor]
    }

    #[inline]
    pub fn dz_at(&self, step: usize, sensor: usize) -> f64 {
        self.dz[step * self.n_sensors + sensor]
    }

    #[inline]
    pub fn alpha_at(&self, step: usize, sensor: usize) -> f64 {
        self.alpha[step * self.n_sensors + sensor]
    }

    /// State vector at a grid index.
    pub fn state_at(&self, step: usize) -> &[f64] {
        &self.z[step * self.n_sensors..(step + 1) * self.n_sensors]
    }

    /// Dumps `t,z1..zN,a1..aN` rows, one per grid point, with
    /// 17-significant-digit floats. The drift columns repeat the last
    /// step's applied drift on the final row to keep rows rectangular.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for i in 0..self.n_sensors {
            write!(out, ",z{}", i + 1)?;
        }
        for i in 0..self.n_sensors {
            write!(out, ",a{}", i + 1)?;
        }
        writeln!(out)?;
        let n_steps = self.n_steps();
        for k in 0..=n_steps {
            write!(out, "{:.16e}", self.times[k])?;
            for i in 0..self.n_sensors {
                write!(out, ",{:.16e}", self.z_at(k, i))?;
            }
            let ak = k.min(n_steps - 1);
            for i in 0..self.n_sensors {
                write!(out, ",{:.16e}", self.alpha_at(ak, i))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Incremental path generator: one Euler-Maruyama step at a time.
///
/// This is the single stepping kernel shared by [`simulate_paths`] and the
/// streaming Monte Carlo runners, which cannot afford to materialize paths
/// whose length is an exponentially distributed stopping time.
pub struct PathStepper {
    model: DriftModel,
    change_steps: Vec<Option<usize>>,
    dt: f64,
    sqrt_dt: f64,
    rng: ChaCha8Rng,
    step: usize,
    state: Vec<f64>,
}

/// Output of one stepper advance, borrowed from internal scratch space.
pub struct StepOutput<'a> {
    /// Drift the model implies on the pre-step state (what a detector sees).
    pub alpha_model: &'a [f64],
    /// Drift actually applied (zero for sensors before their change point).
    pub alpha_applied: &'a [f64],
    /// Observation increments over the step.
    pub dz: &'a [f64],
}

/// Scratch buffers for [`PathStepper::advance`], reused across steps.
pub struct StepScratch {
    alpha_model: Vec<f64>,
    alpha_applied: Vec<f64>,
    dz: Vec<f64>,
}

impl StepScratch {
    pub fn new(n_sensors: usize) -> Self {
        StepScratch {
            alpha_model: vec![0.0; n_sensors],
            alpha_applied: vec![0.0; n_sensors],
            dz: vec![0.0; n_sensors],
        }
    }
}

impl PathStepper {
    /// Stepper for `config` using the ChaCha stream `(config.seed, stream)`.
    /// Distinct streams give independent replications of the same config.
    pub fn new(config: &SimConfig, model: &DriftModel, stream: u64) -> Result<Self> {
        config.validate()?;
        model.validate(config.n_sensors)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        Ok(PathStepper {
            model: model.clone(),
            change_steps: config.change_steps(),
            dt: config.dt,
            sqrt_dt: config.dt.sqrt(),
            rng,
            step: 0,
            state: vec![0.0; config.n_sensors],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Advances the system by one step and exposes the step's drift and
    /// increments. Drift is evaluated on the left-endpoint state.
    #[inline]
    pub fn advance<'a>(&mut self, scratch: &'a mut StepScratch) -> StepOutput<'a> {
        let n = self.state.len();
        self.model.drift_vec(&self.state, &mut scratch.alpha_model);
        for i in 0..n {
            let applied = match self.change_steps[i] {
                Some(tau_step) if self.step >= tau_step => scratch.alpha_model[i],
                _ => 0.0,
            };
            scratch.alpha_applied[i] = applied;
            let noise: f64 = StandardNormal.sample(&mut self.rng);
            let dz = applied * self.dt + self.sqrt_dt * noise;
            scratch.dz[i] = dz;
            self.state[i] += dz;
        }
        self.step += 1;
        StepOutput {
            alpha_model: &scratch.alpha_model,
            alpha_applied: &scratch.alpha_applied,
            dz: &scratch.dz,
        }
    }
}

/// Simulates the full path bundle on the configured grid (stream 0).
pub fn simulate_paths(config: &SimConfig, model: &DriftModel) -> Result<PathBundle> {
    simulate_paths_stream(config, model, 0)
}

/// As [`simulate_paths`] but on an explicit ChaCha stream, for replications.
pub fn simulate_paths_stream(
    config: &SimConfig,
    model: &DriftModel,
    stream: u64,
) -> Result<PathBundle> {
    let mut stepper = PathStepper::new(config, model, stream)?;
    let mut scratch = StepScratch::new(config.n_sensors);
    let n = config.n_sensors;
    let n_steps = config.n_steps();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut z = Vec::with_capacity((n_steps + 1) * n);
    let mut dz = Vec::with_capacity(n_steps * n);
    let mut alpha = Vec::with_capacity(n_steps * n);

    times.push(0.0);
    z.extend_from_slice(stepper.state());
    for k in 0..n_steps {
        let out = stepper.advance(&mut scratch);
        alpha.extend_from_slice(out.alpha_applied);
        dz.extend_from_slice(out.dz);
        times.push((k + 1) as f64 * config.dt);
        z.extend_from_slice(stepper.state());
    }

    Ok(PathBundle {
        n_sensors: n,
        dt: config.dt,
        times,
        z,
        dz,
        alpha,
    })
}

/// Which sensors an energy integral averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorSet {
    All,
    Single(usize),
}

fn integral_step_range(path: &PathBundle, from: f64, to: f64) -> Result<(usize, usize)> {
    if !(from.is_finite() && to.is_finite()) || from < 0.0 || to < from {
        return Err(Error::BadInterval { from, to });
    }
    let horizon = path.times[path.n_steps()];
    if to > horizon + 1e-9 * horizon.max(1.0) {
        return Err(Error::BadInterval { from, to });
    }
    // Left-endpoint sum over steps whose start time lies in [from, to).
    let k_start = ((from / path.dt) - 1e-9).ceil().max(0.0) as usize;
    let k_end = (((to / path.dt) - 1e-9).ceil().max(0.0) as usize).min(path.n_steps());
    Ok((k_start, k_end.max(k_start)))
}

/// Criterion energy `0.5 * (1/|set|) * sum_i integral alpha_applied^2 dt`
/// over `[from, to)`, left-endpoint rule on the grid. Pre-change steps
/// contribute zero because the applied drift is zero there.
pub fn energy_integral(
    path: &PathBundle,
    from: f64,
    to: f64,
    sensors: SensorSet,
) -> Result<f64> {
    let (k_start, k_end) = integral_step_range(path, from, to)?;
    let mut sum = 0.0;
    match sensors {
        SensorSet::Single(i) => {
            for k in k_start..k_end {
                let a = path.alpha_at(k, i);
                sum += a * a;
            }
        }
        SensorSet::All => {
            let n = path.n_sensors as f64;
            for k in k_start..k_end {
                let mut row = 0.0;
                for i in 0..path.n_sensors {
                    let a = path.alpha_at(k, i);
                    row += a * a;
                }
                sum += row / n;
            }
        }
    }
    Ok(0.5 * sum * path.dt)
}

/// As [`energy_integral`] but with the model drift recomputed on the observed
/// state, independent of regime. This is the detector-side energy under the
/// no-change measure, where no drift was ever applied.
pub fn model_energy_integral(
    path: &PathBundle,
    model: &DriftModel,
    from: f64,
    to: f64,
    sensors: SensorSet,
) -> Result<f64> {
    model.validate(path.n_sensors)?;
    let (k_start, k_end) = integral_step_range(path, from, to)?;
    let mut sum = 0.0;
    for k in k_start..k_end {
        let state = path.state_at(k);
        match sensors {
            SensorSet::Single(i) => {
                let a = model.drift(i, state);
                sum += a * a;
            }
            SensorSet::All => {
                let n = path.n_sensors as f64;
                let mut row = 0.0;
                for i in 0..path.n_sensors {
                    let a = model.drift(i, state);
                    row += a * a;
                }
                sum += row / n;
            }
        }
    }
    Ok(0.5 * sum * path.dt)
}
