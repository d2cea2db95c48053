//! Monte Carlo estimation of the detection-delay and false-alarm
//! functionals, the equalizer check, and the optimality-gap experiment.
//!
//! Replications are independent ChaCha streams; results are collected in
//! replication order and reduced serially, so a given scenario (seed
//! included) reproduces its estimate bit-for-bit regardless of thread count.
//! Replications that reach the horizon without stopping are extended by
//! doubling until they stop or the doubling budget runs out; estimates use
//! uncensored outcomes only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_h_mc, f_cusum, solve_nu, McCalibParams};
use crate::detector::{CrossingRule, StreamingRun};
use crate::drift::DriftModel;
use crate::error::{Error, Result};
use crate::sim::SimConfig;
use crate::stats::{mean_se, welch_test, WelchResult};

/// Horizon handling for stopped simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonPolicy {
    /// Initial simulated horizon (time units).
    pub initial: f64,
    /// Times a censored replication's horizon is doubled before giving up.
    pub max_doublings: u32,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        HorizonPolicy {
            initial: 64.0,
            max_doublings: 24,
        }
    }
}

/// A Monte Carlo experiment on the multi-chart rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_sensors: usize,
    /// Per-sensor change points; `f64::INFINITY` for never.
    pub change_points: Vec<f64>,
    pub model: DriftModel,
    /// Common threshold; see [`Scenario::thresholds`] for the diagnostic
    /// per-sensor override.
    pub threshold: f64,
    /// Per-sensor thresholds (diagnostic mode); empty means common.
    #[serde(default)]
    pub threshold_overrides: Vec<f64>,
    pub dt: f64,
    pub horizon: HorizonPolicy,
    pub replications: usize,
    pub seed: u64,
    pub rule: CrossingRule,
    /// Offset multiplying 2^40 in the ChaCha stream id, isolating scenario
    /// arms that share a seed.
    #[serde(default)]
    pub stream_arm: u64,
    /// Early stop once the standard error falls below this fraction of the
    /// mean (checked between fixed-size chunks, so results stay
    /// deterministic). `None` runs all replications.
    #[serde(default)]
    pub se_target_rel: Option<f64>,
}

impl Scenario {
    pub fn thresholds(&self) -> Vec<f64> {
        if self.threshold_overrides.is_empty() {
            vec![self.threshold; self.n_sensors]
        } else {
            self.threshold_overrides.clone()
        }
    }

    fn sim_config(&self) -> SimConfig {
        SimConfig {
            n_sensors: self.n_sensors,
            dt: self.dt,
            horizon: self.horizon.initial,
            change_points: self.change_points.clone(),
            seed: self.seed,
        }
    }

    fn stream(&self, replication: u64) -> u64 {
        (self.stream_arm << 40) | replication
    }

    pub fn validate(&self) -> Result<()> {
        self.sim_config().validate()?;
        self.model.validate(self.n_sensors)?;
        let th = self.thresholds();
        if th.len() != self.n_sensors {
            return Err(Error::InvalidConfig(
                "threshold overrides must match sensor count".into(),
            ));
        }
        if th.iter().any(|&h| !h.is_finite() || h <= 0.0) {
            return Err(Error::NonPositiveThreshold(
                th.iter().cloned().fold(f64::INFINITY, f64::min),
            ));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        Ok(())
    }
}

/// Monte Carlo estimate with its uncertainty and censoring accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications_used: usize,
    /// Replications still unstopped after all horizon doublings.
    pub censored_count: usize,
}

/// What one replication contributes to an estimate.
#[derive(Debug, Clone, Copy)]
enum Functional {
    /// `0.5 (1/N) sum_i integral alpha_model_i^2 dt` to the stop: the
    /// false-alarm energy, where the model drift is what the detector sees
    /// and no drift is ever applied.
    FalseAlarm,
    /// `0.5 integral alpha_model_changed^2 dt` to the stop, change at t = 0
    /// on `sensor` (worst-case delay energy).
    DelayOnSensor { sensor: usize },
    /// Multi-change criterion: applied drift, 1/N average.
    AppliedAverage,
}

fn run_one(
    scenario: &Scenario,
    replication: u64,
    functional: Functional,
) -> Result<Option<f64>> {
    let config = scenario.sim_config();
    let mut run = StreamingRun::new(
        &config,
        &scenario.model,
        scenario.stream(replication),
        scenario.thresholds(),
        scenario.rule,
    )?;
    let mut horizon_steps = config.n_steps();
    let mut stopped = run.run_until(horizon_steps).is_some();
    let mut doublings = 0;
    while !stopped && doublings < scenario.horizon.max_doublings {
        horizon_steps *= 2;
        doublings += 1;
        stopped = run.run_until(horizon_steps).is_some();
    }
    if !stopped {
        return Ok(None);
    }
    let value = match functional {
        Functional::FalseAlarm => run.model_energy_avg,
        Functional::DelayOnSensor { sensor } => run.model_energy[sensor],
        Functional::AppliedAverage => run.applied_energy_avg,
    };
    Ok(Some(value))
}

const SE_CHECK_CHUNK: usize = 4096;

fn estimate_functional(scenario: &Scenario, functional: Functional) -> Result<Estimate> {
    scenario.validate()?;
    let mut outcomes: Vec<Option<f64>> = Vec::with_capacity(scenario.replications);
    let mut next = 0u64;
    while (next as usize) < scenario.replications {
        let end = (next as usize + SE_CHECK_CHUNK).min(scenario.replications) as u64;
        let chunk: Vec<Option<f64>> = (next..end)
            .into_par_iter()
            .map(|r| run_one(scenario, r, functional))
            .collect::<Result<_>>()?;
        outcomes.extend(chunk);
        next = end;
        if let Some(target) = scenario.se_target_rel {
            let values: Vec<f64> = outcomes.iter().flatten().cloned().collect();
            let (mean, se) = mean_se(&values);
            if values.len() >= 100 && se <= target * mean.abs() {
                break;
            }
        }
    }
    let attempted = outcomes.len();
    let censored = outcomes.iter().filter(|o| o.is_none()).count();
    if censored as f64 >= 1e-3 * attempted as f64 {
        return Err(Error::BudgetExceeded {
            context: format!(
                "{censored}/{attempted} replications still censored after horizon doubling"
            ),
            partial: f64::NAN,
            replications: attempted - censored,
        });
    }
    let values: Vec<f64> = outcomes.into_iter().flatten().collect();
    let (mean, se) = mean_se(&values);
    Ok(Estimate {
        mean,
        std_error: se,
        replications_used: values.len(),
        censored_count: censored,
    })
}

/// Worst-case detection-delay energy: requires exactly one finite change
/// point (at time 0 by the worst-case convention); charts start at zero.
/// Scenarios with several finite change points fall back to the averaged
/// applied-drift criterion.
pub fn estimate_delay(scenario: &Scenario) -> Result<Estimate> {
    let finite: Vec<usize> = scenario
        .change_points
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_finite())
        .map(|(i, _)| i)
        .collect();
    if finite.is_empty() {
        return Err(Error::InvalidConfig(
            "delay scenario needs at least one finite change point".into(),
        ));
    }
    if finite.len() == 1 {
        let sensor = finite[0];
        if scenario.change_points[sensor] != 0.0 {
            return Err(Error::InvalidConfig(
                "worst-case delay convention places the single change at t = 0".into(),
            ));
        }
        estimate_functional(scenario, Functional::DelayOnSensor { sensor })
    } else {
        estimate_functional(scenario, Functional::AppliedAverage)
    }
}

/// Mean false-alarm energy under the all-no-change measure.
pub fn estimate_false_alarm(scenario: &Scenario) -> Result<Estimate> {
    if scenario.change_points.iter().any(|t| t.is_finite()) {
        return Err(Error::InvalidConfig(
            "false-alarm scenario requires all change points infinite".into(),
        ));
    }
    estimate_functional(scenario, Functional::FalseAlarm)
}

/// Paired comparison of delays by triggering-sensor identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EqualizerPair {
    pub sensor_a: usize,
    pub sensor_b: usize,
    pub diff: f64,
    pub pooled_se: f64,
    pub p_value: f64,
}

/// Output of [`equalizer_test`]: per-sensor delay estimates and all pairwise
/// Welch comparisons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EqualizerReport {
    pub per_sensor: Vec<Estimate>,
    pub pairs: Vec<EqualizerPair>,
    pub max_abs_diff: f64,
}

/// Places the change in each sensor in turn and compares the resulting
/// delay means. Arms use disjoint replication streams so the Welch tests
/// see independent samples.
pub fn equalizer_test(base: &Scenario) -> Result<EqualizerReport> {
    let n = base.n_sensors;
    let mut per_sensor = Vec::with_capacity(n);
    for sensor in 0..n {
        let mut arm = base.clone();
        arm.change_points = vec![f64::INFINITY; n];
        arm.change_points[sensor] = 0.0;
        arm.stream_arm = base.stream_arm + sensor as u64 + 1;
        per_sensor.push(estimate_delay(&arm)?);
    }
    let mut pairs = Vec::new();
    let mut max_abs_diff: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let w: WelchResult = welch_test(
                per_sensor[a].mean,
                per_sensor[a].std_error,
                per_sensor[b].mean,
                per_sensor[b].std_error,
            );
            max_abs_diff = max_abs_diff.max(w.diff.abs());
            pairs.push(EqualizerPair {
                sensor_a: a,
                sensor_b: b,
                diff: w.diff,
                pooled_se: w.pooled_se,
                p_value: w.p_value,
            });
        }
    }
    Ok(EqualizerReport {
        per_sensor,
        pairs,
        max_abs_diff,
    })
}

/// One row of the optimality-gap table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapRow {
    pub gamma: f64,
    pub n_sensors: usize,
    /// Exact one-sensor threshold at this gamma.
    pub nu: f64,
    /// MC-calibrated multi-chart threshold.
    pub h: f64,
    pub h_gamma_se: f64,
    /// Lower bound f(-nu): exact one-sensor delay.
    pub lower_bound: f64,
    pub delay: Estimate,
    /// delay - f(-nu); approaches log N from within MC error.
    pub gap: f64,
    pub gap_se: f64,
}

/// Parameters for the delay leg of the gap experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapParams {
    pub delay_replications: usize,
    pub delay_dt: f64,
    pub horizon: HorizonPolicy,
    pub seed: u64,
    pub rule: CrossingRule,
    pub calib: McCalibParams,
    /// Optional early-stop target for the delay legs.
    #[serde(default)]
    pub se_target_rel: Option<f64>,
}

/// For each gamma: calibrate nu exactly and h by MC, estimate the worst-case
/// delay of the multi-chart rule, and report the gap over the one-sensor
/// lower bound.
pub fn optimality_gap(
    gammas: &[f64],
    n_sensors: usize,
    model: &DriftModel,
    params: &GapParams,
) -> Result<Vec<GapRow>> {
    let mut rows = Vec::with_capacity(gammas.len());
    for (idx, &gamma) in gammas.iter().enumerate() {
        let nu = solve_nu(gamma)?.threshold;
        let calib = calibrate_h_mc(gamma, n_sensors, model, &params.calib)?;
        let mut change_points = vec![f64::INFINITY; n_sensors];
        change_points[0] = 0.0;
        let scenario = Scenario {
            n_sensors,
            change_points,
            model: model.clone(),
            threshold: calib.threshold,
            threshold_overrides: vec![],
            dt: params.delay_dt,
            horizon: params.horizon,
            replications: params.delay_replications,
            seed: params.seed,
            rule: params.rule,
            stream_arm: 100 + idx as u64,
            se_target_rel: params.se_target_rel,
        };
        let delay = estimate_delay(&scenario)?;
        let lower = f_cusum(-nu);
        rows.push(GapRow {
            gamma,
            n_sensors,
            nu,
            h: calib.threshold,
            h_gamma_se: calib.gamma_se,
            lower_bound: lower,
            gap: delay.mean - lower,
            gap_se: delay.std_error,
            delay,
        });
    }
    Ok(rows)
}

/// Grid-refinement sensitivity of an estimate, with the coarse run built
/// from the same Brownian increments as the fine run (pairwise-summed), so
/// the difference isolates the discretization effect instead of being
/// swamped by independent Monte Carlo noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtSensitivity {
    pub coarse: Estimate,
    pub fine: Estimate,
    /// Mean of per-replication (fine - coarse) differences.
    pub coupled_diff: f64,
    pub coupled_diff_se: f64,
}

/// Runs the scenario at `dt` and `dt/2` on coupled noise and reports how far
/// the estimate moves.
pub fn dt_sensitivity(scenario: &Scenario, functional_sensor: usize) -> Result<DtSensitivity> {
    scenario.validate()?;
    use crate::detector::{cusum_step, CusumState, OVERSHOOT_BETA};
    use rand::SeedableRng;
    use rand_distr::Distribution;

    let n = scenario.n_sensors;
    let fine_dt = scenario.dt / 2.0;
    let change_steps_fine: Vec<Option<usize>> = SimConfig {
        dt: fine_dt,
        ..scenario.sim_config()
    }
    .change_steps();

    let pairs: Vec<Option<(f64, f64)>> = (0..scenario.replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scenario.seed);
            rng.set_stream(scenario.stream(r));
            let normal = rand_distr::StandardNormal;

            // One coupled pass: fine path drives both resolutions.
            let mut z_fine = vec![0.0; n];
            let mut z_coarse = vec![0.0; n];
            let mut fine_states = vec![CusumState::zero(); n];
            let mut coarse_states = vec![CusumState::zero(); n];
            let mut pending = vec![0.0; n]; // accumulated fine dz within a coarse step
            let mut fine_energy = 0.0;
            let mut coarse_energy = 0.0;
            let mut fine_result = None;
            let mut coarse_result = None;
            let thresholds = scenario.thresholds();
            let sqrt_fine = fine_dt.sqrt();
            let sqrt_coarse = scenario.dt.sqrt();

            let max_fine_steps = (scenario.horizon.initial / fine_dt).round() as usize
                * (1usize << scenario.horizon.max_doublings.min(20));
            let mut alpha_fine = vec![0.0; n];
            let mut alpha_coarse = vec![0.0; n];
            for k_fine in 0..max_fine_steps {
                if fine_result.is_some() && coarse_result.is_some() {
                    break;
                }
                scenario.model.drift_vec(&z_fine, &mut alpha_fine);
                for i in 0..n {
                    let applied = match change_steps_fine[i] {
                        Some(tau) if k_fine >= tau => alpha_fine[i],
                        _ => 0.0,
                    };
                    let noise: f64 = normal.sample(&mut rng);
                    let dz = applied * fine_dt + sqrt_fine * noise;
                    if fine_result.is_none() {
                        fine_states[i] =
                            cusum_step(fine_states[i], dz, alpha_fine[i], fine_dt);
                    }
                    z_fine[i] += dz;
                    pending[i] += dz;
                }
                if fine_result.is_none() {
                    fine_energy += 0.5
                        * alpha_fine[functional_sensor]
                        * alpha_fine[functional_sensor]
                        * fine_dt;
                    let crossed = (0..n).any(|i| {
                        let shift = match scenario.rule {
                            CrossingRule::Grid => 0.0,
                            CrossingRule::ContinuityCorrected => {
                                2.0 * OVERSHOOT_BETA * alpha_fine[i].abs() * sqrt_fine
                            }
                        };
                        fine_states[i].y >= thresholds[i] - shift
                    });
                    if crossed {
                        fine_result = Some(fine_energy);
                    }
                }
                // Every second fine step closes one coarse step.
                if k_fine % 2 == 1 && coarse_result.is_none() {
                    scenario.model.drift_vec(&z_coarse, &mut alpha_coarse);
                    coarse_energy += 0.5
                        * alpha_coarse[functional_sensor]
                        * alpha_coarse[functional_sensor]
                        * scenario.dt;
                    let mut crossed = false;
                    for i in 0..n {
                        coarse_states[i] = cusum_step(
                            coarse_states[i],
                            pending[i],
                            alpha_coarse[i],
                            scenario.dt,
                        );
                        let shift = match scenario.rule {
                            CrossingRule::Grid => 0.0,
                            CrossingRule::ContinuityCorrected => {
                                2.0 * OVERSHOOT_BETA * alpha_coarse[i].abs() * sqrt_coarse
                            }
                        };
                        if coarse_states[i].y >= thresholds[i] - shift {
                            crossed = true;
                        }
                        z_coarse[i] += pending[i];
                        pending[i] = 0.0;
                    }
                    if crossed {
                        coarse_result = Some(coarse_energy);
                    }
                }
            }
            match (fine_result, coarse_result) {
                (Some(f), Some(c)) => Some((f, c)),
                _ => None,
            }
        })
        .collect();

    let censored = pairs.iter().filter(|p| p.is_none()).count();
    if censored as f64 >= 1e-3 * scenario.replications as f64 {
        return Err(Error::BudgetExceeded {
            context: format!("{censored} coupled replications censored"),
            partial: f64::NAN,
            replications: scenario.replications - censored,
        });
    }
    let fine_vals: Vec<f64> = pairs.iter().flatten().map(|p| p.0).collect();
    let coarse_vals: Vec<f64> = pairs.iter().flatten().map(|p| p.1).collect();
    let diffs: Vec<f64> = fine_vals
        .iter()
        .zip(&coarse_vals)
        .map(|(f, c)| f - c)
        .collect();
    let (fine_mean, fine_se) = mean_se(&fine_vals);
    let (coarse_mean, coarse_se) = mean_se(&coarse_vals);
    let (dmean, dse) = mean_se(&diffs);
    Ok(DtSensitivity {
        coarse: Estimate {
            mean: coarse_mean,
            std_error: coarse_se,
            replications_used: coarse_vals.len(),
            censored_count: censored,
        },
        fine: Estimate {
            mean: fine_mean,
            std_error: fine_se,
            replications_used: fine_vals.len(),
            censored_count: censored,
        },
        coupled_diff: dmean,
        coupled_diff_se: dse,
    })
}
