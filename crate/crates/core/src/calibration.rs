//! Threshold calibration against false-alarm energy targets.
//!
//! Three routes: the exact one-sensor relation `f(nu) = gamma` with
//! `f(nu) = e^nu - nu - 1`, the N-sensor asymptotic `h = log gamma + log N`,
//! and Monte Carlo root-finding on the simulated mean false-alarm energy.
//!
//! The MC route uses common random numbers realized as per-path *record
//! frontiers*: each no-change replication is simulated once, recording the
//! criterion energy at every new running maximum of the (threshold-adjusted)
//! chart statistics. Energy-at-threshold then becomes a pure lookup, the
//! estimated energy curve is monotone in `h` by construction, and bisection
//! on it is deterministic. Paths extend lazily when a probe exceeds the
//! levels simulated so far.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{ChartBank, CrossingRule, OVERSHOOT_BETA};
use crate::drift::DriftModel;
use crate::error::{Error, Result};
use crate::sim::{PathStepper, SimConfig, StepScratch};
use crate::stats::mean_se;

/// How a threshold was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    ExactOneSensor,
    AsymptoticN,
    MonteCarloRootFind,
}

/// Calibrated threshold together with the false-alarm energy it achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub threshold: f64,
    pub gamma_target: f64,
    /// Achieved mean false-alarm energy (exact value or MC estimate).
    pub gamma_achieved: f64,
    /// Standard error of `gamma_achieved`; zero for closed-form methods.
    pub gamma_se: f64,
    pub method: CalibrationMethod,
}

/// `f(nu) = e^nu - nu - 1`, the exact one-sensor mean false-alarm energy at
/// threshold `nu`; `f(-nu)` is the matching worst-case detection delay.
/// Written via `exp_m1` so the `nu -> 0` cancellation stays accurate.
pub fn f_cusum(nu: f64) -> f64 {
    nu.exp_m1() - nu
}

/// Solves `f(nu) = gamma` for the unique positive root.
pub fn solve_nu(gamma: f64) -> Result<CalibrationResult> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(gamma));
    }
    let tol = 1e-10 * gamma.max(1.0);
    // f is increasing and convex on (0, inf): Newton with a bisection guard.
    let mut lo = 0.0f64;
    let mut hi = if gamma > 1.0 {
        gamma.ln() + (gamma.ln_1p() / gamma).max(2.0)
    } else {
        (2.0 * gamma).sqrt() * 1.5 + 1e-12
    };
    while f_cusum(hi) < gamma {
        hi *= 2.0;
    }
    let mut nu = if gamma > 1.0 {
        (gamma + 1.0).ln()
    } else {
        (2.0 * gamma).sqrt()
    };
    for _ in 0..200 {
        let err = f_cusum(nu) - gamma;
        if err.abs() <= tol {
            break;
        }
        if err > 0.0 {
            hi = nu;
        } else {
            lo = nu;
        }
        let deriv = nu.exp_m1();
        let newton = nu - err / deriv;
        nu = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(CalibrationResult {
        threshold: nu,
        gamma_target: gamma,
        gamma_achieved: f_cusum(nu),
        gamma_se: 0.0,
        method: CalibrationMethod::ExactOneSensor,
    })
}

/// Leading-order N-sensor threshold `log gamma + log N` for a false-alarm
/// energy target `gamma > 1`.
pub fn asymptotic_h(gamma: f64, n_sensors: usize) -> f64 {
    debug_assert!(gamma > 1.0 && n_sensors >= 1);
    gamma.ln() + (n_sensors as f64).ln()
}

/// Parameters of the Monte Carlo threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCalibParams {
    pub replications: usize,
    pub dt: f64,
    pub seed: u64,
    pub rule: CrossingRule,
    /// Half-width of the search bracket around `asymptotic_h`.
    pub bracket: f64,
    /// Bisection stops when the bracket is narrower than this.
    pub tol_h: f64,
    /// Total simulated steps across all replications before the search
    /// aborts with a budget error.
    pub max_total_steps: u64,
}

impl Default for McCalibParams {
    fn default() -> Self {
        McCalibParams {
            replications: 1000,
            dt: 2e-3,
            seed: 0,
            rule: CrossingRule::ContinuityCorrected,
            bracket: 2.0,
            tol_h: 5e-4,
            max_total_steps: 60_000_000_000,
        }
    }
}

fn no_change_config(n_sensors: usize, params: &McCalibParams) -> SimConfig {
    SimConfig {
        n_sensors,
        dt: params.dt,
        // Nominal horizon only; frontier paths run until their target level
        // and are capped by the step budget instead.
        horizon: 1e12,
        change_points: vec![f64::INFINITY; n_sensors],
        seed: params.seed,
    }
}

/// One no-change replication's record frontier: criterion energy at every new
/// running maximum of `max_i (y_i + shift_i)`, where `shift_i` is the
/// crossing rule's threshold adjustment. A crossing of threshold `h` under
/// the rule is exactly the first record level `>= h`.
struct FrontierPath {
    stepper: PathStepper,
    scratch: StepScratch,
    bank: ChartBank,
    energy: f64,
    records: Vec<(f64, f64)>,
    level: f64,
    steps_taken: u64,
}

impl FrontierPath {
    fn new(config: &SimConfig, model: &DriftModel, stream: u64) -> Result<Self> {
        Ok(FrontierPath {
            stepper: PathStepper::new(config, model, stream)?,
            scratch: StepScratch::new(config.n_sensors),
            bank: ChartBank::new(config.n_sensors),
            energy: 0.0,
            records: Vec::with_capacity(256),
            level: 0.0,
            steps_taken: 0,
        })
    }

    /// Simulates until the adjusted-statistic running maximum reaches
    /// `target`, appending records. `step_cap` bounds this call's work.
    fn extend_to(&mut self, target: f64, rule: CrossingRule, step_cap: u64) -> Result<()> {
        let dt = self.stepper.dt();
        let sqrt_dt = dt.sqrt();
        let n = self.bank.states().len();
        let mut taken = 0u64;
        while self.level < target {
            if taken >= step_cap {
                return Err(Error::BudgetExceeded {
                    context: format!(
                        "frontier extension to level {target:.3} (reached {:.3})",
                        self.level
                    ),
                    partial: self.level,
                    replications: 1,
                });
            }
            let out = self.stepper.advance(&mut self.scratch);
            let mut sq = 0.0;
            for i in 0..n {
                sq += out.alpha_model[i] * out.alpha_model[i];
            }
            self.energy += 0.5 * sq / n as f64 * dt;
            self.bank.step(out.alpha_model, out.dz, dt);

            let mut adj_max = f64::NEG_INFINITY;
            for (i, s) in self.bank.states().iter().enumerate() {
                let shift = match rule {
                    CrossingRule::Grid => 0.0,
                    CrossingRule::ContinuityCorrected => {
                        2.0 * OVERSHOOT_BETA * out.alpha_model[i].abs() * sqrt_dt
                    }
                };
                adj_max = adj_max.max(s.y + shift);
            }
            if adj_max > self.level {
                self.level = adj_max;
                self.records.push((adj_max, self.energy));
            }
            taken += 1;
        }
        self.steps_taken += taken;
        Ok(())
    }

    /// Criterion energy at the first crossing of threshold `h`.
    fn energy_at(&self, h: f64) -> f64 {
        debug_assert!(self.level >= h);
        let idx = self.records.partition_point(|&(lvl, _)| lvl < h);
        self.records[idx].1
    }
}

/// Monte Carlo threshold calibration: finds `h` with mean false-alarm energy
/// equal to `gamma` under the all-no-change measure.
pub fn calibrate_h_mc(
    gamma: f64,
    n_sensors: usize,
    model: &DriftModel,
    params: &McCalibParams,
) -> Result<CalibrationResult> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::NonPositiveGamma(gamma));
    }
    model.validate(n_sensors)?;
    if params.replications == 0 {
        return Err(Error::InvalidConfig("replications must be >= 1".into()));
    }

    // Bracket around the asymptote when it is informative; for small gamma
    // fall back to the exact one-sensor root, which upper-bounds the
    // multi-chart threshold.
    let center = if gamma > std::f64::consts::E {
        asymptotic_h(gamma, n_sensors)
    } else {
        solve_nu(gamma)?.threshold
    };
    let mut lo = (center - params.bracket).max(params.tol_h);
    let mut hi = center + params.bracket;

    // Frontier paths have no horizon; the step budget is the only cap.
    let config = no_change_config(n_sensors, params);

    let mut paths: Vec<FrontierPath> = (0..params.replications as u64)
        .map(|r| FrontierPath::new(&config, model, r))
        .collect::<Result<_>>()?;

    let per_path_cap = params.max_total_steps / params.replications as u64;
    let extend_all = |paths: &mut Vec<FrontierPath>, level: f64| -> Result<()> {
        paths
            .par_iter_mut()
            .map(|p| p.extend_to(level, params.rule, per_path_cap.saturating_sub(p.steps_taken)))
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    };
    let estimate = |paths: &Vec<FrontierPath>, h: f64| -> (f64, f64) {
        let energies: Vec<f64> = paths.iter().map(|p| p.energy_at(h)).collect();
        mean_se(&energies)
    };

    // The true root sits within o(1) above the asymptote, so probe there
    // before falling back to plain bisection over the full bracket.
    let mut probe_queue = vec![center, (center + 0.35).min(hi), (center - 0.35).max(lo)];
    let mut result: Option<(f64, f64, f64)> = None;
    while hi - lo > params.tol_h {
        let h = match probe_queue.pop() {
            Some(p) if p > lo && p < hi => p,
            _ => 0.5 * (lo + hi),
        };
        extend_all(&mut paths, h).map_err(|e| match e {
            Error::BudgetExceeded { context, .. } => Error::BudgetExceeded {
                context,
                partial: result.map(|(rh, _, _)| rh).unwrap_or(h),
                replications: params.replications,
            },
            other => other,
        })?;
        let (mean, se) = estimate(&paths, h);
        result = Some((h, mean, se));
        if mean < gamma {
            lo = h;
        } else {
            hi = h;
        }
    }

    let h_final = 0.5 * (lo + hi);
    extend_all(&mut paths, h_final)?;
    let (mean, se) = estimate(&paths, h_final);
    Ok(CalibrationResult {
        threshold: h_final,
        gamma_target: gamma,
        gamma_achieved: mean,
        gamma_se: se,
        method: CalibrationMethod::MonteCarloRootFind,
    })
}

/// Mean false-alarm energy at a fixed threshold, by the same frontier
/// machinery (single lookup level). Exposed for cross-validation runs.
pub fn false_alarm_energy_at(
    h: f64,
    n_sensors: usize,
    model: &DriftModel,
    params: &McCalibParams,
) -> Result<(f64, f64)> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::NonPositiveThreshold(h));
    }
    model.validate(n_sensors)?;
    let config = no_change_config(n_sensors, params);
    let per_path_cap = params.max_total_steps / params.replications.max(1) as u64;
    let energies: Vec<f64> = (0..params.replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut p = FrontierPath::new(&config, model, r)?;
            p.extend_to(h, params.rule, per_path_cap)?;
            Ok(p.energy_at(h))
        })
        .collect::<Result<_>>()?;
    Ok(mean_se(&energies))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_cusum_reference_values() {
        assert_eq!(f_cusum(0.0), 0.0);
        assert!((f_cusum(1.0) - (std::f64::consts::E - 2.0)).abs() < 1e-15);
        assert!((f_cusum(-2.0) - ((-2.0f64).exp() + 1.0)).abs() < 1e-15);
        // Near zero the quadratic Taylor term dominates; exp_m1 keeps the
        // cancellation at the ulp level (naive exp would lose everything).
        let nu = 1e-9;
        let taylor = nu * nu / 2.0;
        assert!((f_cusum(nu) - taylor).abs() < 1e-6 * taylor);
    }

    #[test]
    fn solve_nu_inverts_f() {
        let r = solve_nu(std::f64::consts::E - 2.0).unwrap();
        assert!((r.threshold - 1.0).abs() < 1e-9, "{}", r.threshold);

        for nu in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 19.0] {
            let back = solve_nu(f_cusum(nu)).unwrap().threshold;
            assert!((back - nu).abs() < 1e-8, "nu={nu} back={back}");
        }
    }

    #[test]
    fn solve_nu_large_gamma_fixed_point() {
        // Oracle: iterate nu <- log(gamma + nu + 1).
        let gamma: f64 = 1e6;
        let mut oracle = gamma.ln();
        for _ in 0..50 {
            oracle = (gamma + oracle + 1.0).ln();
        }
        let r = solve_nu(gamma).unwrap();
        assert!((r.threshold - oracle).abs() < 1e-6);
    }

    #[test]
    fn solve_nu_small_gamma_taylor() {
        let gamma = 1e-8;
        let r = solve_nu(gamma).unwrap();
        let taylor = (2.0 * gamma).sqrt();
        assert!(
            (r.threshold - taylor).abs() < 0.01 * taylor,
            "{} vs {taylor}",
            r.threshold
        );
    }

    #[test]
    fn solve_nu_rejects_nonpositive() {
        assert!(solve_nu(0.0).is_err());
        assert!(solve_nu(-1.0).is_err());
    }

    #[test]
    fn asymptotic_h_values() {
        assert!((asymptotic_h(3.0f64.exp(), 1) - 3.0).abs() < 1e-12);
        assert!((asymptotic_h(1000.0, 2) - 7.600902459542082).abs() < 1e-12);
        assert!((asymptotic_h(1000.0, 4) - 8.294049640102028).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_matches_exact_as_gamma_grows() {
        // asymptotic_h(gamma, 1) - solve_nu(gamma) is o(1), decreasing.
        let mut last = f64::INFINITY;
        for gamma in [1e3, 1e4, 1e5] {
            let diff = (asymptotic_h(gamma, 1) - solve_nu(gamma).unwrap().threshold).abs();
            assert!(diff < last);
            last = diff;
        }
        assert!(last < 0.01, "diff at 1e5 was {last}");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // solve_nu inverts f on (0, 20), and f is positive off zero with
            // increasing increments (convexity).
            #[test]
            fn solve_roundtrip(nu in 1e-3f64..20.0) {
                let back = solve_nu(f_cusum(nu)).unwrap().threshold;
                prop_assert!((back - nu).abs() <= 1e-8 * nu.max(1.0));
            }

            #[test]
            fn f_positive_and_convex(a in -20.0f64..20.0, d in 1e-6f64..1.0) {
                if a != 0.0 {
                    prop_assert!(f_cusum(a) > 0.0);
                }
                let second = f_cusum(a + 2.0 * d) - 2.0 * f_cusum(a + d) + f_cusum(a);
                prop_assert!(second >= -1e-9 * f_cusum(a + 2.0 * d).abs().max(1.0));
            }
        }
    }

    #[test]
    fn small_gamma_calibrates_against_exact_root() {
        // gamma below e: bracket centers on the one-sensor root; the N=1
        // result must still invert f.
        let gamma = 0.5;
        let params = McCalibParams {
            replications: 1500,
            dt: 5e-4,
            seed: 4,
            ..Default::default()
        };
        let r = calibrate_h_mc(gamma, 1, &crate::drift::DriftModel::constant(1.0), &params)
            .unwrap();
        let expect = solve_nu(gamma).unwrap().threshold;
        let h_se = r.gamma_se / expect.exp_m1();
        assert!(
            (r.threshold - expect).abs() <= 4.0 * h_se.max(0.01),
            "h {} vs {expect} (se {h_se})",
            r.threshold
        );
    }

    #[test]
    fn budget_error_carries_partial() {
        let params = McCalibParams {
            replications: 4,
            dt: 1e-2,
            seed: 3,
            max_total_steps: 100,
            ..Default::default()
        };
        let err = calibrate_h_mc(50.0, 1, &DriftModel::constant(1.0), &params).unwrap_err();
        match err {
            Error::BudgetExceeded { .. } => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
