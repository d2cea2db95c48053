//! Subcommand implementations.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use ncusum_core::calibration::{
    asymptotic_h, calibrate_h_mc, solve_nu, CalibrationMethod, CalibrationResult, McCalibParams,
};
use ncusum_core::detector::{write_trace_csv, CrossingRule};
use ncusum_core::drift::DriftModel;
use ncusum_core::error::{Error, Result};
use ncusum_core::montecarlo::{
    equalizer_test, estimate_delay, estimate_false_alarm, optimality_gap, GapParams, HorizonPolicy,
    Scenario,
};
use ncusum_core::pde::{
    product_check, solve_s, solve_t, survival_curve, sweep, Grid2D, PdeProblem, SurvivalParams,
};
use ncusum_core::sim::{simulate_paths, SimConfig};
use ncusum_core::stats::fit_exp_rate;

use crate::config::{config_hash, parse_model, parse_taus, Tau};
use crate::output::{fmt, OutputDir};
use crate::report;

fn load_config<T: for<'de> Deserialize<'de>>(path: &Option<PathBuf>) -> Result<Option<T>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            let cfg = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidConfig(format!("config {}: {e}", p.display())))?;
            Ok(Some(cfg))
        }
    }
}

fn pick<T: Clone>(flag: &Option<T>, file: Option<&T>, default: T) -> T {
    flag.clone()
        .or_else(|| file.cloned())
        .unwrap_or(default)
}

fn parse_rule(s: &str) -> Result<CrossingRule> {
    match s {
        "grid" => Ok(CrossingRule::Grid),
        "corrected" => Ok(CrossingRule::ContinuityCorrected),
        other => Err(Error::InvalidConfig(format!(
            "crossing rule must be grid|corrected, got {other:?}"
        ))),
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Drift model, e.g. constant:1.0, autoregressive:0.5, rotational.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated change points; `inf` for never.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also dump the detector trace at this threshold.
    #[arg(long)]
    trace_h: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Default, Serialize, Deserialize)]
struct SimulateConfig {
    model: Option<String>,
    n: Option<usize>,
    tau: Option<Vec<Tau>>,
    dt: Option<f64>,
    horizon: Option<f64>,
    seed: Option<u64>,
    trace_h: Option<f64>,
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let file: SimulateConfig = load_config(&args.config)?.unwrap_or_default();
    let model_spec = pick(&args.model, file.model.as_ref(), "constant:1.0".into());
    let model = parse_model(&model_spec)?;
    let n = pick(&args.n, file.n.as_ref(), 1);
    let taus = match (&args.tau, &file.tau) {
        (Some(s), _) => parse_taus(s)?,
        (None, Some(v)) => v.iter().map(|t| t.value()).collect(),
        (None, None) => vec![0.0; n],
    };
    let config = SimConfig {
        n_sensors: n,
        dt: pick(&args.dt, file.dt.as_ref(), 1e-3),
        horizon: pick(&args.horizon, file.horizon.as_ref(), 10.0),
        change_points: taus,
        seed: pick(&args.seed, file.seed.as_ref(), 0),
    };

    #[derive(Serialize)]
    struct Canonical<'a> {
        command: &'a str,
        model: &'a DriftModel,
        n_sensors: usize,
        dt: f64,
        horizon: f64,
        tau: Vec<Tau>,
        seed: u64,
        trace_h: Option<f64>,
    }
    let trace_h = args.trace_h.or(file.trace_h);
    let canonical = Canonical {
        command: "simulate",
        model: &model,
        n_sensors: config.n_sensors,
        dt: config.dt,
        horizon: config.horizon,
        tau: config.change_points.iter().map(|&t| Tau::from_value(t)).collect(),
        seed: config.seed,
        trace_h,
    };
    let hash = config_hash(&canonical);
    let out = OutputDir::new(&args.out, hash, config.seed)?;

    let paths = simulate_paths(&config, &model)?;
    let mut f = out.csv_raw("paths.csv")?;
    paths.write_csv(&mut f)?;
    if let Some(h) = trace_h {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::NonPositiveThreshold(h));
        }
        let mut t = out.csv_raw("trace.csv")?;
        write_trace_csv(&paths, &model, &mut t)?;
    }
    out.json(
        "run.json",
        &serde_json::json!({
            "command": "simulate",
            "n_steps": paths.n_steps(),
            "files": if trace_h.is_some() { vec!["paths.csv", "trace.csv"] } else { vec!["paths.csv"] },
        }),
    )?;
    Ok(())
}

// --------------------------------------------------------------- calibrate

#[derive(Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// exact | asymptotic | mc
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// grid | corrected
    #[arg(long)]
    rule: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Default, Serialize, Deserialize)]
struct CalibrateConfig {
    method: Option<String>,
    gamma: Option<f64>,
    n: Option<usize>,
    model: Option<String>,
    reps: Option<usize>,
    dt: Option<f64>,
    seed: Option<u64>,
    rule: Option<String>,
}

pub fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let file: CalibrateConfig = load_config(&args.config)?.unwrap_or_default();
    let method = pick(&args.method, file.method.as_ref(), "exact".into());
    let gamma = pick(&args.gamma, file.gamma.as_ref(), f64::NAN);
    if gamma.is_nan() {
        return Err(Error::InvalidConfig("--gamma is required".into()));
    }
    let n = pick(&args.n, file.n.as_ref(), 1);
    let seed = pick(&args.seed, file.seed.as_ref(), 0);
    let model = parse_model(&pick(&args.model, file.model.as_ref(), "constant:1.0".into()))?;

    let result: CalibrationResult = match method.as_str() {
        "exact" => {
            if n != 1 {
                return Err(Error::InvalidConfig(
                    "exact calibration is the one-sensor formula; use --n 1".into(),
                ));
            }
            solve_nu(gamma)?
        }
        "asymptotic" => {
            if !gamma.is_finite() || gamma <= 1.0 {
                return Err(Error::NonPositiveGamma(gamma));
            }
            let h = asymptotic_h(gamma, n);
            CalibrationResult {
                threshold: h,
                gamma_target: gamma,
                gamma_achieved: gamma,
                gamma_se: 0.0,
                method: CalibrationMethod::AsymptoticN,
            }
        }
        "mc" => {
            let params = McCalibParams {
                replications: pick(&args.reps, file.reps.as_ref(), 1000),
                dt: pick(&args.dt, file.dt.as_ref(), 2e-3),
                seed,
                rule: parse_rule(&pick(&args.rule, file.rule.as_ref(), "corrected".into()))?,
                ..Default::default()
            };
            calibrate_h_mc(gamma, n, &model, &params)?
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "method must be exact|asymptotic|mc, got {other:?}"
            )))
        }
    };

    #[derive(Serialize)]
    struct Canonical<'a> {
        command: &'a str,
        method: &'a str,
        gamma: f64,
        n: usize,
        model: &'a DriftModel,
        seed: u64,
    }
    let hash = config_hash(&Canonical {
        command: "calibrate",
        method: &method,
        gamma,
        n,
        model: &model,
        seed,
    });
    let out = OutputDir::new(&args.out, hash, seed)?;
    out.json(
        "calibration.json",
        &serde_json::json!({
            "command": "calibrate",
            "gamma": gamma,
            "n_sensors": n,
            "result": result,
        }),
    )?;
    println!(
        "threshold={} gamma_achieved={} method={:?}",
        fmt(result.threshold),
        fmt(result.gamma_achieved),
        result.method
    );
    Ok(())
}

// ---------------------------------------------------------------------- mc

#[derive(Args)]
pub struct McArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// false-alarm | delay | equalizer | gap
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Threshold for false-alarm / delay / equalizer runs.
    #[arg(long)]
    h: Option<f64>,
    /// Per-sensor thresholds (diagnostic asymmetric mode), e.g. 3.6,4.4.
    #[arg(long)]
    h_per_sensor: Option<String>,
    /// Change points for delay runs; default: sensor 1 at 0, rest inf.
    #[arg(long)]
    tau: Option<String>,
    /// Gamma list for the gap experiment, e.g. 100,1000.
    #[arg(long)]
    gamma_list: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// grid | corrected
    #[arg(long)]
    rule: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Default, Serialize, Deserialize)]
struct McConfig {
    experiment: Option<String>,
    model: Option<String>,
    n: Option<usize>,
    h: Option<f64>,
    h_per_sensor: Option<Vec<f64>>,
    tau: Option<Vec<Tau>>,
    gamma_list: Option<Vec<f64>>,
    reps: Option<usize>,
    dt: Option<f64>,
    seed: Option<u64>,
    rule: Option<String>,
}

struct EstimateRow {
    scenario_id: String,
    gamma: Option<f64>,
    n_sensors: usize,
    threshold: f64,
    mean: f64,
    se: f64,
    reps: usize,
    censored: usize,
}

fn write_estimate_rows(out: &OutputDir, rows: &[EstimateRow]) -> Result<()> {
    let mut f = out.csv(
        "estimates.csv",
        "scenario_id,gamma,N,threshold,mean,se,reps,censored",
    )?;
    use std::io::Write;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.gamma.map(fmt).unwrap_or_default(),
            r.n_sensors,
            fmt(r.threshold),
            fmt(r.mean),
            fmt(r.se),
            r.reps,
            r.censored
        )?;
    }
    Ok(())
}

pub fn cmd_mc(args: McArgs) -> Result<()> {
    let file: McConfig = load_config(&args.config)?.unwrap_or_default();
    let experiment = pick(&args.experiment, file.experiment.as_ref(), "delay".into());
    let n = pick(&args.n, file.n.as_ref(), 1);
    let model = parse_model(&pick(&args.model, file.model.as_ref(), "constant:1.0".into()))?;
    let seed = pick(&args.seed, file.seed.as_ref(), 0);
    let dt = pick(&args.dt, file.dt.as_ref(), 1e-3);
    // Explicit --reps pins the exact count; the default budget runs until
    // 1e5 replications or a 1% relative standard error, whichever first.
    let reps_explicit = args.reps.or(file.reps);
    let reps = reps_explicit.unwrap_or(100_000);
    let se_target_rel = if reps_explicit.is_none() { Some(0.01) } else { None };
    let rule = parse_rule(&pick(&args.rule, file.rule.as_ref(), "corrected".into()))?;
    let h = args.h.or(file.h);
    let h_per_sensor: Option<Vec<f64>> = match (&args.h_per_sensor, &file.h_per_sensor) {
        (Some(s), _) => Some(
            s.split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidConfig(format!("bad per-sensor threshold {t:?}"))
                    })
                })
                .collect::<Result<_>>()?,
        ),
        (None, Some(v)) => Some(v.clone()),
        (None, None) => None,
    };

    #[derive(Serialize)]
    struct Canonical<'a> {
        command: &'a str,
        experiment: &'a str,
        model: &'a DriftModel,
        n: usize,
        h: Option<f64>,
        h_per_sensor: &'a Option<Vec<f64>>,
        gamma_list: &'a Option<Vec<f64>>,
        reps: usize,
        dt: f64,
        seed: u64,
    }
    let gamma_list: Option<Vec<f64>> = match (&args.gamma_list, &file.gamma_list) {
        (Some(s), _) => Some(
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad gamma {t:?}")))
                })
                .collect::<Result<_>>()?,
        ),
        (None, Some(v)) => Some(v.clone()),
        (None, None) => None,
    };
    let hash = config_hash(&Canonical {
        command: "mc",
        experiment: &experiment,
        model: &model,
        n,
        h,
        h_per_sensor: &h_per_sensor,
        gamma_list: &gamma_list,
        reps,
        dt,
        seed,
    });
    let out = OutputDir::new(&args.out, hash, seed)?;

    let base_scenario = |change_points: Vec<f64>, threshold: f64| Scenario {
        n_sensors: n,
        change_points,
        model: model.clone(),
        threshold,
        threshold_overrides: h_per_sensor.clone().unwrap_or_default(),
        dt,
        horizon: HorizonPolicy::default(),
        replications: reps,
        seed,
        rule,
        stream_arm: 0,
        se_target_rel,
    };

    match experiment.as_str() {
        "false-alarm" => {
            let h = h.ok_or_else(|| Error::InvalidConfig("--h is required".into()))?;
            let s = base_scenario(vec![f64::INFINITY; n], h);
            let est = estimate_false_alarm(&s)?;
            write_estimate_rows(
                &out,
                &[EstimateRow {
                    scenario_id: format!("fa_h{h}_n{n}"),
                    gamma: None,
                    n_sensors: n,
                    threshold: h,
                    mean: est.mean,
                    se: est.std_error,
                    reps: est.replications_used,
                    censored: est.censored_count,
                }],
            )?;
            out.json(
                "summary.json",
                &serde_json::json!({
                    "command": "mc",
                    "experiment": "false-alarm",
                    "threshold": h,
                    "n_sensors": n,
                    "estimate": est,
                }),
            )?;
        }
        "delay" => {
            let h = h.ok_or_else(|| Error::InvalidConfig("--h is required".into()))?;
            let taus = match (&args.tau, &file.tau) {
                (Some(s), _) => parse_taus(s)?,
                (None, Some(v)) => v.iter().map(|t| t.value()).collect(),
                (None, None) => {
                    let mut t = vec![f64::INFINITY; n];
                    t[0] = 0.0;
                    t
                }
            };
            let s = base_scenario(taus, h);
            let est = estimate_delay(&s)?;
            write_estimate_rows(
                &out,
                &[EstimateRow {
                    scenario_id: format!("delay_h{h}_n{n}"),
                    gamma: None,
                    n_sensors: n,
                    threshold: h,
                    mean: est.mean,
                    se: est.std_error,
                    reps: est.replications_used,
                    censored: est.censored_count,
                }],
            )?;
            out.json(
                "summary.json",
                &serde_json::json!({
                    "command": "mc",
                    "experiment": "delay",
                    "threshold": h,
                    "n_sensors": n,
                    "estimate": est,
                }),
            )?;
        }
        "equalizer" => {
            let h = h.ok_or_else(|| Error::InvalidConfig("--h is required".into()))?;
            let s = base_scenario(vec![f64::INFINITY; n], h);
            let rep = equalizer_test(&s)?;
            let rows: Vec<EstimateRow> = rep
                .per_sensor
                .iter()
                .enumerate()
                .map(|(i, est)| EstimateRow {
                    scenario_id: format!("equalizer_change_s{}_h{h}_n{n}", i + 1),
                    gamma: None,
                    n_sensors: n,
                    threshold: h,
                    mean: est.mean,
                    se: est.std_error,
                    reps: est.replications_used,
                    censored: est.censored_count,
                })
                .collect();
            write_estimate_rows(&out, &rows)?;
            out.json(
                "summary.json",
                &serde_json::json!({
                    "command": "mc",
                    "experiment": "equalizer",
                    "threshold": h,
                    "n_sensors": n,
                    "report": rep,
                }),
            )?;
        }
        "gap" => {
            let gammas = gamma_list
                .ok_or_else(|| Error::InvalidConfig("--gamma-list is required".into()))?;
            let params = GapParams {
                delay_replications: reps,
                delay_dt: dt,
                horizon: HorizonPolicy::default(),
                seed,
                rule,
                calib: McCalibParams {
                    replications: (reps / 10).clamp(200, 2000),
                    dt: (dt * 4.0).min(5e-3),
                    seed,
                    rule,
                    ..Default::default()
                },
                se_target_rel,
            };
            let rows = optimality_gap(&gammas, n, &model, &params)?;
            let mut f = out.csv(
                "gap.csv",
                "gamma,N,nu,h,lower_bound,delay_mean,delay_se,gap,gap_se",
            )?;
            use std::io::Write;
            for r in &rows {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{},{}",
                    fmt(r.gamma),
                    r.n_sensors,
                    fmt(r.nu),
                    fmt(r.h),
                    fmt(r.lower_bound),
                    fmt(r.delay.mean),
                    fmt(r.delay.std_error),
                    fmt(r.gap),
                    fmt(r.gap_se)
                )?;
            }
            out.json(
                "summary.json",
                &serde_json::json!({
                    "command": "mc",
                    "experiment": "gap",
                    "n_sensors": n,
                    "rows": rows,
                }),
            )?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "experiment must be false-alarm|delay|equalizer|gap, got {other:?}"
            )))
        }
    }
    Ok(())
}

// --------------------------------------------------------------------- pde

#[derive(Args)]
pub struct PdeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// t | s | product | survival
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated epsilons, e.g. 0.25,0.2,0.15.
    #[arg(long)]
    eps_list: Option<String>,
    #[arg(long)]
    n_cells: Option<usize>,
    /// Sensor count entering the T asymptote.
    #[arg(long)]
    n: Option<usize>,
    /// Drift sign for survival runs: -1 or 1.
    #[arg(long, allow_hyphen_values = true)]
    drift_sign: Option<f64>,
    /// Dump the full solved field as CSV too.
    #[arg(long, default_value_t = false)]
    dump_field: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Default, Serialize, Deserialize)]
struct PdeConfig {
    problem: Option<String>,
    eps_list: Option<Vec<f64>>,
    n_cells: Option<usize>,
    n: Option<usize>,
    drift_sign: Option<f64>,
    dump_field: Option<bool>,
}

pub fn cmd_pde(args: PdeArgs) -> Result<()> {
    let file: PdeConfig = load_config(&args.config)?.unwrap_or_default();
    let problem = pick(&args.problem, file.problem.as_ref(), "t".into());
    let epsilons: Vec<f64> = match (&args.eps_list, &file.eps_list) {
        (Some(s), _) => s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad epsilon {t:?}")))
            })
            .collect::<Result<_>>()?,
        (None, Some(v)) => v.clone(),
        (None, None) => vec![0.25, 0.2, 0.15, 0.125],
    };
    let n_cells = pick(&args.n_cells, file.n_cells.as_ref(), 256);
    let n_sensors = pick(&args.n, file.n.as_ref(), 2);
    let drift_sign = pick(&args.drift_sign, file.drift_sign.as_ref(), -1.0);
    let dump_field = args.dump_field || file.dump_field.unwrap_or(false);
    let seed = args.seed.unwrap_or(0);

    #[derive(Serialize)]
    struct Canonical<'a> {
        command: &'a str,
        problem: &'a str,
        epsilons: &'a [f64],
        n_cells: usize,
        n_sensors: usize,
        drift_sign: f64,
    }
    let hash = config_hash(&Canonical {
        command: "pde",
        problem: &problem,
        epsilons: &epsilons,
        n_cells,
        n_sensors,
        drift_sign,
    });
    let out = OutputDir::new(&args.out, hash, seed)?;
    use std::io::Write;

    match problem.as_str() {
        "t" | "s" => {
            let kind = if problem == "t" {
                PdeProblem::MeanExitNoChange
            } else {
                PdeProblem::MeanExitOneChanged
            };
            let rows = sweep(kind, &epsilons, n_sensors, |_| n_cells)?;
            let mut f = out.csv("sweep.csv", "problem,epsilon,n_cells,corner,asymptote,rel_err")?;
            for r in &rows {
                writeln!(
                    f,
                    "{},{},{},{},{},{}",
                    r.problem,
                    fmt(r.epsilon),
                    r.n_cells,
                    fmt(r.corner),
                    fmt(r.asymptote),
                    fmt(r.rel_err)
                )?;
            }
            if dump_field {
                for &eps in &epsilons {
                    let grid = Grid2D::new(eps, n_cells)?;
                    let sol = match kind {
                        PdeProblem::MeanExitNoChange => solve_t(&grid)?,
                        PdeProblem::MeanExitOneChanged => solve_s(&grid)?,
                    };
                    let name = format!("field_{}_eps{eps}.csv", sol.problem.label());
                    let mut ff = out.csv_raw(&name)?;
                    sol.write_field_csv(&mut ff)?;
                }
            }
            out.json(
                "summary.json",
                &serde_json::json!({ "command": "pde", "problem": problem, "epsilons": epsilons, "rows": rows }),
            )?;
        }
        "product" => {
            let mut f = out.csv(
                "product.csv",
                "epsilon,n_cells,t_integral,t_corner,t_rel_err,s_integral,s_corner,s_rel_err,outside_regime",
            )?;
            let mut reports = Vec::new();
            for &eps in &epsilons {
                let grid = Grid2D::new(eps, n_cells)?;
                let rep = product_check(&grid)?;
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{},{}",
                    fmt(eps),
                    n_cells,
                    fmt(rep.t_product_integral),
                    fmt(rep.t_corner),
                    fmt(rep.t_rel_err),
                    fmt(rep.s_product_integral),
                    fmt(rep.s_corner),
                    fmt(rep.s_rel_err),
                    rep.outside_asymptotic_regime
                )?;
                reports.push(rep);
            }
            out.json(
                "summary.json",
                &serde_json::json!({ "command": "pde", "problem": "product", "reports": reports }),
            )?;
        }
        "survival" => {
            let mut f = out.csv("survival.csv", "epsilon,t,g")?;
            let mut rates = Vec::new();
            for &eps in &epsilons {
                let params = SurvivalParams::new(eps, drift_sign, n_cells);
                let slow = (1.0 / eps) * (-1.0 / eps).exp();
                let t_max = 6.0 / slow;
                let t_grid: Vec<f64> = (0..=400).map(|k| t_max * k as f64 / 400.0).collect();
                let g = survival_curve(&params, &t_grid)?;
                for (t, gv) in t_grid.iter().zip(&g) {
                    writeln!(f, "{},{},{}", fmt(eps), fmt(*t), fmt(*gv))?;
                }
                let tail = t_grid.len() / 2;
                let rate = fit_exp_rate(&t_grid[tail..], &g[tail..]);
                rates.push(serde_json::json!({
                    "epsilon": eps,
                    "fitted_rate": rate,
                    "asymptotic_rate": slow,
                }));
            }
            out.json(
                "summary.json",
                &serde_json::json!({ "command": "pde", "problem": "survival", "rates": rates }),
            )?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "problem must be t|s|product|survival, got {other:?}"
            )))
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ report

#[derive(Args)]
pub struct ReportArgs {
    /// Directory containing prior run outputs (searched recursively).
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn cmd_report(args: ReportArgs) -> Result<()> {
    let out_dir = args.out.clone().unwrap_or_else(|| args.dir.clone());
    report::build_report(&args.dir, &out_dir)
}

