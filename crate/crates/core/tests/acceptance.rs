//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities. Run with
//! `cargo test -p ncusum-core --test acceptance -- --nocapture` to see the
//! lines; thresholds and tolerances are pinned here, not configurable.

use ncusum_core::calibration::{
    asymptotic_h, calibrate_h_mc, false_alarm_energy_at, McCalibParams,
};
use ncusum_core::detector::{run_multichart, CrossingRule};
use ncusum_core::drift::DriftModel;
use ncusum_core::montecarlo::{
    dt_sensitivity, equalizer_test, estimate_delay, estimate_false_alarm, optimality_gap,
    Estimate, GapParams, HorizonPolicy, Scenario,
};
use ncusum_core::pde::{
    asymptote_s, asymptote_t, product_check, solve_s, solve_t, survival_curve, Grid2D,
    SurvivalParams,
};
use ncusum_core::sim::{simulate_paths, simulate_paths_stream, SimConfig};
use ncusum_core::stats::fit_exp_rate;

const E2_MINUS_3: f64 = 4.38905609893065;
const F_NEG_2: f64 = 1.1353352832366127;
const LOG_2: f64 = std::f64::consts::LN_2;
const LOG_4: f64 = 2.0 * std::f64::consts::LN_2;
const DELAY_ASYM_N2_G1000: f64 = 6.600902459542082; // log 1000 + log 2 - 1

fn banner(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[{}] {} {}",
        criterion,
        if pass { "PASS" } else { "FAIL" },
        detail
    );
    assert!(pass, "{criterion}: {detail}");
}

fn scenario(
    n: usize,
    change_points: Vec<f64>,
    h: f64,
    dt: f64,
    reps: usize,
    seed: u64,
    arm: u64,
) -> Scenario {
    Scenario {
        n_sensors: n,
        change_points,
        model: DriftModel::constant(1.0),
        threshold: h,
        threshold_overrides: vec![],
        dt,
        horizon: HorizonPolicy::default(),
        replications: reps,
        seed,
        rule: CrossingRule::ContinuityCorrected,
        stream_arm: arm,
        se_target_rel: None,
    }
}

/// Criterion 1: exact one-sensor false-alarm energy f(2) = e^2 - 3 at
/// nu = 2, dt = 1e-3, 1e5 replications, within 3 SE.
#[test]
fn criterion_1_exact_false_alarm() {
    let s = scenario(1, vec![f64::INFINITY], 2.0, 1e-3, 100_000, 101, 0);
    let est = estimate_false_alarm(&s).unwrap();
    let err = (est.mean - E2_MINUS_3).abs();
    let tol = 3.0 * est.std_error;
    banner(
        "C1",
        err <= tol,
        &format!(
            "false-alarm energy {:.5} vs f(2)={:.5}, |err|={:.5} <= 3SE={:.5}",
            est.mean, E2_MINUS_3, err, tol
        ),
    );
}

/// Criterion 2: exact one-sensor delay f(-2), same setup with tau = 0,
/// within 3 SE; halving dt moves the estimate by < 1 SE (coupled noise).
#[test]
fn criterion_2_exact_delay_and_dt_sensitivity() {
    let s = scenario(1, vec![0.0], 2.0, 1e-3, 100_000, 102, 0);
    let est = estimate_delay(&s).unwrap();
    let err = (est.mean - F_NEG_2).abs();
    let tol = 3.0 * est.std_error;
    banner(
        "C2a",
        err <= tol,
        &format!(
            "delay energy {:.5} vs f(-2)={:.5}, |err|={:.5} <= 3SE={:.5}",
            est.mean, F_NEG_2, err, tol
        ),
    );

    let sens = dt_sensitivity(&scenario(1, vec![0.0], 2.0, 1e-3, 40_000, 102, 1), 0).unwrap();
    let moved = sens.coupled_diff.abs();
    banner(
        "C2b",
        moved < est.std_error,
        &format!(
            "halving dt moves estimate by {:.6} (coupled; se of diff {:.6}) < 1SE={:.6}",
            moved, sens.coupled_diff_se, est.std_error
        ),
    );
}

/// Criterion 3: asymptotic delay law log(gamma) + log N - 1 at N=2,
/// h from MC calibration, within max(3 SE, 0.3).
#[test]
fn criterion_3_asymptotic_delay() {
    let calib = calibrate_h_mc(
        1000.0,
        2,
        &DriftModel::constant(1.0),
        &McCalibParams {
            replications: 1500,
            dt: 2e-3,
            seed: 103,
            rule: CrossingRule::ContinuityCorrected,
            ..Default::default()
        },
    )
    .unwrap();
    let s = scenario(
        2,
        vec![0.0, f64::INFINITY],
        calib.threshold,
        1e-3,
        20_000,
        103,
        1,
    );
    let est = estimate_delay(&s).unwrap();
    let err = (est.mean - DELAY_ASYM_N2_G1000).abs();
    let tol = (3.0 * est.std_error).max(0.3);
    banner(
        "C3",
        err <= tol,
        &format!(
            "h={:.4}, delay {:.4} vs {:.4}, |err|={:.4} <= {:.4}",
            calib.threshold, est.mean, DELAY_ASYM_N2_G1000, err, tol
        ),
    );
    // Calibrated threshold itself sits near the asymptote.
    let h_err = (calib.threshold - asymptotic_h(1000.0, 2)).abs();
    banner(
        "C3(h)",
        h_err <= 0.15,
        &format!(
            "h={:.4} within 0.15 of log(1000)+log(2)={:.4}",
            calib.threshold,
            asymptotic_h(1000.0, 2)
        ),
    );
}

/// Criterion 4: optimality gap. N=2 at gamma in {100, 1000}: gap(1000)
/// within max(3 SE, 0.2) of log 2 and approaching it; N=4 spot check at
/// gamma = 1e4 within max(3 SE, 0.25) of log 4.
#[test]
fn criterion_4_optimality_gap() {
    let params = GapParams {
        delay_replications: 20_000,
        delay_dt: 1e-3,
        horizon: HorizonPolicy::default(),
        seed: 104,
        rule: CrossingRule::ContinuityCorrected,
        calib: McCalibParams {
            replications: 1500,
            dt: 2e-3,
            seed: 104,
            rule: CrossingRule::ContinuityCorrected,
            ..Default::default()
        },
        se_target_rel: None,
    };
    let rows = optimality_gap(&[100.0, 1000.0], 2, &DriftModel::constant(1.0), &params).unwrap();
    let g100 = &rows[0];
    let g1000 = &rows[1];
    let err1000 = (g1000.gap - LOG_2).abs();
    let tol1000 = (3.0 * g1000.gap_se).max(0.2);
    banner(
        "C4a",
        err1000 <= tol1000,
        &format!(
            "gap(1000)={:.4} (se {:.4}) vs log2={:.4}, |err|={:.4} <= {:.4}",
            g1000.gap, g1000.gap_se, LOG_2, err1000, tol1000
        ),
    );
    let err100 = (g100.gap - LOG_2).abs();
    let pooled = (g100.gap_se.powi(2) + g1000.gap_se.powi(2)).sqrt();
    banner(
        "C4b",
        err1000 <= err100 + 2.0 * pooled,
        &format!(
            "approach: |gap(1000)-log2|={:.4} <= |gap(100)-log2|={:.4} + 2SE={:.4}",
            err1000,
            err100,
            2.0 * pooled
        ),
    );

    let params4 = GapParams {
        delay_replications: 10_000,
        delay_dt: 1e-3,
        horizon: HorizonPolicy::default(),
        seed: 144,
        rule: CrossingRule::ContinuityCorrected,
        calib: McCalibParams {
            replications: 400,
            dt: 5e-3,
            seed: 144,
            rule: CrossingRule::ContinuityCorrected,
            ..Default::default()
        },
        se_target_rel: None,
    };
    let rows4 = optimality_gap(&[1e4], 4, &DriftModel::constant(1.0), &params4).unwrap();
    let g4 = &rows4[0];
    let err4 = (g4.gap - LOG_4).abs();
    let tol4 = (3.0 * g4.gap_se).max(0.25);
    banner(
        "C4c",
        err4 <= tol4,
        &format!(
            "N=4 gap(1e4)={:.4} (se {:.4}) vs log4={:.4}, |err|={:.4} <= {:.4}",
            g4.gap, g4.gap_se, LOG_4, err4, tol4
        ),
    );
}

/// Criterion 5: T corner vs (1/2) eps e^{1/eps} over the epsilon sweep,
/// spacing <= eps/8, relative error monotone decreasing in 1/eps and <= 0.2
/// at eps = 0.125.
#[test]
fn criterion_5_t_asymptote_sweep() {
    // n ~ 16 h^2 keeps the first-order upwind bias roughly constant along
    // the sweep so the shrinking asymptote gap dominates the trend.
    let cases = [(0.25, 256usize), (0.2, 400), (0.15, 712), (0.125, 1024)];
    let mut rel_errs = Vec::new();
    for (eps, n) in cases {
        assert!(1.0 / n as f64 <= eps / 8.0, "spacing guard");
        let sol = solve_t(&Grid2D::new(eps, n).unwrap()).unwrap();
        let asym = asymptote_t(eps, 2);
        rel_errs.push((eps, (sol.corner_value - asym).abs() / asym));
    }
    let monotone = rel_errs.windows(2).all(|w| w[1].1 < w[0].1);
    let last = rel_errs.last().unwrap().1;
    banner(
        "C5",
        monotone && last <= 0.2,
        &format!(
            "rel errs {:?} monotone={} last={:.4} <= 0.2",
            rel_errs
                .iter()
                .map(|(e, r)| format!("eps={e}:{r:.4}"))
                .collect::<Vec<_>>(),
            monotone,
            last
        ),
    );
}

/// Criterion 6: S corner within 0.05 of 1 - eps at eps in {0.2, 0.1}.
#[test]
fn criterion_6_s_asymptote() {
    for eps in [0.2, 0.1] {
        let sol = solve_s(&Grid2D::new(eps, 512).unwrap()).unwrap();
        let err = (sol.corner_value - asymptote_s(eps)).abs();
        banner(
            &format!("C6(eps={eps})"),
            err <= 0.05,
            &format!(
                "S corner {:.4} vs 1-eps={:.4}, |err|={:.4} <= 0.05",
                sol.corner_value,
                asymptote_s(eps),
                err
            ),
        );
    }
}

/// Criterion 7: separation-of-variables consistency, both products, at
/// eps in {0.2, 0.15}, relative error < 5%.
#[test]
fn criterion_7_product_check() {
    for (eps, n) in [(0.2, 400usize), (0.15, 512)] {
        let rep = product_check(&Grid2D::new(eps, n).unwrap()).unwrap();
        banner(
            &format!("C7(eps={eps})"),
            rep.t_rel_err < 0.05 && rep.s_rel_err < 0.05,
            &format!(
                "T-product rel err {:.2e}, S-product rel err {:.2e} (< 0.05)",
                rep.t_rel_err, rep.s_rel_err
            ),
        );
    }
}

/// Criterion 8: fitted tail rate of the slow survival curve at eps = 0.2
/// within 10% of (1/eps) e^{-1/eps} = 5 e^{-5}.
#[test]
fn criterion_8_survival_tail_rate() {
    let eps = 0.2;
    let asym_rate = (1.0 / eps) * (-1.0f64 / eps).exp();
    let t: Vec<f64> = (0..40).map(|k| 30.0 + 3.5 * k as f64).collect();
    let g = survival_curve(&SurvivalParams::new(eps, -1.0, 1024), &t).unwrap();
    let rate = fit_exp_rate(&t, &g).unwrap();
    let rel = (rate - asym_rate).abs() / asym_rate;
    banner(
        "C8",
        rel <= 0.10,
        &format!(
            "fitted rate {:.6} vs 5e^-5={:.6}, rel err {:.4} <= 0.10",
            rate, asym_rate, rel
        ),
    );
}

/// Criterion 9: three-way cross-validation at h in {4, 5, 6}, N=2 —
/// MC gamma-hat, FD corner/eps, and the closed asymptote e^h/2 agree
/// pairwise within max(3 SE, 10%).
#[test]
fn criterion_9_three_way_cross_validation() {
    for (h, reps, n_cells) in [(4.0, 15_000usize, 1024usize), (5.0, 8_000, 1024), (6.0, 4_000, 1024)]
    {
        let params = McCalibParams {
            replications: reps,
            dt: 1e-3,
            seed: 109,
            rule: CrossingRule::ContinuityCorrected,
            ..Default::default()
        };
        let (mc, mc_se) =
            false_alarm_energy_at(h, 2, &DriftModel::constant(1.0), &params).unwrap();
        let eps = 1.0 / h;
        let fd = solve_t(&Grid2D::new(eps, n_cells).unwrap())
            .unwrap()
            .unscaled_corner();
        let asym = h.exp() / 2.0;
        let within = |a: f64, b: f64, se: f64| {
            (a - b).abs() <= (3.0 * se).max(0.10 * a.abs().max(b.abs()))
        };
        let ok =
            within(mc, fd, mc_se) && within(mc, asym, mc_se) && within(fd, asym, 0.0);
        banner(
            &format!("C9(h={h})"),
            ok,
            &format!(
                "mc={:.3} (se {:.3}) fd={:.3} asym={:.3}; mc/fd {:+.2}% mc/asym {:+.2}% fd/asym {:+.2}%",
                mc,
                mc_se,
                fd,
                asym,
                100.0 * (mc - fd) / fd,
                100.0 * (mc - asym) / asym,
                100.0 * (fd - asym) / asym
            ),
        );
    }
}

/// Criterion 10: equalizer property at N in {2, 3} (pairwise delays within
/// 3 pooled SE) and power of the asymmetric-threshold diagnostic.
#[test]
fn criterion_10_equalizer() {
    for n in [2usize, 3] {
        let s = scenario(n, vec![f64::INFINITY; n], 4.0, 1e-3, 20_000, 110 + n as u64, 0);
        let rep = equalizer_test(&s).unwrap();
        let ok = rep
            .pairs
            .iter()
            .all(|p| p.diff.abs() < 3.0 * p.pooled_se);
        banner(
            &format!("C10(N={n})"),
            ok,
            &format!(
                "max |delay diff| {:.4}, worst pair z={:.2}",
                rep.max_abs_diff,
                rep.pairs
                    .iter()
                    .map(|p| p.diff.abs() / p.pooled_se)
                    .fold(0.0, f64::max)
            ),
        );
    }

    // Injected asymmetry must be detected: charts at (3.6, 4.4) make the
    // change-in-sensor-1 and change-in-sensor-2 delays genuinely different.
    let mut arm1 = scenario(2, vec![0.0, f64::INFINITY], 4.0, 1e-3, 20_000, 113, 5);
    arm1.threshold_overrides = vec![3.6, 4.4];
    let mut arm2 = scenario(2, vec![f64::INFINITY, 0.0], 4.0, 1e-3, 20_000, 113, 6);
    arm2.threshold_overrides = vec![3.6, 4.4];
    let d1 = estimate_delay(&arm1).unwrap();
    let d2 = estimate_delay(&arm2).unwrap();
    let pooled = (d1.std_error.powi(2) + d2.std_error.powi(2)).sqrt();
    let z = (d1.mean - d2.mean).abs() / pooled;
    banner(
        "C10(power)",
        z > 3.0,
        &format!(
            "asymmetric thresholds: delays {:.4} vs {:.4}, z={:.1} > 3",
            d1.mean, d2.mean, z
        ),
    );
}

/// Criterion 11: structural invariants, no Monte Carlo tolerance involved.
#[test]
fn criterion_11_structural_invariants() {
    let model = DriftModel::constant(0.8);
    let mut all_ok = true;

    // y >= 0 at every step on 1e3 random paths, multichart = min of
    // single-chart stops, and stop time monotone in h, pathwise.
    for r in 0..1000u64 {
        let config = SimConfig {
            n_sensors: 2,
            dt: 0.01,
            horizon: 60.0,
            change_points: vec![0.0, 30.0],
            seed: 1111,
        };
        let paths = simulate_paths_stream(&config, &model, r).unwrap();

        let mut per_sensor_stops = [None; 2];
        for (sensor, stop_slot) in per_sensor_stops.iter_mut().enumerate() {
            let mut state = ncusum_core::detector::CusumState::zero();
            for k in 0..paths.n_steps() {
                let alpha = model.drift(sensor, paths.state_at(k));
                state = ncusum_core::detector::cusum_step(
                    state,
                    paths.dz_at(k, sensor),
                    alpha,
                    paths.dt,
                );
                if state.y < 0.0 {
                    all_ok = false;
                }
                if stop_slot.is_none() && state.y >= 2.5 {
                    *stop_slot = Some(paths.times[k + 1]);
                }
            }
        }
        let multi = run_multichart(&paths, &model, 2.5).unwrap();
        let min_single = per_sensor_stops.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        if multi.stopped {
            if multi.stop_time != min_single {
                all_ok = false;
            }
        } else if min_single.is_finite() {
            all_ok = false;
        }

        let mut last_stop = 0.0;
        for h in [1.0, 2.0, 3.0] {
            let out = run_multichart(&paths, &model, h).unwrap();
            let t = if out.stopped { out.stop_time } else { f64::INFINITY };
            if t < last_stop {
                all_ok = false;
            }
            last_stop = t;
        }
    }
    banner(
        "C11a",
        all_ok,
        "y >= 0, multichart = min of single charts, stop monotone in h (1000 paths)",
    );

    // Determinism: byte-identical repeated runs.
    let config = SimConfig {
        n_sensors: 3,
        dt: 0.005,
        horizon: 5.0,
        change_points: vec![0.0, 1.0, f64::INFINITY],
        seed: 2222,
    };
    let a = simulate_paths(&config, &model).unwrap();
    let b = simulate_paths(&config, &model).unwrap();
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    let s1 = scenario(1, vec![0.0], 2.0, 1e-3, 2000, 115, 0);
    let e1: Estimate = estimate_delay(&s1).unwrap();
    let e2: Estimate = estimate_delay(&s1).unwrap();
    banner(
        "C11b",
        csv_a == csv_b && e1 == e2,
        "repeated runs byte-identical (paths CSV and estimates)",
    );
}
