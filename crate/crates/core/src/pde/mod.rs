//! Finite-difference verification of the mean-exit-energy asymptotics.
//!
//! The rescaled problems live on the unit square with a boundary-layer
//! parameter `epsilon = 1/h`: `T` solves
//! `eps T_xx + eps T_yy - T_x - T_y = -1` (no sensor changed; both charts
//! drift toward the reflecting corner) and `S` flips the x-advection
//! (one sensor changed and climbing). Dirichlet zeros sit on x = 1 and
//! y = 1, reflecting walls on the axes. The corner values T(0,0) and
//! S(0,0) are compared against the closed asymptotes `eps e^{1/eps} / N`
//! and `1 - eps`, and independently against time-integrated products of
//! 1-D survival curves.

mod elliptic;
mod operator;
mod survival;

pub use elliptic::solve_advection_diffusion;
pub use operator::{advection_diffusion_1d, solve_shifted, Tridiag, TridiagEigen};
pub use survival::{survival_curve, SurvivalParams};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::fit_exp_rate;

/// Rescaled unit-square discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    /// Boundary-layer parameter, `1/h`.
    pub epsilon: f64,
    /// Cells per axis; spacing is `1/n_cells`.
    pub n_cells: usize,
}

impl Grid2D {
    pub fn new(epsilon: f64, n_cells: usize) -> Result<Self> {
        let g = Grid2D { epsilon, n_cells };
        g.validate()?;
        Ok(g)
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if self.n_cells < 32 {
            return Err(Error::InvalidConfig(format!(
                "n_cells must be >= 32, got {}",
                self.n_cells
            )));
        }
        if self.spacing() > self.epsilon / 5.0 {
            return Err(Error::InvalidConfig(format!(
                "spacing {} does not resolve the boundary layer (need <= eps/5 = {})",
                self.spacing(),
                self.epsilon / 5.0
            )));
        }
        Ok(())
    }
}

/// Which boundary-value problem a solution answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeProblem {
    /// `T`: both charts under the no-change measure.
    MeanExitNoChange,
    /// `S`: the x-chart's sensor changed at 0.
    MeanExitOneChanged,
}

impl PdeProblem {
    pub fn label(&self) -> &'static str {
        match self {
            PdeProblem::MeanExitNoChange => "T",
            PdeProblem::MeanExitOneChanged => "S",
        }
    }
}

/// Solved field with its quantities of interest.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub epsilon: f64,
    pub n_cells: usize,
    /// Value at the origin (both charts at zero): the rescaled quantity of
    /// interest.
    pub corner_value: f64,
    /// Independently assembled five-point-stencil residual of the solve.
    pub residual_norm: f64,
    pub problem: PdeProblem,
    /// Nodal values including the zero Dirichlet boundary row/column,
    /// `(n_cells + 1) x (n_cells + 1)`; entry `(i, j)` is node `(x_i, y_j)`.
    pub field: DMatrix<f64>,
}

impl PdeSolution {
    /// Mean exit energy in original (unrescaled) units: `corner / epsilon`,
    /// the quantity the false-alarm constraint pins to gamma.
    pub fn unscaled_corner(&self) -> f64 {
        self.corner_value / self.epsilon
    }

    /// Dumps the field as a CSV grid `x,y,value`.
    pub fn write_field_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y,value")?;
        let n = self.n_cells;
        let d = self.spacing();
        for i in 0..=n {
            for j in 0..=n {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e}",
                    i as f64 * d,
                    j as f64 * d,
                    self.field[(i, j)]
                )?;
            }
        }
        Ok(())
    }

    fn spacing(&self) -> f64 {
        1.0 / self.n_cells as f64
    }
}

/// Mean exit energy under the no-change measure: both advection terms point
/// at the reflecting corner.
pub fn solve_t(grid: &Grid2D) -> Result<PdeSolution> {
    grid.validate()?;
    solve_advection_diffusion(grid, -1.0, -1.0, PdeProblem::MeanExitNoChange)
}

/// Mean exit energy with the x-sensor changed at zero: its chart climbs, so
/// the x-advection flips sign.
pub fn solve_s(grid: &Grid2D) -> Result<PdeSolution> {
    grid.validate()?;
    solve_advection_diffusion(grid, 1.0, -1.0, PdeProblem::MeanExitOneChanged)
}

/// Closed asymptote for `T(0,...,0)` with `n_sensors` charts.
pub fn asymptote_t(epsilon: f64, n_sensors: usize) -> f64 {
    epsilon * (1.0 / epsilon).exp() / n_sensors as f64
}

/// Closed asymptote for `S(0,...,0)`.
pub fn asymptote_s(epsilon: f64) -> f64 {
    1.0 - epsilon
}

/// Outcome of the separation-of-variables consistency check at one epsilon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductCheck {
    pub epsilon: f64,
    pub n_cells: usize,
    /// Time integral of `G-(0,t)^2` (tail-corrected).
    pub t_product_integral: f64,
    pub t_corner: f64,
    pub t_rel_err: f64,
    /// Time integral of `G+(0,t) G-(0,t)` (tail-corrected).
    pub s_product_integral: f64,
    pub s_corner: f64,
    pub s_rel_err: f64,
    /// Upper end of the time grid used for the slow product.
    pub t_max: f64,
    /// True when epsilon is too large for the asymptotic formulas to mean
    /// anything; the comparison is still reported.
    pub outside_asymptotic_regime: bool,
}

/// Trapezoid integral plus an exponential-tail remainder fitted to the last
/// decade of samples.
fn integrate_with_tail(t: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (t[i] - t[i - 1]);
    }
    let tail_start = t.len() * 85 / 100;
    let tail_t = &t[tail_start..];
    let tail_v = &values[tail_start..];
    if let Some(rate) = fit_exp_rate(tail_t, tail_v) {
        let last = *values.last().unwrap();
        if rate > 0.0 && last > 0.0 {
            acc += last / rate;
        }
    }
    acc
}

/// Verifies that the 2-D corner values factor into time integrals of 1-D
/// survival products: `T(0,0) = integral G-(0,t)^2 dt` and
/// `S(0,0) = integral G+(0,t) G-(0,t) dt`. The elliptic and parabolic sides
/// are computed by different discretizations (tensor solve vs adaptive time
/// stepping), so agreement is a genuine cross-check.
pub fn product_check(grid: &Grid2D) -> Result<ProductCheck> {
    grid.validate()?;
    let eps = grid.epsilon;
    let n = grid.n_cells;

    // A priori slow decay rate sets the horizon for the T-product.
    let slow_rate = (1.0 / eps) * (-1.0 / eps).exp();
    let t_max = 4.5 / slow_rate;
    let points = 6000;
    let t_grid: Vec<f64> = (0..=points)
        .map(|k| t_max * k as f64 / points as f64)
        .collect();

    let g_minus = survival_curve(&SurvivalParams::new(eps, -1.0, n), &t_grid)?;
    let t_product: Vec<f64> = g_minus.iter().map(|g| g * g).collect();
    let t_integral = integrate_with_tail(&t_grid, &t_product);

    // The + curve collapses just after t = 1; a short horizon suffices, with
    // the - curve evaluated on the same grid.
    let s_t_max = 4.0f64.min(t_max);
    let s_points = 4000;
    let s_grid: Vec<f64> = (0..=s_points)
        .map(|k| s_t_max * k as f64 / s_points as f64)
        .collect();
    let g_plus = survival_curve(&SurvivalParams::new(eps, 1.0, n), &s_grid)?;
    let g_minus_short = survival_curve(&SurvivalParams::new(eps, -1.0, n), &s_grid)?;
    let s_product: Vec<f64> = g_plus
        .iter()
        .zip(&g_minus_short)
        .map(|(p, m)| p * m)
        .collect();
    let s_integral = integrate_with_tail(&s_grid, &s_product);

    let t_corner = solve_t(grid)?.corner_value;
    let s_corner = solve_s(grid)?.corner_value;

    Ok(ProductCheck {
        epsilon: eps,
        n_cells: n,
        t_product_integral: t_integral,
        t_corner,
        t_rel_err: (t_integral - t_corner).abs() / t_corner.abs(),
        s_product_integral: s_integral,
        s_corner,
        s_rel_err: (s_integral - s_corner).abs() / s_corner.abs(),
        t_max,
        outside_asymptotic_regime: eps > 0.3,
    })
}

/// One row of an epsilon sweep, ready for CSV emission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub problem: String,
    pub epsilon: f64,
    pub n_cells: usize,
    pub corner: f64,
    pub asymptote: f64,
    pub rel_err: f64,
}

/// Solves one problem over a list of epsilons and reports corner values
/// against the closed asymptote (the T asymptote divides by `n_sensors`).
/// `resolve` maps epsilon to a grid size.
pub fn sweep(
    problem: PdeProblem,
    epsilons: &[f64],
    n_sensors: usize,
    resolve: impl Fn(f64) -> usize,
) -> Result<Vec<SweepRow>> {
    epsilons
        .iter()
        .map(|&eps| {
            let grid = Grid2D::new(eps, resolve(eps))?;
            let sol = match problem {
                PdeProblem::MeanExitNoChange => solve_t(&grid)?,
                PdeProblem::MeanExitOneChanged => solve_s(&grid)?,
            };
            let asym = match problem {
                PdeProblem::MeanExitNoChange => asymptote_t(eps, n_sensors),
                PdeProblem::MeanExitOneChanged => asymptote_s(eps),
            };
            Ok(SweepRow {
                problem: problem.label().to_string(),
                epsilon: eps,
                n_cells: grid.n_cells,
                corner: sol.corner_value,
                asymptote: asym,
                rel_err: (sol.corner_value - asym).abs() / asym.abs(),
            })
        })
        .collect()
}
