//! Method-of-lines integration of the 1-D survival problems
//! `dG/dt = eps G_xx + b G_x`, reflecting at 0 and absorbing at 1, from
//! `G(., 0) = 1`.
//!
//! Space uses the shared upwind operator; time uses an adaptive
//! trapezoidal scheme with step doubling (two half steps against one full
//! step) and a short implicit-Euler start to damp the absorbing-wall
//! discontinuity. Every requested output time is hit exactly.

use super::operator::{advection_diffusion_1d, solve_shifted, Tridiag};
use crate::error::{Error, Result};

/// Controls for [`survival_curve`].
#[derive(Debug, Clone, Copy)]
pub struct SurvivalParams {
    pub epsilon: f64,
    /// Drift sign: -1 pushes toward the reflecting wall (slow escape),
    /// +1 toward the absorbing wall.
    pub drift_sign: f64,
    pub n_cells: usize,
    /// Relative local-error tolerance of the adaptive stepper.
    pub rtol: f64,
}

impl SurvivalParams {
    pub fn new(epsilon: f64, drift_sign: f64, n_cells: usize) -> Self {
        SurvivalParams {
            epsilon,
            drift_sign,
            n_cells,
            rtol: 1e-8,
        }
    }
}

struct Stepper<'a> {
    a: &'a Tridiag,
    scratch_rhs: Vec<f64>,
    scratch_au: Vec<f64>,
    half: Vec<f64>,
    full: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(a: &'a Tridiag) -> Self {
        let n = a.len();
        Stepper {
            a,
            scratch_rhs: vec![0.0; n],
            scratch_au: vec![0.0; n],
            half: vec![0.0; n],
            full: vec![0.0; n],
        }
    }

    fn trapezoid(&mut self, u: &[f64], k: f64, out: &mut [f64]) -> Result<()> {
        self.a.apply(u, &mut self.scratch_au);
        for (rhs, (ui, au)) in self
            .scratch_rhs
            .iter_mut()
            .zip(u.iter().zip(&self.scratch_au))
        {
            *rhs = ui + 0.5 * k * au;
        }
        solve_shifted(self.a, 0.5 * k, &self.scratch_rhs, out)
    }

    fn implicit_euler(&mut self, u: &[f64], k: f64, out: &mut [f64]) -> Result<()> {
        solve_shifted(self.a, k, u, out)
    }

    /// One accepted adaptive step from `u`; returns the step actually taken
    /// and the suggested next step. `u` is updated in place.
    fn advance(&mut self, u: &mut [f64], k_try: f64, rtol: f64) -> Result<(f64, f64)> {
        let mut k = k_try;
        let mut full = std::mem::take(&mut self.full);
        let mut half = std::mem::take(&mut self.half);
        let mut mid = vec![0.0; u.len()];
        for _ in 0..60 {
            self.trapezoid(u, k, &mut full)?;
            self.trapezoid(u, 0.5 * k, &mut mid)?;
            self.trapezoid(&mid, 0.5 * k, &mut half)?;
            // Error in units of the tolerance.
            let mut err: f64 = 0.0;
            for i in 0..u.len() {
                let scale = 1e-12 + rtol * half[i].abs().max(1.0);
                err = err.max((half[i] - full[i]).abs() / scale);
            }
            if err <= 1.0 {
                // The two-half-step solution is kept.
                u.copy_from_slice(&half);
                self.full = full;
                self.half = half;
                let grow = if err > 0.0 {
                    0.9 * err.powf(-1.0 / 3.0)
                } else {
                    2.0
                };
                return Ok((k, k * grow.clamp(0.3, 2.0)));
            }
            k *= (0.9 * (1.0 / err).powf(1.0 / 3.0)).clamp(0.2, 0.8);
            if k < 1e-14 {
                return Err(Error::SolveFailed(
                    "survival stepper underflowed the time step".into(),
                ));
            }
        }
        Err(Error::SolveFailed(
            "survival stepper failed to satisfy the tolerance".into(),
        ))
    }
}

/// Integrates the survival problem and returns `G(0, t)` at the requested
/// times (which must be nondecreasing; 0 is allowed and yields 1).
pub fn survival_curve(params: &SurvivalParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    if params.n_cells < 4 {
        return Err(Error::InvalidConfig("survival grid needs >= 4 cells".into()));
    }
    if !params.epsilon.is_finite() || params.epsilon <= 0.0 || params.epsilon >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in (0,1), got {}",
            params.epsilon
        )));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidConfig(
            "t_grid must be nondecreasing and nonnegative".into(),
        ));
    }
    let n = params.n_cells;
    let a = advection_diffusion_1d(params.epsilon, params.drift_sign, n);
    let mut stepper = Stepper::new(&a);
    let mut u = vec![1.0; n];
    let mut t = 0.0;

    // Damp the t = 0 corner discontinuity with a few stiff implicit-Euler
    // steps before handing over to the trapezoidal scheme.
    let delta = 1.0 / n as f64;
    let mut k = 0.05 * delta * delta / params.epsilon;
    for _ in 0..4 {
        let mut next = vec![0.0; n];
        stepper.implicit_euler(&u, k, &mut next)?;
        u = next;
        t += k;
    }

    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        while t < target {
            let remaining = target - t;
            let step = k.min(remaining);
            let (taken, next_k) = stepper.advance(&mut u, step, params.rtol)?;
            t += taken;
            // Keep the adaptive suggestion unless we clipped to the target.
            if step >= k {
                k = next_k;
            } else {
                k = k.max(next_k);
            }
        }
        out.push(if target == 0.0 { 1.0 } else { u[0] });
    }
    Ok(out)
}
