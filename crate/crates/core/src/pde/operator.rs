//! One-dimensional upwind advection-diffusion operators on [0, 1] with a
//! reflecting (Neumann) wall at 0 and an absorbing (Dirichlet) wall at 1.
//!
//! The operator is `eps d^2/dx^2 + b d/dx` discretized with second-order
//! centered diffusion and first-order upwind advection, which keeps the
//! matrix an (negated) M-matrix for any cell Peclet number. The Neumann wall
//! uses a ghost node with a centered (second-order) derivative. Unknowns are
//! the nodes i = 0..n-1 at spacing 1/n; node n carries the Dirichlet zero.
//!
//! Both off-diagonals stay positive, so the matrix is similar to a symmetric
//! tridiagonal one by a diagonal scaling. That similarity powers the exact
//! tensor-product solver for the 2-D problems and gives real, negative
//! spectra for the survival semigroups.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tridiagonal operator rows: `sub[i] u[i-1] + diag[i] u[i] + super[i] u[i+1]`.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `out = A u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * u[i];
            if i > 0 {
                v += self.sub[i] * u[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * u[i + 1];
            }
            out[i] = v;
        }
    }
}

/// Builds the interior operator for drift `b in {-1, +1}` (any finite `b`
/// works) at `n` unknowns, spacing `1/n`.
pub fn advection_diffusion_1d(epsilon: f64, drift: f64, n: usize) -> Tridiag {
    let delta = 1.0 / n as f64;
    let diff = epsilon / (delta * delta);
    let up = drift.max(0.0) / delta; // coupling toward i+1
    let down = (-drift).max(0.0) / delta; // coupling toward i-1
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for i in 0..n {
        sub[i] = diff + down;
        sup[i] = diff + up;
        diag[i] = -(2.0 * diff + up + down);
    }
    // Reflecting wall: ghost node u[-1] = u[1] folds the down-coupling onto
    // the up neighbor.
    sub[0] = 0.0;
    sup[0] = 2.0 * diff + up + down;
    // Absorbing wall: u[n] = 0, so row n-1 simply loses its up-coupling.
    sup[n - 1] = 0.0;
    Tridiag { sub, diag, sup }
}

/// Thomas solve of `(I - c A) x = rhs` for tridiagonal `A`; `c` may be zero.
pub fn solve_shifted(a: &Tridiag, c: f64, rhs: &[f64], x: &mut [f64]) -> Result<()> {
    let n = a.len();
    debug_assert_eq!(rhs.len(), n);
    let mut diag: Vec<f64> = (0..n).map(|i| 1.0 - c * a.diag[i]).collect();
    let mut work = rhs.to_vec();
    for i in 1..n {
        let sub = -c * a.sub[i];
        let piv = diag[i - 1];
        if piv.abs() < 1e-300 {
            return Err(Error::SolveFailed("tridiagonal pivot underflow".into()));
        }
        let w = sub / piv;
        diag[i] -= w * (-c * a.sup[i - 1]);
        work[i] -= w * work[i - 1];
    }
    if diag[n - 1].abs() < 1e-300 {
        return Err(Error::SolveFailed("tridiagonal pivot underflow".into()));
    }
    x[n - 1] = work[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (work[i] - (-c * a.sup[i]) * x[i + 1]) / diag[i];
    }
    Ok(())
}

/// Eigendecomposition of a positively-coupled tridiagonal operator through
/// its symmetrizing diagonal scaling: `A = D Q L Q^T D^{-1}` with orthonormal
/// `Q` and real eigenvalues `L`.
pub struct TridiagEigen {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors of the symmetrized operator.
    pub q: DMatrix<f64>,
    /// Symmetrizing scaling d (A = D S D^{-1}).
    pub d: Vec<f64>,
}

impl TridiagEigen {
    pub fn new(a: &Tridiag) -> Result<Self> {
        let n = a.len();
        let mut d = vec![1.0; n];
        for i in 0..n - 1 {
            let prod = a.sub[i + 1] * a.sup[i];
            if prod <= 0.0 {
                return Err(Error::SolveFailed(
                    "operator is not symmetrizable (non-positive coupling)".into(),
                ));
            }
            d[i + 1] = d[i] * (a.sub[i + 1] / a.sup[i]).sqrt();
            if !d[i + 1].is_finite() || d[i + 1] == 0.0 {
                return Err(Error::SolveFailed(
                    "symmetrizing scaling overflowed; epsilon too small for this grid".into(),
                ));
            }
        }
        let mut sym = DMatrix::zeros(n, n);
        for i in 0..n {
            sym[(i, i)] = a.diag[i];
            if i + 1 < n {
                let off = (a.sub[i + 1] * a.sup[i]).sqrt();
                sym[(i, i + 1)] = off;
                sym[(i + 1, i)] = off;
            }
        }
        let eig = sym.symmetric_eigen();
        Ok(TridiagEigen {
            eigenvalues: eig.eigenvalues,
            q: eig.eigenvectors,
            d,
        })
    }

    /// Largest (slowest-decaying) eigenvalue; negative for these operators.
    pub fn slowest_rate(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}
