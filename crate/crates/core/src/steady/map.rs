//! Short-time dynamical map Λ(t_map) = (I + dt·L)^N by explicit Euler steps.

use faer::{Mat, MatRef};

use super::arnoldi::SpectralAction;
use super::state::DensityMatrix;
use crate::linalg::{self, ONE};
use crate::model::{lindblad_apply_into, LindbladWorkspace, SystemOperators};
use crate::{Error, Result, C64};

pub const MAX_DT: f64 = 1e-3;

/// Number of Euler steps, checking that `t_map` is a multiple of `dt`.
pub fn euler_steps(t_map: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || dt > MAX_DT {
        return Err(Error::param("dt", format!("must lie in (0, {MAX_DT}], got {dt}")));
    }
    let n = (t_map / dt).round();
    if n < 1.0 || (n * dt - t_map).abs() > 1e-9 * t_map {
        return Err(Error::param("t_map", format!("{t_map} is not a positive multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Euler map as a linear action on D×D matrices.
pub struct EulerMap<'a> {
    ops: &'a SystemOperators,
    dt: f64,
    steps: usize,
    symmetrize: bool,
}

impl<'a> EulerMap<'a> {
    pub fn new(ops: &'a SystemOperators, t_map: f64, dt: f64) -> Result<Self> {
        Ok(Self { ops, dt, steps: euler_steps(t_map, dt)?, symmetrize: false })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_map(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Re-symmetrize ρ ← (ρ + ρ†)/2 after each step. This breaks complex
    /// linearity, so it is off for the Arnoldi action.
    pub fn with_symmetrization(mut self, on: bool) -> Self {
        self.symmetrize = on;
        self
    }

    pub fn propagate(&self, x: MatRef<'_, C64>) -> Result<Mat<C64>> {
        let d = self.ops.dim();
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: x.nrows() });
        }
        let mut cur = x.to_owned();
        let mut deriv = Mat::zeros(d, d);
        let mut ws = LindbladWorkspace::new(d);
        for step in 0..self.steps {
            lindblad_apply_into(self.ops, cur.as_ref(), &mut deriv, &mut ws)?;
            for j in 0..d {
                for i in 0..d {
                    cur[(i, j)] += deriv[(i, j)] * self.dt;
                }
            }
            if self.symmetrize {
                for j in 0..d {
                    for i in 0..j {
                        let s = (cur[(i, j)] + cur[(j, i)].conj()) * 0.5;
                        cur[(i, j)] = s;
                        cur[(j, i)] = s.conj();
                    }
                    cur[(j, j)].im = 0.0;
                }
            }
            if (step % 64 == 63 || step + 1 == self.steps) && !linalg::max_abs(cur.as_ref()).is_finite() {
                return Err(Error::StepSize { step: step + 1, dt: self.dt });
            }
        }
        Ok(cur)
    }
}

impl SpectralAction for EulerMap<'_> {
    fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn apply(&self, x: MatRef<'_, C64>) -> Result<Mat<C64>> {
        self.propagate(x)
    }

    /// Exact inversion of μ = (1 + dt·ν)^N on the principal branch.
    fn to_liouvillian(&self, mu: C64) -> C64 {
        (mu.powf(1.0 / self.steps as f64) - ONE) / self.dt
    }

    fn degeneracy_tol(&self) -> f64 {
        1e-6 / self.t_map()
    }
}

/// Λ(t_map)ρ₀ with per-step Hermitian re-symmetrization.
pub fn propagate_map(ops: &SystemOperators, rho0: &DensityMatrix, t_map: f64, dt: f64) -> Result<DensityMatrix> {
    let map = EulerMap::new(ops, t_map, dt)?.with_symmetrization(true);
    let out = map.propagate(rho0.as_ref())?;
    DensityMatrix::new(out, rho0.n_cav(), rho0.n_mot())
}
