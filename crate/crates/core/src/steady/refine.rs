//! Re-solve in a cavity basis displaced by the coarse coherent amplitude.

use super::{solve_steady, SolverOptions, SteadyOutcome};
use crate::model::{build_operators, SystemOperators, SystemParams};
use crate::{Error, Result};

/// Trailing reduced population required of the coarse solution.
pub const COARSE_TAIL_TOL: f64 = 1e-5;
/// Relative observable mismatch above which the refinement is rejected.
pub const ACCEPT_TOL: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct Refinement {
    pub params: SystemParams,
    pub outcome: SteadyOutcome,
    pub accepted: bool,
    /// Largest relative change of n̄ and ⟨x²⟩ against the coarse run.
    pub mismatch: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn refine_with_displacement(
    coarse_ops: &SystemOperators,
    coarse: &SteadyOutcome,
    solver: &SolverOptions,
    n_cav: usize,
    dt: f64,
) -> Result<Refinement> {
    let (cav_tail, mot_tail) = coarse.state.trailing_populations();
    if cav_tail > COARSE_TAIL_TOL || mot_tail > COARSE_TAIL_TOL {
        return Err(Error::Configuration(format!(
            "coarse state not converged in the cutoffs: trailing populations {cav_tail:e} (cavity), {mot_tail:e} (motion)"
        )));
    }
    let alpha = coarse.state.expect_complex(coarse_ops.a.mat.as_ref());
    let mut params = coarse_ops.params.clone();
    params.displacement = alpha;
    params.n_cav = n_cav;
    params.dt = dt;
    let ops = build_operators(&params)?;
    let outcome = solve_steady(&ops, solver, None)?;

    let n_coarse = coarse.state.expect(coarse_ops.number.mat.as_ref());
    let n_fine = outcome.state.expect(ops.number.mat.as_ref());
    let x_coarse = coarse.state.expect(coarse_ops.x2.mat.as_ref());
    let x_fine = outcome.state.expect(ops.x2.mat.as_ref());
    let mismatch = rel(n_coarse, n_fine).max(rel(x_coarse, x_fine));
    if mismatch > ACCEPT_TOL {
        log::warn!("displaced refinement rejected: observables changed by {:.1}%", 100.0 * mismatch);
        return Ok(Refinement {
            params: coarse_ops.params.clone(),
            outcome: coarse.clone(),
            accepted: false,
            mismatch,
        });
    }
    Ok(Refinement { params, outcome, accepted: true, mismatch })
}
