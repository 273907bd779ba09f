//! Stationary states and the low-lying Liouvillian spectrum.
//!
//! Two solvers share one contract. The map solver powers the Euler-integrated
//! dynamical map with Arnoldi; it is exact in its spectral content and is the
//! reference for small cutoffs. The Krylov solver finds the null vector of L
//! by preconditioned GMRES and gets the gap from shift-invert Arnoldi, which
//! is what makes scans at desk-scale cutoffs affordable.

pub mod arnoldi;
pub mod dense;
pub mod krylov;
pub mod map;
pub mod refine;
pub mod state;

pub use arnoldi::{arnoldi, arnoldi_dominant, ArnoldiOptions, RitzPairs, SpectralAction, SpectrumResult};
pub use dense::{dense_oracle, liouvillian_matrix, ORACLE_MAX_DIM};
pub use krylov::{gmres, steady_state_krylov, KrylovOptions, KrylovSteadyState, PairPreconditioner, ShiftInvert};
pub use map::{euler_steps, propagate_map, EulerMap};
pub use refine::{refine_with_displacement, Refinement};
pub use state::DensityMatrix;

use crate::model::SystemOperators;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Map,
    Krylov,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Map => "map",
            SolverKind::Krylov => "krylov",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "map" => Ok(SolverKind::Map),
            "krylov" => Ok(SolverKind::Krylov),
            other => Err(format!("unknown solver `{other}` (expected map or krylov)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub arnoldi: ArnoldiOptions,
    pub krylov: KrylovOptions,
    /// Shift-invert spectrum in Krylov mode (the map solver always has it).
    pub compute_gap: bool,
    /// Shift σ/κ of the shift-invert action.
    pub gap_shift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Krylov,
            arnoldi: ArnoldiOptions::default(),
            krylov: KrylovOptions::default(),
            compute_gap: true,
            gap_shift: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyOutcome {
    pub state: DensityMatrix,
    /// |Re ν₁|/κ when a spectrum was computed.
    pub gap: Option<f64>,
    /// Largest relative Ritz residual, or ‖L ρ‖/‖ρ‖ without a spectrum.
    pub residual: f64,
    pub converged: bool,
    pub multistable: bool,
    pub note: Option<String>,
    pub spectrum: Option<SpectrumResult>,
}

fn outcome_from_spectrum(spec: SpectrumResult) -> SteadyOutcome {
    let multistable = spec.multistable;
    SteadyOutcome {
        state: spec.steady_state.clone(),
        gap: Some(spec.gap),
        residual: spec.max_residual(),
        converged: !multistable,
        multistable,
        note: multistable.then(|| "degenerate steady state".to_string()),
        spectrum: Some(spec),
    }
}

/// Steady state (and gap) at one parameter point. `warm` seeds the
/// iteration; it changes the path but not the converged answer.
pub fn solve_steady(
    ops: &SystemOperators,
    opts: &SolverOptions,
    warm: Option<&DensityMatrix>,
) -> Result<SteadyOutcome> {
    let p = &ops.params;
    let warm = warm.filter(|w| w.n_cav() == p.n_cav && w.n_mot() == p.n_mot);
    match opts.kind {
        SolverKind::Map => {
            let map = EulerMap::new(ops, p.t_map, p.dt)?;
            let vacuum = DensityMatrix::vacuum(p.n_cav, p.n_mot);
            let start = warm.unwrap_or(&vacuum);
            Ok(outcome_from_spectrum(arnoldi_dominant(&map, start, &opts.arnoldi, p.kappa)?))
        }
        SolverKind::Krylov => {
            let ks = steady_state_krylov(ops, &opts.krylov, warm)?;
            let mut out = SteadyOutcome {
                state: ks.state,
                gap: None,
                residual: ks.residual,
                converged: ks.converged,
                multistable: false,
                note: (!ks.converged).then(|| format!("GMRES stopped after {} iterations", ks.iterations)),
                spectrum: None,
            };
            if opts.compute_gap {
                let occupancy = out.state.expect(ops.number.mat.as_ref()).max(0.0);
                let action = ShiftInvert::new(ops, opts.gap_shift * p.kappa, occupancy, opts.krylov.clone())?;
                match arnoldi_dominant(&action, &out.state, &opts.arnoldi, p.kappa) {
                    Ok(spec) => {
                        out.gap = Some(spec.gap);
                        out.residual = out.residual.max(spec.max_residual());
                        if spec.multistable {
                            out.multistable = true;
                            out.converged = false;
                            out.note = Some("degenerate steady state".to_string());
                        }
                        out.spectrum = Some(spec);
                    }
                    Err(Error::NoConvergence { residuals, .. }) => {
                        out.residual = residuals.iter().copied().fold(out.residual, f64::max);
                        out.converged = false;
                        out.note = Some("gap eigenvalues did not converge".to_string());
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        }
    }
}
