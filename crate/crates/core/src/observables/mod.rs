//! Steady-state observables: moments, entropies, entanglement and
//! phase-space measures.

pub mod phase_space;
pub mod projection;

pub use phase_space::{
    axes_with_floor, default_axes, gaussian_moments, husimi, non_gaussianity, wehrl_entropy, Axis, HusimiGrid,
    MomentData, NonGaussianity,
};
pub use projection::{positive_axis_operator, project_positive};

use faer::{Mat, MatRef};

use crate::hilbert;
use crate::linalg::{self, ZERO};
use crate::model::SystemOperators;
use crate::steady::DensityMatrix;
use crate::{Result, C64};

/// Eigenvalues at or below this are dropped from entropy sums.
pub const ENTROPY_CLIP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasicMeans {
    pub n_photon: f64,
    /// ⟨Δ_eff⟩/U₀
    pub delta_eff: f64,
    /// ⟨x²⟩/x_eq²
    pub x2: f64,
    /// √(⟨x⁴⟩ − ⟨x²⟩²)/x_eq²
    pub x2_dispersion: f64,
    /// ⟨p²⟩/2
    pub kinetic: f64,
}

pub fn basic_means(rho: &DensityMatrix, ops: &SystemOperators) -> BasicMeans {
    let p = &ops.params;
    let xeq2 = p.x_eq * p.x_eq;
    let x2 = rho.expect(ops.x2.mat.as_ref());
    let x4 = rho.expect(ops.x4.mat.as_ref());
    BasicMeans {
        n_photon: rho.expect(ops.number.mat.as_ref()),
        delta_eff: rho.expect(ops.delta_eff.mat.as_ref()) / p.u0(),
        x2: x2 / xeq2,
        x2_dispersion: (x4 - x2 * x2).max(0.0).sqrt() / xeq2,
        kinetic: 0.5 * rho.expect(ops.p2.mat.as_ref()),
    }
}

/// −Σ λ ln λ over eigenvalues above [`ENTROPY_CLIP`].
pub fn von_neumann_entropy(rho: MatRef<'_, C64>) -> Result<f64> {
    let vals = linalg::hermitian_eigenvalues(rho)?;
    Ok(-vals.iter().filter(|&&l| l > ENTROPY_CLIP).map(|&l| l * l.ln()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entropies {
    pub total: f64,
    pub cavity: f64,
    pub motion: f64,
}

pub fn entropies(rho: &DensityMatrix) -> Result<Entropies> {
    Ok(Entropies {
        total: von_neumann_entropy(rho.as_ref())?,
        cavity: von_neumann_entropy(rho.reduced_cavity().as_ref())?,
        motion: von_neumann_entropy(rho.reduced_motion().as_ref())?,
    })
}

fn negativity_from(pt: Mat<C64>) -> Result<f64> {
    let vals = linalg::hermitian_eigenvalues(pt.as_ref())?;
    let neg: f64 = vals.iter().filter(|&&l| l < 0.0).map(|l| l.abs()).sum();
    Ok((1.0 + 2.0 * neg).log2())
}

/// E_N = log₂(1 + 2Σ|λ⁻|) from the raw spectrum of ρ^{T_motion}.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    negativity_from(rho.partial_transpose_motion())
}

/// Same measure with the cavity transposed instead.
pub fn log_negativity_cavity_transposed(rho: &DensityMatrix) -> Result<f64> {
    negativity_from(rho.partial_transpose_cavity())
}

/// I = S(ρ_cav) + S(ρ_mot) − S(ρ), in nats.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    let s = entropies(rho)?;
    Ok(s.cavity + s.motion - s.total)
}

/// Single-mode state in a number basis whose ladder operator b relates to
/// the physical one by a = b + offset.
#[derive(Clone, Debug)]
pub struct SingleMode {
    pub rho: Mat<C64>,
    pub offset: C64,
}

impl SingleMode {
    pub fn new(rho: Mat<C64>) -> Self {
        Self { rho, offset: ZERO }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Reduced cavity state, displaced basis included.
    pub fn cavity(rho: &DensityMatrix, ops: &SystemOperators) -> Self {
        Self { rho: rho.reduced_cavity(), offset: ops.params.displacement }
    }

    /// Reduced motional state embedded in the full Fock space.
    pub fn motion(rho: &DensityMatrix) -> Result<Self> {
        let reduced = rho.reduced_motion();
        let proj = hilbert::even_projection(2 * reduced.nrows())?;
        Ok(Self::new(proj.embed(&reduced)?))
    }

    pub fn fock(n: usize, dim: usize) -> Self {
        Self::new(Mat::from_fn(dim, dim, |i, j| if i == n && j == n { linalg::ONE } else { ZERO }))
    }

    /// Truncated coherent state |β⟩ (renormalized).
    pub fn coherent(beta: C64, dim: usize) -> Self {
        let amps = phase_space::coherent_amplitudes(beta, dim);
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        Self::new(Mat::from_fn(dim, dim, |i, j| amps[i] * amps[j].conj() / norm))
    }

    /// Physical mean photon number ⟨a†a⟩.
    pub fn mean_number(&self) -> f64 {
        let d = self.dim();
        let mut nb = 0.0;
        let mut b = ZERO;
        for n in 0..d {
            nb += n as f64 * self.rho[(n, n)].re;
            if n + 1 < d {
                b += (n as f64 + 1.0).sqrt() * self.rho[(n + 1, n)];
            }
        }
        let a = self.offset;
        nb + 2.0 * (a.conj() * b).re + a.norm_sqr()
    }
}
