//! Physical parameters, the composite Hamiltonian and the Lindblad action.

use faer::{Mat, MatRef};

use crate::hilbert::{self, Basis, BasisSpec, LadderPolynomial, OperatorMatrix};
use crate::linalg::{self, SparseMatrix, I, ONE, ZERO};
use crate::{Error, Result, C64};

/// Trailing-population threshold for the motional cutoff check.
const CUTOFF_POPULATION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SystemParams {
    /// Dispersive cooperativity C = U₀/κ.
    pub coop: f64,
    /// Detuning parameter c = 1 − Δ_c/U₀.
    pub detuning: f64,
    /// Cavity half-linewidth.
    pub kappa: f64,
    pub x_eq: f64,
    /// η/√κ.
    pub eta_scaled: f64,
    pub n_cav: usize,
    /// Number of even motional Fock states.
    pub n_mot: usize,
    pub dt: f64,
    pub t_map: f64,
    /// Coherent amplitude of the displaced cavity basis (zero for plain Fock).
    pub displacement: C64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            coop: 2.0,
            detuning: 1.0,
            kappa: 1.0,
            x_eq: 5.0,
            eta_scaled: 1.0,
            n_cav: 4,
            n_mot: 4,
            dt: 1e-4,
            t_map: 0.05,
            displacement: ZERO,
        }
    }
}

impl SystemParams {
    pub fn u0(&self) -> f64 {
        self.coop * self.kappa
    }

    pub fn delta_c(&self) -> f64 {
        (1.0 - self.detuning) * self.u0()
    }

    pub fn eta(&self) -> f64 {
        self.eta_scaled * self.kappa.sqrt()
    }

    /// Dimensionless pump parameter γ = η²/(κ x_eq²).
    pub fn gamma(&self) -> f64 {
        self.eta_scaled * self.eta_scaled / (self.x_eq * self.x_eq)
    }

    /// Composite dimension N_cav · N_mot.
    pub fn dim(&self) -> usize {
        self.n_cav * self.n_mot
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.coop, self.detuning, self.kappa, self.x_eq, self.eta_scaled, self.dt, self.t_map];
        if finite.iter().any(|v| !v.is_finite()) || !self.displacement.is_finite() {
            return Err(Error::param("params", "all parameters must be finite"));
        }
        if self.coop <= 0.0 {
            return Err(Error::param("C", format!("must be positive, got {}", self.coop)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::param("kappa", format!("must be positive, got {}", self.kappa)));
        }
        if self.x_eq <= 0.0 {
            return Err(Error::param("x_eq", format!("must be positive, got {}", self.x_eq)));
        }
        if self.eta_scaled < 0.0 {
            return Err(Error::param("eta_scaled", format!("must be non-negative, got {}", self.eta_scaled)));
        }
        if self.dt <= 0.0 {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.t_map < self.dt {
            return Err(Error::param("t_map", format!("must be at least dt = {}, got {}", self.dt, self.t_map)));
        }
        if self.n_cav == 0 || self.n_mot == 0 {
            return Err(Error::param("cutoff", "N_cav and N_mot must be at least 1"));
        }
        Ok(())
    }

    pub fn cavity_basis(&self) -> Result<BasisSpec> {
        if self.displacement == ZERO {
            BasisSpec::cavity(self.n_cav)
        } else {
            BasisSpec::displaced(self.n_cav, self.displacement)
        }
    }

    pub fn motion_basis(&self) -> Result<BasisSpec> {
        BasisSpec::motional_even(self.n_mot)
    }
}

/// Operators of one parameter point. Composite operators act on
/// cavity ⊗ motion; the `cav_*`/`mot_*` fields act on a single factor.
#[derive(Clone, Debug)]
pub struct SystemOperators {
    pub params: SystemParams,
    pub h: OperatorMatrix,
    /// Physical cavity annihilation operator ⊗ I (jump operator is √(2κ) times this).
    pub a: OperatorMatrix,
    pub number: OperatorMatrix,
    pub x2: OperatorMatrix,
    pub x4: OperatorMatrix,
    pub p2: OperatorMatrix,
    pub profile: OperatorMatrix,
    /// Δ_eff(x) = Δ_c − U₀ f(x), as I ⊗ Δ_eff.
    pub delta_eff: OperatorMatrix,
    pub cav_a: OperatorMatrix,
    pub cav_number: OperatorMatrix,
    pub mot_x2: OperatorMatrix,
    pub mot_x4: OperatorMatrix,
    pub mot_p2: OperatorMatrix,
    pub mot_trap: OperatorMatrix,
    pub mot_profile: OperatorMatrix,
    h_eff: SparseMatrix,
    jump: SparseMatrix,
}

impl SystemOperators {
    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn basis(&self) -> Basis {
        self.h.basis
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa
    }

    /// H − iκ a†a in sparse form.
    pub fn h_eff_sparse(&self) -> &SparseMatrix {
        &self.h_eff
    }

    /// a ⊗ I in sparse form.
    pub fn jump_sparse(&self) -> &SparseMatrix {
        &self.jump
    }
}

fn cutoff_check(params: &SystemParams, trap: &OperatorMatrix) -> Result<()> {
    if params.n_mot < 2 {
        return Ok(());
    }
    let (_, vecs) = linalg::hermitian_eigen(trap.mat.as_ref())?;
    let tail = vecs[(params.n_mot - 1, 0)].norm_sqr();
    if tail > CUTOFF_POPULATION_TOL {
        return Err(Error::Configuration(format!(
            "motional cutoff N_mot = {} too small: trap ground state has trailing population {tail:e}",
            params.n_mot
        )));
    }
    Ok(())
}

pub fn build_operators(params: &SystemParams) -> Result<SystemOperators> {
    params.validate()?;
    let cav = params.cavity_basis()?;
    let mot = params.motion_basis()?;
    let mo = hilbert::even_motion_operators(params.n_mot, params.x_eq)?;
    cutoff_check(params, &mo.trap)?;

    let alpha = params.displacement;
    let cav_a = hilbert::displaced_rebase(&LadderPolynomial::annihilation(), alpha).to_matrix(cav);
    let cav_number = hilbert::displaced_rebase(&LadderPolynomial::number(), alpha).to_matrix(cav);
    let id_cav = OperatorMatrix::identity(Basis::Single(cav));
    let id_mot = OperatorMatrix::identity(Basis::Single(mot));

    let delta_mot =
        id_mot.scaled(C64::new(params.delta_c(), 0.0)).sub(&mo.profile.scaled(C64::new(params.u0(), 0.0)))?;
    let lift = |op: &OperatorMatrix| hilbert::tensor(&id_cav, op);

    let pump = cav_a.dagger().sub(&cav_a)?.scaled(C64::new(0.0, params.eta()));
    let h = hilbert::tensor(&cav_number, &delta_mot)?
        .scaled(C64::new(-1.0, 0.0))
        .add(&hilbert::tensor(&pump, &id_mot)?)?
        .add(&lift(&mo.trap)?)?;

    let a = hilbert::tensor(&cav_a, &id_mot)?;
    let number = hilbert::tensor(&cav_number, &id_mot)?;
    let ada = a.dagger().matmul(&a)?;
    let h_eff_dense = &h.mat - &linalg::scale(ada.mat.as_ref(), C64::new(0.0, params.kappa));

    Ok(SystemOperators {
        params: params.clone(),
        h_eff: SparseMatrix::from_dense(h_eff_dense.as_ref(), 0.0),
        jump: SparseMatrix::from_dense(a.mat.as_ref(), 0.0),
        x2: lift(&mo.x2)?,
        x4: lift(&mo.x4)?,
        p2: lift(&mo.p2)?,
        profile: lift(&mo.profile)?,
        delta_eff: lift(&delta_mot)?,
        h,
        a,
        number,
        cav_a,
        cav_number,
        mot_x2: mo.x2,
        mot_x4: mo.x4,
        mot_p2: mo.p2,
        mot_trap: mo.trap,
        mot_profile: mo.profile,
    })
}

/// Scratch buffers for repeated Lindblad actions at a fixed dimension.
#[derive(Clone, Debug)]
pub struct LindbladWorkspace {
    t1: Mat<C64>,
    t2: Mat<C64>,
}

impl LindbladWorkspace {
    pub fn new(dim: usize) -> Self {
        Self { t1: Mat::zeros(dim, dim), t2: Mat::zeros(dim, dim) }
    }
}

/// out = L(ρ) = −i(H_eff ρ − ρ H_eff†) + 2κ a ρ a†.
pub fn lindblad_apply_into(
    ops: &SystemOperators,
    rho: MatRef<'_, C64>,
    out: &mut Mat<C64>,
    ws: &mut LindbladWorkspace,
) -> Result<()> {
    let d = ops.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
    }
    if out.nrows() != d || out.ncols() != d || ws.t1.nrows() != d {
        *out = Mat::zeros(d, d);
        *ws = LindbladWorkspace::new(d);
    }
    let two_kappa = 2.0 * ops.params.kappa;
    ops.h_eff.mul_dense_into(rho, &mut ws.t1);
    ops.h_eff.dense_mul_adjoint_into(rho, &mut ws.t2);
    for j in 0..d {
        for i in 0..d {
            out[(i, j)] = -I * (ws.t1[(i, j)] - ws.t2[(i, j)]);
        }
    }
    ops.jump.mul_dense_into(rho, &mut ws.t1);
    ops.jump.dense_mul_adjoint_into(ws.t1.as_ref(), &mut ws.t2);
    for j in 0..d {
        for i in 0..d {
            out[(i, j)] += ws.t2[(i, j)] * two_kappa;
        }
    }
    Ok(())
}

pub fn lindblad_apply(ops: &SystemOperators, rho: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let d = ops.dim();
    let mut out = Mat::zeros(d, d);
    let mut ws = LindbladWorkspace::new(d);
    lindblad_apply_into(ops, rho, &mut out, &mut ws)?;
    Ok(out)
}

/// Adjoint generator L†(X) = i(H X − X H) + κ(2 a† X a − {a†a, X}).
pub fn lindblad_adjoint_apply(ops: &SystemOperators, x: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let d = ops.dim();
    if x.nrows() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.nrows() });
    }
    let h = &ops.h.mat;
    let a = &ops.a.mat;
    let ad = a.adjoint();
    let ada = ad * a;
    let comm = h * x - x * h;
    let jump = ad * x * a;
    let anti = &ada * x + x * &ada;
    let k = ops.params.kappa;
    Ok(Mat::from_fn(d, d, |i, j| I * comm[(i, j)] + (jump[(i, j)] * 2.0 - anti[(i, j)]) * k))
}

/// |0_cav, 0_mot⟩⟨0_cav, 0_mot| on the composite space.
pub fn vacuum_state(dim: usize) -> Mat<C64> {
    Mat::from_fn(dim, dim, |i, j| if i == 0 && j == 0 { ONE } else { ZERO })
}
