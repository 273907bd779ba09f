//! Preconditioned GMRES for the stationary state and for shift-invert
//! spectra at cutoffs where powering the Euler map is too slow.
//!
//! The preconditioner rotates the motion into the eigenbasis of a mean-field
//! motional Hamiltonian and drops every coupling between motional
//! coherences |i⟩⟨j| of different (i, j). What remains is one small cavity
//! Liouvillian per pair, factored once by dense LU. Those blocks leave the
//! motional populations uncoupled, so a coarse correction on the
//! nm-dimensional population space is applied on top.

use faer::linalg::solvers::{PartialPivLu, Solve};
use std::cell::RefCell;

use faer::{Mat, MatRef};

use super::arnoldi::SpectralAction;
use super::state::DensityMatrix;
use crate::linalg::{self, ONE, ZERO};
use crate::model::{lindblad_apply_into, LindbladWorkspace, SystemOperators};
use crate::semiclassical;
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct KrylovOptions {
    /// GMRES restart length.
    pub restart: usize,
    pub max_iter: usize,
    /// Relative residual target of the linear solve.
    pub tol: f64,
    /// Regularizing shift of the pair blocks.
    pub precond_shift: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { restart: 150, max_iter: 4000, tol: 1e-11, precond_shift: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Mat<C64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

fn axpy(y: &mut Mat<C64>, a: C64, x: MatRef<'_, C64>) {
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            y[(i, j)] += a * x[(i, j)];
        }
    }
}

/// Right-preconditioned restarted GMRES on D×D matrices.
pub fn gmres(
    apply: &mut dyn FnMut(MatRef<'_, C64>) -> Result<Mat<C64>>,
    precond: &dyn Fn(MatRef<'_, C64>) -> Result<Mat<C64>>,
    b: MatRef<'_, C64>,
    x0: Mat<C64>,
    opts: &KrylovOptions,
) -> Result<GmresOutcome> {
    let b_norm = linalg::frobenius(b).max(f64::MIN_POSITIVE);
    let m = opts.restart.max(1);
    let mut x = x0;
    let mut iterations = 0;
    loop {
        let ax = apply(x.as_ref())?;
        let mut r = &b.to_owned() - &ax;
        let beta = linalg::frobenius(r.as_ref());
        let rel = beta / b_norm;
        if !rel.is_finite() {
            return Err(Error::NumericalState("GMRES residual became non-finite".into()));
        }
        if rel <= opts.tol || iterations >= opts.max_iter {
            return Ok(GmresOutcome { x, iterations, rel_residual: rel, converged: rel <= opts.tol });
        }
        for j in 0..r.ncols() {
            for i in 0..r.nrows() {
                r[(i, j)] /= beta;
            }
        }
        let mut v = vec![r];
        let mut h = Mat::<C64>::zeros(m + 1, m);
        let mut cs = vec![ZERO; m];
        let mut sn = vec![ZERO; m];
        let mut gvec = vec![ZERO; m + 1];
        gvec[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = apply(precond(v[k].as_ref())?.as_ref())?;
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = linalg::inner(vi.as_ref(), w.as_ref());
                    h[(i, k)] += c;
                    axpy(&mut w, -c, vi.as_ref());
                }
            }
            let wn = linalg::frobenius(w.as_ref());
            h[(k + 1, k)] = C64::new(wn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[(i, k)] + sn[i].conj() * h[(i + 1, k)];
                h[(i + 1, k)] = -sn[i] * h[(i, k)] + cs[i] * h[(i + 1, k)];
                h[(i, k)] = t;
            }
            let (a, bb) = (h[(k, k)], h[(k + 1, k)]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = ONE;
                sn[k] = ZERO;
            } else {
                cs[k] = a / den;
                sn[k] = bb / den;
            }
            h[(k, k)] = cs[k].conj() * a + sn[k].conj() * bb;
            h[(k + 1, k)] = ZERO;
            gvec[k + 1] = -sn[k] * gvec[k];
            gvec[k] = cs[k].conj() * gvec[k];
            iterations += 1;
            k_used = k + 1;
            let est = gvec[k + 1].norm() / b_norm;
            if wn > 0.0 {
                for j in 0..w.ncols() {
                    for i in 0..w.nrows() {
                        w[(i, j)] /= wn;
                    }
                }
            }
            v.push(w);
            if est <= opts.tol * 0.5 || wn == 0.0 || iterations >= opts.max_iter {
                break;
            }
        }
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut s = gvec[i];
            for j in i + 1..k_used {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        let d = x.nrows();
        let mut update = Mat::zeros(d, d);
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut update, *yi, v[i].as_ref());
        }
        let dx = precond(update.as_ref())?;
        x = &x + &dx;
        log::trace!("gmres restart after {iterations} iterations");
    }
}

/// Block-diagonal approximation of (L − s) in a rotated motional basis.
pub struct PairPreconditioner {
    n_cav: usize,
    n_mot: usize,
    rot: Mat<C64>,
    /// LU factors for pairs i ≤ j, row-major over the upper triangle.
    lus: Vec<PartialPivLu<C64>>,
}

impl PairPreconditioner {
    /// `occupancy` is the mean photon number used for the mean-field
    /// motional Hamiltonian; `shift` is subtracted from every block.
    pub fn new(ops: &SystemOperators, occupancy: f64, shift: C64) -> Result<Self> {
        let p = &ops.params;
        let (nc, nm) = (p.n_cav, p.n_mot);
        let mean_field =
            &ops.mot_trap.mat + &linalg::scale(ops.mot_profile.mat.as_ref(), C64::new(occupancy * p.u0(), 0.0));
        let (_, rot) = linalg::hermitian_eigen(mean_field.as_ref())?;

        // diagonal motional blocks K_i of the rotated Hamiltonian
        let h = &ops.h.mat;
        let mut k_blocks = vec![Mat::<C64>::zeros(nc, nc); nm];
        for m in 0..nc {
            for n in 0..nc {
                let block = Mat::from_fn(nm, nm, |i, j| h[(m * nm + i, n * nm + j)]);
                let rotated = rot.adjoint() * &block * &rot;
                for (i, kb) in k_blocks.iter_mut().enumerate() {
                    kb[(m, n)] = rotated[(i, i)];
                }
            }
        }
        let c = &ops.cav_a.mat;
        let cdc = c.adjoint() * c;
        let id = linalg::identity(nc);
        let c_conj = Mat::from_fn(nc, nc, |i, j| c[(i, j)].conj());
        let kappa = p.kappa;
        let dissipator = &linalg::scale(linalg::kron(c_conj.as_ref(), c.as_ref()).as_ref(), C64::new(2.0 * kappa, 0.0))
            - &linalg::scale(
                (&linalg::kron(id.as_ref(), cdc.as_ref()) + &linalg::kron(cdc.transpose(), id.as_ref())).as_ref(),
                C64::new(kappa, 0.0),
            );
        let shift_id = linalg::scale(linalg::identity(nc * nc).as_ref(), shift);

        let mut lus = Vec::with_capacity(nm * (nm + 1) / 2);
        for i in 0..nm {
            for j in i..nm {
                let coherent = &linalg::kron(id.as_ref(), k_blocks[i].as_ref())
                    - &linalg::kron(k_blocks[j].transpose(), id.as_ref());
                let block = &(&linalg::scale(coherent.as_ref(), C64::new(0.0, -1.0)) + &dissipator) - &shift_id;
                lus.push(block.partial_piv_lu());
            }
        }
        Ok(Self { n_cav: nc, n_mot: nm, rot, lus })
    }

    /// ⟨I ⊗ |v_k⟩⟨v_k|, x⟩ for every rotated motional level k.
    fn populations(&self, x: MatRef<'_, C64>) -> Vec<C64> {
        let (nc, nm) = (self.n_cav, self.n_mot);
        let reduced = Mat::from_fn(nm, nm, |i, j| (0..nc).map(|m| x[(m * nm + i, m * nm + j)]).sum::<C64>());
        let t = self.rot.adjoint() * &reduced * &self.rot;
        (0..nm).map(|k| t[(k, k)]).collect()
    }

    pub fn apply(&self, r: MatRef<'_, C64>) -> Mat<C64> {
        let (nc, nm) = (self.n_cav, self.n_mot);
        let d = nc * nm;
        let rot = &self.rot;
        let rot_h = rot.adjoint().to_owned();
        // R' = U† R U with U = I ⊗ V, block by block
        let mut rp = Mat::<C64>::zeros(d, d);
        for m in 0..nc {
            for n in 0..nc {
                let block = Mat::from_fn(nm, nm, |i, j| r[(m * nm + i, n * nm + j)]);
                let t = &rot_h * &block * rot;
                for j in 0..nm {
                    for i in 0..nm {
                        rp[(m * nm + i, n * nm + j)] = t[(i, j)];
                    }
                }
            }
        }
        let mut xp = Mat::<C64>::zeros(d, d);
        let mut y = Mat::<C64>::zeros(nc * nc, 1);
        let mut offset = 0;
        let mut starts = Vec::with_capacity(nm);
        for i in 0..nm {
            starts.push(offset);
            offset += nm - i;
        }
        for i in 0..nm {
            for j in 0..nm {
                let (lo, hi, flip) = if i <= j { (i, j, false) } else { (j, i, true) };
                let lu = &self.lus[starts[lo] + hi - lo];
                for n in 0..nc {
                    for m in 0..nc {
                        // flipped pairs solve the conjugate-transposed block
                        y[(m + n * nc, 0)] =
                            if flip { rp[(n * nm + i, m * nm + j)].conj() } else { rp[(m * nm + i, n * nm + j)] };
                    }
                }
                lu.solve_in_place(y.as_mut());
                for n in 0..nc {
                    for m in 0..nc {
                        xp[(m * nm + i, n * nm + j)] =
                            if flip { y[(n + m * nc, 0)].conj() } else { y[(m + n * nc, 0)] };
                    }
                }
            }
        }
        let mut x = Mat::<C64>::zeros(d, d);
        for m in 0..nc {
            for n in 0..nc {
                let block = Mat::from_fn(nm, nm, |i, j| xp[(m * nm + i, n * nm + j)]);
                let t = rot * &block * &rot_h;
                for j in 0..nm {
                    for i in 0..nm {
                        x[(m * nm + i, n * nm + j)] = t[(i, j)];
                    }
                }
            }
        }
        x
    }
}

/// L(x) + tr(x)·I/D for the stationary solve, or L(x) − σx.
#[derive(Clone, Copy, Debug)]
enum Form {
    Stationary,
    Shifted(f64),
}

struct Operator<'a> {
    ops: &'a SystemOperators,
    form: Form,
    scratch: RefCell<(LindbladWorkspace, Mat<C64>)>,
}

impl<'a> Operator<'a> {
    fn new(ops: &'a SystemOperators, form: Form) -> Self {
        let d = ops.dim();
        Self { ops, form, scratch: RefCell::new((LindbladWorkspace::new(d), Mat::zeros(d, d))) }
    }

    fn apply(&self, x: MatRef<'_, C64>) -> Result<Mat<C64>> {
        let d = self.ops.dim();
        let mut guard = self.scratch.borrow_mut();
        let (ws, out) = &mut *guard;
        lindblad_apply_into(self.ops, x, out, ws)?;
        let mut y = out.clone();
        match self.form {
            Form::Stationary => {
                let t = linalg::trace(x) / d as f64;
                for i in 0..d {
                    y[(i, i)] += t;
                }
            }
            Form::Shifted(sigma) => axpy(&mut y, C64::new(-sigma, 0.0), x),
        }
        Ok(y)
    }
}

/// Block LU over the motional populations and their complement.
///
/// The slow space is spanned by V_k = σ_k ⊗ |v_k⟩⟨v_k|, with σ_k the cavity
/// state of pair block (k, k); W_k = I ⊗ |v_k⟩⟨v_k| picks out the
/// coefficients. Population transfer between levels is second order in the
/// couplings, so the coarse operator is the Schur complement
/// S = Wᴴ A V − Wᴴ A F A V, where F = Π̄ P Π̄ approximates the inverse on
/// the fast complement with the pair blocks P.
struct TwoLevel {
    pairs: PairPreconditioner,
    trial: Vec<Mat<C64>>,
    /// F A V_l for every l.
    lifted: Vec<Mat<C64>>,
    schur: PartialPivLu<C64>,
}

impl TwoLevel {
    fn new(pairs: PairPreconditioner, op: &Operator<'_>) -> Result<Self> {
        let (nc, nm) = (pairs.n_cav, pairs.n_mot);
        let mut trial = Vec::with_capacity(nm);
        let mut start = 0;
        for k in 0..nm {
            let mut y = Mat::<C64>::from_fn(nc * nc, 1, |i, _| if i % (nc + 1) == 0 { ONE } else { ZERO });
            pairs.lus[start].solve_in_place(y.as_mut());
            start += nm - k;
            let sigma = Mat::from_fn(nc, nc, |m, n| y[(m + n * nc, 0)]);
            let sigma = linalg::hermitian_part(sigma.as_ref());
            let tr = linalg::trace(sigma.as_ref());
            if !(tr.norm() > 0.0) {
                return Err(Error::LinearAlgebra(format!("cavity block {k} has no trace-carrying solution")));
            }
            let v = pairs.rot.col(k);
            let proj = Mat::from_fn(nm, nm, |i, j| v[i] * v[j].conj());
            trial.push(linalg::kron(linalg::scale(sigma.as_ref(), ONE / tr).as_ref(), proj.as_ref()));
        }
        let mut this =
            Self { pairs, trial, lifted: Vec::with_capacity(nm), schur: Mat::<C64>::identity(1, 1).partial_piv_lu() };
        let mut s = Mat::<C64>::zeros(nm, nm);
        for l in 0..nm {
            let av = op.apply(this.trial[l].as_ref())?;
            let fav = this.fast_solve(av.as_ref());
            let afav = op.apply(fav.as_ref())?;
            let (w1, w2) = (this.pairs.populations(av.as_ref()), this.pairs.populations(afav.as_ref()));
            for k in 0..nm {
                s[(k, l)] = w1[k] - w2[k];
            }
            this.lifted.push(fav);
        }
        this.schur = s.partial_piv_lu();
        Ok(this)
    }

    /// x − Σ_k V_k ⟨W_k, x⟩
    fn fast_part(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        let w = self.pairs.populations(x);
        let mut out = x.to_owned();
        for (k, t) in self.trial.iter().enumerate() {
            axpy(&mut out, -w[k], t.as_ref());
        }
        out
    }

    /// F x = Π̄ P Π̄ x
    fn fast_solve(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        let y = self.pairs.apply(self.fast_part(x).as_ref());
        self.fast_part(y.as_ref())
    }

    fn apply(&self, r: MatRef<'_, C64>, op: &Operator<'_>) -> Result<Mat<C64>> {
        let y = self.fast_solve(r);
        let ay = op.apply(y.as_ref())?;
        let (wr, way) = (self.pairs.populations(r), self.pairs.populations(ay.as_ref()));
        let mut c = Mat::from_fn(wr.len(), 1, |k, _| wr[k] - way[k]);
        self.schur.solve_in_place(c.as_mut());
        let mut z = y;
        for (l, (t, lifted)) in self.trial.iter().zip(&self.lifted).enumerate() {
            axpy(&mut z, c[(l, 0)], t.as_ref());
            axpy(&mut z, -c[(l, 0)], lifted.as_ref());
        }
        Ok(z)
    }
}

/// Photon number used to build the mean-field preconditioner.
fn occupancy_estimate(ops: &SystemOperators, warm: Option<&DensityMatrix>) -> f64 {
    match warm {
        Some(rho) => rho.expect(ops.number.mat.as_ref()).max(0.0),
        None => {
            let p = &ops.params;
            semiclassical::mean_photon_semiclassical(semiclassical::global_minimum(p), p)
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovSteadyState {
    pub state: DensityMatrix,
    pub iterations: usize,
    /// ‖L(ρ)‖_F / ‖ρ‖_F of the normalized state.
    pub residual: f64,
    pub converged: bool,
}

/// Solve (L + u·tr)(ρ) = u with u = I/D, which forces L(ρ) = 0 and tr ρ = 1.
pub fn steady_state_krylov(
    ops: &SystemOperators,
    opts: &KrylovOptions,
    warm: Option<&DensityMatrix>,
) -> Result<KrylovSteadyState> {
    let p = &ops.params;
    let d = ops.dim();
    let pairs = PairPreconditioner::new(ops, occupancy_estimate(ops, warm), C64::new(opts.precond_shift, 0.0))?;
    let u = linalg::scale(linalg::identity(d).as_ref(), C64::new(1.0 / d as f64, 0.0));
    let op = Operator::new(ops, Form::Stationary);
    let pre_op = Operator::new(ops, Form::Stationary);
    let pre = TwoLevel::new(pairs, &pre_op)?;
    let mut apply = |x: MatRef<'_, C64>| op.apply(x);
    let x0 = match warm {
        Some(w) if w.dim() == d => w.mat().clone(),
        _ => DensityMatrix::vacuum(p.n_cav, p.n_mot).into_mat(),
    };
    let precond = |x: MatRef<'_, C64>| pre.apply(x, &pre_op);
    let sol = gmres(&mut apply, &precond, u.as_ref(), x0, opts)?;
    let state = DensityMatrix::normalized(sol.x.as_ref(), p.n_cav, p.n_mot)?;
    let l = crate::model::lindblad_apply(ops, state.as_ref())?;
    let residual = linalg::frobenius(l.as_ref()) / linalg::frobenius(state.as_ref());
    Ok(KrylovSteadyState { state, iterations: sol.iterations, residual, converged: sol.converged })
}

/// (L − σ)⁻¹ as a spectral action; each application is a GMRES solve.
pub struct ShiftInvert<'a> {
    ops: &'a SystemOperators,
    sigma: f64,
    pre: TwoLevel,
    opts: KrylovOptions,
}

impl<'a> ShiftInvert<'a> {
    pub fn new(ops: &'a SystemOperators, sigma: f64, occupancy: f64, opts: KrylovOptions) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::param("sigma", "shift must be positive"));
        }
        let pairs = PairPreconditioner::new(ops, occupancy, C64::new(sigma.max(opts.precond_shift), 0.0))?;
        let pre = TwoLevel::new(pairs, &Operator::new(ops, Form::Shifted(sigma)))?;
        Ok(Self { ops, sigma, pre, opts })
    }
}

impl SpectralAction for ShiftInvert<'_> {
    fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn apply(&self, x: MatRef<'_, C64>) -> Result<Mat<C64>> {
        let op = Operator::new(self.ops, Form::Shifted(self.sigma));
        let pre_op = Operator::new(self.ops, Form::Shifted(self.sigma));
        let mut apply = |v: MatRef<'_, C64>| op.apply(v);
        let precond = |v: MatRef<'_, C64>| self.pre.apply(v, &pre_op);
        let x0 = precond(x)?;
        let sol = gmres(&mut apply, &precond, x, x0, &self.opts)?;
        if !sol.converged {
            log::warn!("shift-invert inner solve stalled at relative residual {:e}", sol.rel_residual);
        }
        Ok(sol.x)
    }

    fn to_liouvillian(&self, theta: C64) -> C64 {
        C64::new(self.sigma, 0.0) + ONE / theta
    }

    fn degeneracy_tol(&self) -> f64 {
        1e-6 * self.ops.params.kappa
    }
}
