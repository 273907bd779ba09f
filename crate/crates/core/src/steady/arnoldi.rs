//! Restarted Arnoldi iteration for the dominant eigenpairs of a linear
//! action on D×D matrices with the Frobenius inner product.
//!
//! Restarts keep the wanted Ritz vectors (Krylov–Schur style): with
//! A·V = V·G + v·g and Ritz vectors Y, the compressed decomposition is
//! V' = V·Z, G' = Zᴴ·G·Z, g' = g·Z for an orthonormal basis Z of span(Y).

use faer::{Mat, MatRef};

use super::state::DensityMatrix;
use crate::linalg::{self, ZERO};
use crate::{Error, Result, C64};

/// A linear action whose dominant eigenvalues θ map to Liouvillian
/// eigenvalues ν through `to_liouvillian`.
pub trait SpectralAction {
    /// Side length D of the matrices acted on.
    fn dim(&self) -> usize;
    fn apply(&self, x: MatRef<'_, C64>) -> Result<Mat<C64>>;
    fn to_liouvillian(&self, theta: C64) -> C64;
    /// |Re ν| below which an eigenvalue counts as stationary.
    fn degeneracy_tol(&self) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArnoldiOptions {
    pub krylov_dim: usize,
    pub n_eigs: usize,
    /// Relative Ritz residual |g·y|/|θ| required for convergence.
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { krylov_dim: 24, n_eigs: 4, tol: 1e-8, max_restarts: 300 }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPairs {
    /// Sorted by modulus, descending.
    pub values: Vec<C64>,
    pub vectors: Vec<Mat<C64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub converged: bool,
}

fn axpy(y: &mut Mat<C64>, a: C64, x: MatRef<'_, C64>) {
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            y[(i, j)] += a * x[(i, j)];
        }
    }
}

fn scale_in_place(y: &mut Mat<C64>, s: f64) {
    for j in 0..y.ncols() {
        for i in 0..y.nrows() {
            y[(i, j)] *= s;
        }
    }
}

/// Two passes of classical Gram–Schmidt; returns the accumulated coefficients.
fn orthogonalize(w: &mut Mat<C64>, basis: &[Mat<C64>]) -> Vec<C64> {
    let mut coef = vec![ZERO; basis.len()];
    for _ in 0..2 {
        let h: Vec<C64> = basis.iter().map(|v| linalg::inner(v.as_ref(), w.as_ref())).collect();
        for (k, v) in basis.iter().enumerate() {
            axpy(w, -h[k], v.as_ref());
            coef[k] += h[k];
        }
    }
    coef
}

/// Deterministic pseudo-random fill used after an invariant-subspace breakdown.
fn filler(d: usize, seed: &mut u64) -> Mat<C64> {
    let mut next = || {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    Mat::from_fn(d, d, |_, _| C64::new(next(), next()))
}

fn combine(basis: &[Mat<C64>], coef: impl Fn(usize) -> C64) -> Mat<C64> {
    let d = basis[0].nrows();
    let mut out = Mat::zeros(d, d);
    for (c, v) in basis.iter().enumerate() {
        let a = coef(c);
        if a != ZERO {
            axpy(&mut out, a, v.as_ref());
        }
    }
    out
}

/// Orthonormal basis of the column span of `y` (modified Gram–Schmidt,
/// dropping numerically dependent columns).
fn orthonormal_columns(y: &Mat<C64>) -> Mat<C64> {
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for j in 0..y.ncols() {
        let mut v: Vec<C64> = (0..y.nrows()).map(|i| y[(i, j)]).collect();
        for _ in 0..2 {
            for q in &cols {
                let h: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= h * qi;
                }
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-10 {
            cols.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    Mat::from_fn(y.nrows(), cols.len(), |i, j| cols[j][i])
}

pub fn arnoldi(action: &dyn SpectralAction, start: MatRef<'_, C64>, opts: &ArnoldiOptions) -> Result<RitzPairs> {
    let d = action.dim();
    let n_eigs = opts.n_eigs;
    let m = opts.krylov_dim.min(d * d);
    if n_eigs == 0 || m < n_eigs + 2 {
        return Err(Error::param(
            "krylov_dim",
            format!(
                "need krylov_dim >= n_eigs + 2 within D² = {}, got {} for {n_eigs} eigenvalues",
                d * d,
                opts.krylov_dim
            ),
        ));
    }
    if start.nrows() != d || start.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: start.nrows() });
    }
    let norm = linalg::frobenius(start);
    if !(norm > 0.0) {
        return Err(Error::param("start", "start vector must be non-zero"));
    }
    let mut v0 = start.to_owned();
    scale_in_place(&mut v0, 1.0 / norm);
    let mut basis = vec![v0];
    let mut g = Mat::<C64>::zeros(m + 1, m);
    let mut kept = 0;
    let mut seed = 0x2545_F491_4F6C_DD1Du64;

    for restart in 0..=opts.max_restarts {
        for j in kept..m {
            let mut w = action.apply(basis[j].as_ref())?;
            let coef = orthogonalize(&mut w, &basis);
            let col_norm = coef.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for (i, c) in coef.into_iter().enumerate() {
                g[(i, j)] += c;
            }
            let beta = linalg::frobenius(w.as_ref());
            if beta <= 1e-13 * col_norm.max(f64::MIN_POSITIVE) {
                // invariant subspace: continue with an unrelated direction
                g[(j + 1, j)] = ZERO;
                let mut f = filler(d, &mut seed);
                orthogonalize(&mut f, &basis);
                let fnorm = linalg::frobenius(f.as_ref());
                scale_in_place(&mut f, 1.0 / fnorm);
                basis.push(f);
            } else {
                g[(j + 1, j)] = C64::new(beta, 0.0);
                scale_in_place(&mut w, 1.0 / beta);
                basis.push(w);
            }
        }

        let hm = Mat::from_fn(m, m, |i, j| g[(i, j)]);
        let (theta, y) = linalg::eigen(hm.as_ref())?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            theta[b].norm().total_cmp(&theta[a].norm()).then(theta[a].arg().total_cmp(&theta[b].arg()))
        });
        let residual = |k: usize| -> f64 {
            let r: C64 = (0..m).map(|c| g[(m, c)] * y[(c, k)]).sum();
            r.norm() / theta[k].norm().max(f64::MIN_POSITIVE)
        };
        let residuals: Vec<f64> = order[..n_eigs].iter().map(|&k| residual(k)).collect();
        let converged = residuals.iter().all(|&r| r <= opts.tol);
        log::debug!("arnoldi restart {restart}: residuals {residuals:?}");

        if converged || restart == opts.max_restarts {
            let vectors = order[..n_eigs]
                .iter()
                .map(|&k| {
                    let mut x = combine(&basis[..m], |c| y[(c, k)]);
                    let n = linalg::frobenius(x.as_ref());
                    scale_in_place(&mut x, 1.0 / n);
                    x
                })
                .collect();
            return Ok(RitzPairs {
                values: order[..n_eigs].iter().map(|&k| theta[k]).collect(),
                vectors,
                residuals,
                restarts: restart,
                converged,
            });
        }

        let p = (n_eigs + (m - n_eigs) / 2).min(m - 1);
        let ysel = Mat::from_fn(m, p, |i, j| y[(i, order[j])]);
        let z = orthonormal_columns(&ysel);
        let p = z.ncols();
        let mut new_basis: Vec<Mat<C64>> = (0..p).map(|i| combine(&basis[..m], |c| z[(c, i)])).collect();
        new_basis.push(basis.swap_remove(m));
        let gz = &hm * &z;
        let compressed = z.adjoint() * &gz;
        let mut g_new = Mat::<C64>::zeros(m + 1, m);
        for j in 0..p {
            for i in 0..p {
                g_new[(i, j)] = compressed[(i, j)];
            }
            g_new[(p, j)] = (0..m).map(|c| g[(m, c)] * z[(c, j)]).sum();
        }
        basis = new_basis;
        g = g_new;
        kept = p;
    }
    unreachable!("loop returns on the final restart")
}

/// Dominant spectrum, steady state and gap.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Eigenvalues of the action, moduli descending.
    pub map_eigenvalues: Vec<C64>,
    pub liouvillian_eigenvalues: Vec<C64>,
    pub residuals: Vec<f64>,
    pub steady_state: DensityMatrix,
    pub steady_index: usize,
    /// |Re ν₁|/κ with ν₁ the slowest-decaying computed eigenvalue after ν₀.
    pub gap: f64,
    pub multistable: bool,
    pub restarts: usize,
}

impl SpectrumResult {
    pub fn steady_eigenvalue(&self) -> C64 {
        self.liouvillian_eigenvalues[self.steady_index]
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Assemble from eigenpairs already sorted by |θ| descending.
    pub(crate) fn from_pairs(
        map_eigenvalues: Vec<C64>,
        liouvillian_eigenvalues: Vec<C64>,
        vectors: &[Mat<C64>],
        residuals: Vec<f64>,
        restarts: usize,
        dims: (usize, usize),
        kappa: f64,
        degeneracy_tol: f64,
    ) -> Result<Self> {
        let steady_index = (0..liouvillian_eigenvalues.len())
            .min_by(|&a, &b| liouvillian_eigenvalues[a].norm().total_cmp(&liouvillian_eigenvalues[b].norm()))
            .ok_or_else(|| Error::NumericalState("empty spectrum".into()))?;
        let v = &vectors[steady_index];
        let tr = linalg::trace(v.as_ref());
        if tr.norm() < 1e-10 * linalg::frobenius(v.as_ref()) {
            return Err(Error::NumericalState("steady-state eigenvector is traceless".into()));
        }
        let steady_state = DensityMatrix::normalized(v.as_ref(), dims.0, dims.1)?;
        // slowest decay among the rest, which need not be the nearest to 0
        let gap = (0..liouvillian_eigenvalues.len())
            .filter(|&i| i != steady_index)
            .map(|i| liouvillian_eigenvalues[i].re.abs())
            .min_by(f64::total_cmp)
            .map_or(f64::NAN, |g| g / kappa);
        let stationary = liouvillian_eigenvalues.iter().filter(|nu| nu.re.abs() <= degeneracy_tol).count();
        Ok(Self {
            map_eigenvalues,
            liouvillian_eigenvalues,
            residuals,
            steady_state,
            steady_index,
            gap,
            multistable: stationary >= 2,
            restarts,
        })
    }
}

/// Dominant eigenpairs of `action` started from `start`; the stationary
/// state is the Ritz vector whose Liouvillian eigenvalue is closest to 0.
pub fn arnoldi_dominant(
    action: &dyn SpectralAction,
    start: &DensityMatrix,
    opts: &ArnoldiOptions,
    kappa: f64,
) -> Result<SpectrumResult> {
    let pairs = arnoldi(action, start.as_ref(), opts)?;
    if !pairs.converged {
        return Err(Error::NoConvergence { restarts: pairs.restarts, residuals: pairs.residuals });
    }
    let nu = pairs.values.iter().map(|&t| action.to_liouvillian(t)).collect();
    SpectrumResult::from_pairs(
        pairs.values,
        nu,
        &pairs.vectors,
        pairs.residuals,
        pairs.restarts,
        (start.n_cav(), start.n_mot()),
        kappa,
        action.degeneracy_tol(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Diagonal action x ↦ Λ ∘ x (elementwise) with known spectrum.
    struct Diagonal {
        d: usize,
        lambda: Mat<C64>,
    }

    impl SpectralAction for Diagonal {
        fn dim(&self) -> usize {
            self.d
        }
        fn apply(&self, x: MatRef<'_, C64>) -> Result<Mat<C64>> {
            Ok(Mat::from_fn(self.d, self.d, |i, j| self.lambda[(i, j)] * x[(i, j)]))
        }
        fn to_liouvillian(&self, theta: C64) -> C64 {
            theta.ln()
        }
        fn degeneracy_tol(&self) -> f64 {
            1e-9
        }
    }

    #[test]
    fn recovers_dominant_diagonal_spectrum() {
        let d = 6;
        let lambda = Mat::from_fn(d, d, |i, j| {
            let k = (i * d + j) as f64;
            C64::from_polar(0.97f64.powf(k), 0.3 * k)
        });
        let act = Diagonal { d, lambda: lambda.clone() };
        let start = Mat::from_fn(d, d, |i, j| C64::new(1.0 + 0.1 * i as f64, 0.05 * j as f64));
        let opts = ArnoldiOptions { krylov_dim: 16, n_eigs: 4, tol: 1e-11, max_restarts: 500 };
        let r = arnoldi(&act, start.as_ref(), &opts).unwrap();
        assert!(r.converged);
        for k in 0..4 {
            let want = lambda[(k / d, k % d)];
            assert!((r.values[k] - want).norm() < 1e-9, "{k}: {} vs {}", r.values[k], want);
        }
    }

    #[test]
    fn handles_invariant_start_vector() {
        let d = 3;
        let lambda = Mat::from_fn(d, d, |i, j| C64::new(if i == j { 1.0 } else { 0.5 }, 0.0));
        let act = Diagonal { d, lambda };
        // identity is an eigenvector: immediate breakdown
        let start = linalg::identity(d);
        let opts = ArnoldiOptions { krylov_dim: 8, n_eigs: 3, tol: 1e-10, max_restarts: 50 };
        let r = arnoldi(&act, start.as_ref(), &opts).unwrap();
        assert!(r.converged);
        for v in &r.values {
            assert!((v.re - 1.0).abs() < 1e-9);
        }
    }
}
