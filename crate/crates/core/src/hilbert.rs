//! Truncated bases and the elementary operators built on them.
//!
//! Motional operators that are polynomials in x or p are built in a larger
//! full Fock space and truncated afterwards: each power of x couples Fock
//! levels two apart, so building directly at the cutoff would corrupt the
//! retained block near its edge.

use faer::Mat;

use crate::linalg::{self, ONE, ZERO};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    CavityFock,
    MotionalFock,
    /// Even Fock states only; basis index k is Fock number 2k.
    MotionalEvenFock,
    /// Cavity Fock states displaced by a coherent amplitude.
    DisplacedFock,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub dim: usize,
    pub displacement: C64,
}

impl BasisSpec {
    pub fn new(kind: BasisKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "basis dimension must be at least 1"));
        }
        Ok(Self { kind, dim, displacement: ZERO })
    }

    pub fn displaced(dim: usize, displacement: C64) -> Result<Self> {
        let mut spec = Self::new(BasisKind::DisplacedFock, dim)?;
        spec.displacement = displacement;
        Ok(spec)
    }

    pub fn cavity(dim: usize) -> Result<Self> {
        Self::new(BasisKind::CavityFock, dim)
    }

    pub fn motional_even(dim: usize) -> Result<Self> {
        Self::new(BasisKind::MotionalEvenFock, dim)
    }

    pub fn motional(dim: usize) -> Result<Self> {
        Self::new(BasisKind::MotionalFock, dim)
    }

    /// Fock number carried by basis index `i`.
    pub fn fock_number(&self, i: usize) -> usize {
        match self.kind {
            BasisKind::MotionalEvenFock => 2 * i,
            _ => i,
        }
    }

    /// Highest Fock number represented.
    pub fn max_fock(&self) -> usize {
        self.fock_number(self.dim - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Basis {
    Single(BasisSpec),
    /// Composite cavity ⊗ motion.
    Product(BasisSpec, BasisSpec),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Single(s) => s.dim,
            Basis::Product(a, b) => a.dim * b.dim,
        }
    }
}

/// A complex matrix tagged with the basis it acts on.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub basis: Basis,
    pub mat: Mat<C64>,
}

impl OperatorMatrix {
    pub fn new(basis: Basis, mat: Mat<C64>) -> Result<Self> {
        let d = basis.dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows() });
        }
        Ok(Self { basis, mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn identity(basis: Basis) -> Self {
        Self { basis, mat: linalg::identity(basis.dim()) }
    }

    pub fn zeros(basis: Basis) -> Self {
        let d = basis.dim();
        Self { basis, mat: Mat::zeros(d, d) }
    }

    pub fn dagger(&self) -> Self {
        Self { basis: self.basis, mat: linalg::dagger(self.mat.as_ref()) }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Self { basis: self.basis, mat: &self.mat * &rhs.mat })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Self { basis: self.basis, mat: &self.mat + &rhs.mat })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        Ok(Self { basis: self.basis, mat: &self.mat - &rhs.mat })
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { basis: self.basis, mat: linalg::scale(self.mat.as_ref(), s) }
    }

    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.matmul(rhs)?.sub(&rhs.matmul(self)?)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(self.mat.as_ref())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() < tol
    }

    fn check_same(&self, rhs: &Self) -> Result<()> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rhs.dim() });
        }
        Ok(())
    }
}

/// Ladder matrix a[n−1, n] = √n in the Fock numbering of `spec`.
fn ladder_entries(spec: &BasisSpec) -> Mat<C64> {
    let d = spec.dim;
    Mat::from_fn(d, d, |i, j| {
        let (ni, nj) = (spec.fock_number(i), spec.fock_number(j));
        if nj >= 1 && ni + 1 == nj {
            C64::new((nj as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

/// Annihilation operator of the (possibly displaced) number basis. On the
/// even motional subspace the ladder operator has no non-zero matrix element.
pub fn annihilation(spec: BasisSpec) -> OperatorMatrix {
    OperatorMatrix { basis: Basis::Single(spec), mat: ladder_entries(&spec) }
}

/// Dimensionless quadratures q = (a + a†)/√2, p = i(a† − a)/√2.
pub fn quadratures(spec: BasisSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if spec.dim < 2 {
        return Err(Error::param("dim", "quadratures need at least two basis states"));
    }
    if spec.kind == BasisKind::MotionalEvenFock {
        // built at full cutoff and projected: both vanish on the even block
        let full = BasisSpec::motional(2 * spec.dim)?;
        let (q, p) = quadratures(full)?;
        let proj = even_projection(2 * spec.dim)?;
        return Ok((proj.restrict(&q)?, proj.restrict(&p)?));
    }
    let a = annihilation(spec);
    let ad = a.dagger();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = a.add(&ad)?.scaled(C64::new(s, 0.0));
    let p = ad.sub(&a)?.scaled(C64::new(0.0, s));
    Ok((q, p))
}

/// Intensity profile f(x) = [(x/x_eq)² − 1]² evaluated as the matrix
/// polynomial (M − I)² with M = (x/x_eq)².
pub fn intensity_profile(x_op: &OperatorMatrix, x_eq: f64) -> Result<OperatorMatrix> {
    if !(x_eq > 0.0) {
        return Err(Error::param("x_eq", format!("must be positive, got {x_eq}")));
    }
    let scaled = x_op.scaled(C64::new(1.0 / x_eq, 0.0));
    let m = scaled.matmul(&scaled)?;
    let shifted = m.sub(&OperatorMatrix::identity(x_op.basis))?;
    shifted.matmul(&shifted)
}

/// Embedding of the even-Fock subspace into a full Fock space.
#[derive(Clone, Debug)]
pub struct EvenProjection {
    pub full_dim: usize,
    pub indices: Vec<usize>,
}

pub fn even_projection(full_dim: usize) -> Result<EvenProjection> {
    if full_dim < 2 {
        return Err(Error::param("full_dim", "even projection needs full_dim >= 2"));
    }
    Ok(EvenProjection { full_dim, indices: (0..full_dim).step_by(2).collect() })
}

impl EvenProjection {
    pub fn even_dim(&self) -> usize {
        self.indices.len()
    }

    /// Pᵀ O P.
    pub fn restrict(&self, op: &OperatorMatrix) -> Result<OperatorMatrix> {
        if op.dim() != self.full_dim {
            return Err(Error::DimensionMismatch { expected: self.full_dim, found: op.dim() });
        }
        let idx = &self.indices;
        let mat = Mat::from_fn(idx.len(), idx.len(), |i, j| op.mat[(idx[i], idx[j])]);
        Ok(OperatorMatrix { basis: Basis::Single(BasisSpec::motional_even(idx.len())?), mat })
    }

    /// P ρ Pᵀ: lift an even-subspace matrix into the full Fock space.
    pub fn embed(&self, even: &Mat<C64>) -> Result<Mat<C64>> {
        if even.nrows() != self.even_dim() {
            return Err(Error::DimensionMismatch { expected: self.even_dim(), found: even.nrows() });
        }
        let mut full = Mat::zeros(self.full_dim, self.full_dim);
        for (i, &fi) in self.indices.iter().enumerate() {
            for (j, &fj) in self.indices.iter().enumerate() {
                full[(fi, fj)] = even[(i, j)];
            }
        }
        Ok(full)
    }
}

/// Normal-ordered polynomial Σ c_jk a†^j a^k in a single ladder operator.
///
/// Displacement acts on it by the exact substitution a → a + α, which is
/// how operators are moved into a displaced number basis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LadderPolynomial {
    terms: Vec<(u32, u32, C64)>,
}

impl LadderPolynomial {
    pub fn term(creation: u32, annihilation: u32, coef: C64) -> Self {
        Self { terms: vec![(creation, annihilation, coef)] }
    }

    pub fn identity() -> Self {
        Self::term(0, 0, ONE)
    }

    pub fn annihilation() -> Self {
        Self::term(0, 1, ONE)
    }

    pub fn creation() -> Self {
        Self::term(1, 0, ONE)
    }

    pub fn number() -> Self {
        Self::term(1, 1, ONE)
    }

    pub fn plus(mut self, other: &Self) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.simplified()
    }

    pub fn scaled(mut self, s: C64) -> Self {
        for t in &mut self.terms {
            t.2 *= s;
        }
        self
    }

    pub fn terms(&self) -> &[(u32, u32, C64)] {
        &self.terms
    }

    fn simplified(self) -> Self {
        let mut out: Vec<(u32, u32, C64)> = Vec::new();
        for (j, k, c) in self.terms {
            match out.iter_mut().find(|t| t.0 == j && t.1 == k) {
                Some(t) => t.2 += c,
                None => out.push((j, k, c)),
            }
        }
        out.retain(|t| t.2 != ZERO);
        out.sort_by_key(|t| (t.0, t.1));
        Self { terms: out }
    }

    /// Matrix in a basis whose ladder operator is `a`.
    pub fn to_matrix(&self, spec: BasisSpec) -> OperatorMatrix {
        let a = annihilation(spec);
        let ad = a.dagger();
        let d = spec.dim;
        let mut acc = Mat::<C64>::zeros(d, d);
        for &(j, k, c) in &self.terms {
            let mut m = linalg::identity(d);
            for _ in 0..j {
                m = &m * &ad.mat;
            }
            for _ in 0..k {
                m = &m * &a.mat;
            }
            acc = &acc + &linalg::scale(m.as_ref(), c);
        }
        OperatorMatrix { basis: Basis::Single(spec), mat: acc }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// D†(α) O D(α) for a normal-ordered polynomial O, via a → a + α.
pub fn displaced_rebase(op: &LadderPolynomial, alpha: C64) -> LadderPolynomial {
    let mut out = Vec::new();
    for &(j, k, c) in op.terms() {
        for r in 0..=j {
            for s in 0..=k {
                let coef = c * binomial(j, r) * binomial(k, s) * alpha.conj().powu(j - r) * alpha.powu(k - s);
                out.push((r, s, coef));
            }
        }
    }
    LadderPolynomial { terms: out }.simplified()
}

/// Kronecker product with the cavity as the first factor.
pub fn tensor(cavity: &OperatorMatrix, motion: &OperatorMatrix) -> Result<OperatorMatrix> {
    let (Basis::Single(a), Basis::Single(b)) = (cavity.basis, motion.basis) else {
        return Err(Error::param("tensor", "factors must be single-mode operators"));
    };
    Ok(OperatorMatrix { basis: Basis::Product(a, b), mat: linalg::kron(cavity.mat.as_ref(), motion.mat.as_ref()) })
}

/// Motional operators on the even subspace, built in a buffered full Fock
/// space of dimension `2·n_even + 8` and then truncated.
#[derive(Clone, Debug)]
pub struct EvenMotionOperators {
    pub x2: OperatorMatrix,
    pub x4: OperatorMatrix,
    pub p2: OperatorMatrix,
    /// p²/2 + x²/2
    pub trap: OperatorMatrix,
    /// f(x) = [(x/x_eq)² − 1]²
    pub profile: OperatorMatrix,
}

pub fn buffered_full_dim(n_even: usize) -> usize {
    2 * n_even + 8
}

pub fn even_motion_operators(n_even: usize, x_eq: f64) -> Result<EvenMotionOperators> {
    if n_even == 0 {
        return Err(Error::param("n_mot", "motional cutoff must be at least 1"));
    }
    let full = buffered_full_dim(n_even);
    let spec = BasisSpec::motional(full)?;
    let (x, p) = quadratures(spec)?;
    let x2 = x.matmul(&x)?;
    let x4 = x2.matmul(&x2)?;
    let p2 = p.matmul(&p)?;
    let trap = p2.add(&x2)?.scaled(C64::new(0.5, 0.0));
    let profile = intensity_profile(&x, x_eq)?;

    let proj = even_projection(full)?;
    let keep = |op: &OperatorMatrix| -> Result<OperatorMatrix> {
        let r = proj.restrict(op)?;
        let mat = Mat::from_fn(n_even, n_even, |i, j| r.mat[(i, j)]);
        OperatorMatrix::new(Basis::Single(BasisSpec::motional_even(n_even)?), mat)
    };
    Ok(EvenMotionOperators {
        x2: keep(&x2)?,
        x4: keep(&x4)?,
        p2: keep(&p2)?,
        trap: keep(&trap)?,
        profile: keep(&profile)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn annihilation_small_cases() {
        let a2 = annihilation(BasisSpec::cavity(2).unwrap());
        assert_eq!(a2.mat[(0, 1)], c(1.0));
        assert_eq!(a2.mat[(0, 0)], ZERO);
        assert_eq!(a2.mat[(1, 0)], ZERO);
        assert_eq!(a2.mat[(1, 1)], ZERO);

        let a3 = annihilation(BasisSpec::cavity(3).unwrap());
        assert!((a3.mat[(1, 2)] - c(2f64.sqrt())).norm() < 1e-15);

        let a = annihilation(BasisSpec::cavity(6).unwrap());
        let n = a.dagger().matmul(&a).unwrap();
        for i in 0..6 {
            assert!((n.mat[(i, i)] - c(i as f64)).norm() < 1e-14);
        }
    }

    #[test]
    fn quadrature_basics() {
        let (q, _) = quadratures(BasisSpec::cavity(2).unwrap()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((q.mat[(0, 1)] - c(s)).norm() < 1e-15);
        assert!((q.mat[(1, 0)] - c(s)).norm() < 1e-15);

        let d = 10;
        let (q, p) = quadratures(BasisSpec::cavity(d).unwrap()).unwrap();
        assert!(q.is_hermitian(1e-12) && p.is_hermitian(1e-12));
        let comm = q.commutator(&p).unwrap();
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let want = if i == j { C64::new(0.0, 1.0) } else { ZERO };
                assert!((comm.mat[(i, j)] - want).norm() < 1e-12, "[q,p] at ({i},{j})");
            }
        }
        let q2 = q.matmul(&q).unwrap();
        assert!((q2.mat[(0, 0)] - c(0.5)).norm() < 1e-14);
    }

    #[test]
    fn profile_scalar_checks() {
        // 1×1 "position" operators give the scalar profile
        let spec = BasisSpec::motional(1).unwrap();
        let at = |x: f64, xeq: f64| {
            let op = OperatorMatrix::new(Basis::Single(spec), Mat::from_fn(1, 1, |_, _| c(x))).unwrap();
            intensity_profile(&op, xeq).unwrap().mat[(0, 0)].re
        };
        assert!((at(0.0, 5.0) - 1.0).abs() < 1e-15);
        assert!(at(5.0, 5.0).abs() < 1e-15);
        assert!(at(-5.0, 5.0).abs() < 1e-15);
        assert!(at(3.0, 3.0).abs() < 1e-15);
        assert!((at(0.0, 3.0) - 1.0).abs() < 1e-15);

        let op = OperatorMatrix::identity(Basis::Single(spec));
        assert!(intensity_profile(&op, 0.0).is_err());
        assert!(intensity_profile(&op, -1.0).is_err());
    }

    #[test]
    fn even_projection_selection_rules() {
        let proj = even_projection(6).unwrap();
        assert_eq!(proj.indices, vec![0, 2, 4]);

        let spec = BasisSpec::motional(6).unwrap();
        let a = annihilation(spec);
        let n = proj.restrict(&a.dagger().matmul(&a).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { c(2.0 * i as f64) } else { ZERO };
                assert!((n.mat[(i, j)] - want).norm() < 1e-14);
            }
        }
        let (x, _) = quadratures(spec).unwrap();
        let xe = proj.restrict(&x).unwrap();
        assert!(linalg::max_abs(xe.mat.as_ref()) == 0.0);
        assert!(even_projection(1).is_err());
    }

    #[test]
    fn displacement_algebra() {
        let spec = BasisSpec::cavity(8).unwrap();
        let alpha = C64::new(0.7, -1.3);

        let a_d = displaced_rebase(&LadderPolynomial::annihilation(), alpha).to_matrix(spec);
        let want = annihilation(spec).add(&OperatorMatrix::identity(Basis::Single(spec)).scaled(alpha)).unwrap();
        assert!(max_abs_diff(a_d.mat.as_ref(), want.mat.as_ref()) < 1e-14);

        let n_d = displaced_rebase(&LadderPolynomial::number(), alpha);
        let expected = LadderPolynomial::number()
            .plus(&LadderPolynomial::creation().scaled(alpha))
            .plus(&LadderPolynomial::annihilation().scaled(alpha.conj()))
            .plus(&LadderPolynomial::identity().scaled(c(alpha.norm_sqr())));
        assert_eq!(n_d, expected);

        let same = displaced_rebase(&LadderPolynomial::number(), ZERO);
        assert_eq!(same, LadderPolynomial::number());

        // [a + α, a† + α*] = [a, a†] = I on the interior of the truncation
        let ad_d = displaced_rebase(&LadderPolynomial::creation(), alpha).to_matrix(spec);
        let comm = a_d.commutator(&ad_d).unwrap();
        let bare = annihilation(spec).commutator(&annihilation(spec).dagger()).unwrap();
        assert!(max_abs_diff(comm.mat.as_ref(), bare.mat.as_ref()) < 1e-13);
        for i in 0..7 {
            assert!((comm.mat[(i, i)] - ONE).norm() < 1e-13);
        }
    }

    #[test]
    fn tensor_conventions() {
        let i2 = OperatorMatrix::identity(Basis::Single(BasisSpec::cavity(2).unwrap()));
        let i3 = OperatorMatrix::identity(Basis::Single(BasisSpec::motional(3).unwrap()));
        let i6 = tensor(&i2, &i3).unwrap();
        assert!(max_abs_diff(i6.mat.as_ref(), linalg::identity(6).as_ref()) == 0.0);

        let a = annihilation(BasisSpec::cavity(3).unwrap());
        let (q, _) = quadratures(BasisSpec::motional(4).unwrap()).unwrap();
        let ic = OperatorMatrix::identity(a.basis);
        let im = OperatorMatrix::identity(q.basis);
        let lhs = tensor(&a, &im).unwrap().matmul(&tensor(&ic, &q).unwrap()).unwrap();
        let rhs = tensor(&a, &q).unwrap();
        assert!(max_abs_diff(lhs.mat.as_ref(), rhs.mat.as_ref()) < 1e-15);
        assert!(tensor(&rhs, &a).is_err());
    }

    #[test]
    fn buffered_construction_matches_direct_even_build() {
        let n = 10;
        let x_eq = 4.0;
        let ops = even_motion_operators(n, x_eq).unwrap();
        // direct even construction from the banded closed form of x²
        let x2_direct = Mat::from_fn(n, n, |i, j| {
            let (ni, nj) = (2 * i, 2 * j);
            if ni == nj {
                c(ni as f64 + 0.5)
            } else if nj == ni + 2 {
                c(((ni + 1) as f64 * (ni + 2) as f64).sqrt() / 2.0)
            } else if ni == nj + 2 {
                c(((nj + 1) as f64 * (nj + 2) as f64).sqrt() / 2.0)
            } else {
                ZERO
            }
        });
        let m = linalg::scale(x2_direct.as_ref(), c(1.0 / (x_eq * x_eq)));
        let shifted = &m - &linalg::identity(n);
        let f_direct = &shifted * &shifted;
        for i in 0..n - 2 {
            for j in 0..n - 2 {
                assert!((ops.x2.mat[(i, j)] - x2_direct[(i, j)]).norm() < 1e-10);
                assert!((ops.profile.mat[(i, j)] - f_direct[(i, j)]).norm() < 1e-10);
            }
        }
        for op in [&ops.x2, &ops.x4, &ops.p2, &ops.trap, &ops.profile] {
            assert!(op.hermiticity_defect() < 1e-12);
        }
        // trap Hamiltonian is diagonal with energies 2k + 1/2
        for k in 0..n {
            assert!((ops.trap.mat[(k, k)] - c(2.0 * k as f64 + 0.5)).norm() < 1e-12);
        }
    }
}
