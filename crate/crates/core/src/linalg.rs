//! Small dense/sparse linear-algebra helpers on top of `faer`.

use faer::{Mat, MatRef, Side};

use crate::{Error, Result, C64};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn trace(m: MatRef<'_, C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// tr(A B) without forming the product.
pub fn trace_product(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for j in 0..n {
        for k in 0..a.ncols() {
            acc += a[(j, k)] * b[(k, j)];
        }
    }
    acc
}

/// Frobenius pairing ⟨A, B⟩ = tr(A† B).
pub fn inner(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> C64 {
    let mut acc = ZERO;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn max_abs(a: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// ‖A − A†‖_max.
pub fn hermiticity_defect(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn dagger(a: MatRef<'_, C64>) -> Mat<C64> {
    a.adjoint().to_owned()
}

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn scale(a: MatRef<'_, C64>, s: C64) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// Kronecker product with `a` as the slow (outer) index.
pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// (A + A†)/2.
pub fn hermitian_part(a: MatRef<'_, C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    let h = hermitian_part(a);
    h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("hermitian eigenvalues: {e:?}")))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors as columns.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let h = hermitian_part(a);
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("hermitian eigen: {e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// Real symmetric eigen-decomposition.
pub fn symmetric_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::LinearAlgebra(format!("symmetric eigen: {e:?}")))?;
    let s = evd.S().column_vector();
    Ok(((0..s.nrows()).map(|i| s[i]).collect(), evd.U().to_owned()))
}

/// General complex eigen-decomposition (eigenvectors as columns, unit norm).
pub fn eigen(a: MatRef<'_, C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let evd = a.to_owned().eigen().map_err(|e| Error::LinearAlgebra(format!("eigen: {e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i]).collect();
    let mut u = evd.U().to_owned();
    for j in 0..u.ncols() {
        let n = u.col(j).norm_l2();
        if n > 0.0 {
            for i in 0..u.nrows() {
                u[(i, j)] /= n;
            }
        }
    }
    Ok((vals, u))
}

/// Eigenvalues of a real (possibly non-symmetric) matrix.
pub fn real_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<C64>> {
    a.to_owned().eigenvalues().map_err(|e| Error::LinearAlgebra(format!("eigenvalues: {e:?}")))
}

/// Compressed-row sparse complex matrix, used for the composite Hamiltonian
/// and jump operators whose dense products dominate the cost of the
/// Lindblad action.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    pub fn from_dense(a: MatRef<'_, C64>, drop_tol: f64) -> Self {
        let n = a.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v.norm() > drop_tol {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// out = self · x
    pub fn mul_dense_into(&self, x: MatRef<'_, C64>, out: &mut Mat<C64>) {
        let ncols = x.ncols();
        for j in 0..ncols {
            let xc = x.col(j);
            for i in 0..self.n {
                let mut acc = ZERO;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[k] * xc[self.cols[k]];
                }
                out[(i, j)] = acc;
            }
        }
    }

    /// out = x · self†
    pub fn dense_mul_adjoint_into(&self, x: MatRef<'_, C64>, out: &mut Mat<C64>) {
        // (x S†)_{ij} = Σ_k x_{ik} conj(S_{jk})
        let nrows = x.nrows();
        for j in 0..self.n {
            for i in 0..nrows {
                out[(i, j)] = ZERO;
            }
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                let s = self.vals[k].conj();
                let xc = x.col(self.cols[k]);
                for i in 0..nrows {
                    out[(i, j)] += xc[i] * s;
                }
            }
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> Mat<C64> {
        let mut s = seed;
        Mat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            C64::new(a, b)
        })
    }

    #[test]
    fn sparse_products_match_dense() {
        let mut a = sample(7, 3);
        for i in 0..7 {
            for j in 0..7 {
                if (i + 2 * j) % 3 == 0 {
                    a[(i, j)] = ZERO;
                }
            }
        }
        let x = sample(7, 9);
        let s = SparseMatrix::from_dense(a.as_ref(), 0.0);
        let mut out = Mat::zeros(7, 7);
        s.mul_dense_into(x.as_ref(), &mut out);
        assert!(max_abs_diff(out.as_ref(), (&a * &x).as_ref()) < 1e-13);
        s.dense_mul_adjoint_into(x.as_ref(), &mut out);
        assert!(max_abs_diff(out.as_ref(), (&x * a.adjoint()).as_ref()) < 1e-13);
    }

    #[test]
    fn kron_trace_multiplies() {
        let a = sample(3, 1);
        let b = sample(4, 2);
        let k = kron(a.as_ref(), b.as_ref());
        let lhs = trace(k.as_ref());
        let rhs = trace(a.as_ref()) * trace(b.as_ref());
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn eigen_reconstructs() {
        let a = sample(6, 5);
        let (vals, vecs) = eigen(a.as_ref()).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let col = vecs.col(k);
            let av = &a * col;
            for i in 0..6 {
                assert!((av[i] - *v * col[i]).norm() < 1e-10);
            }
        }
    }
}
