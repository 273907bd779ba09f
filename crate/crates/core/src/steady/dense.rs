//! Full diagonalization of the materialized Liouvillian, feasible only for
//! tiny cutoffs and used as a test oracle.

use faer::Mat;

use super::arnoldi::SpectrumResult;
use crate::linalg::{self, ONE, ZERO};
use crate::model::{lindblad_apply, SystemOperators};
use crate::{Error, Result, C64};

pub const ORACLE_MAX_DIM: usize = 36;

/// D²×D² matrix of L acting on column-major vectorized states.
pub fn liouvillian_matrix(ops: &SystemOperators) -> Result<Mat<C64>> {
    let d = ops.dim();
    if d > ORACLE_MAX_DIM {
        return Err(Error::OracleTooLarge { dim: d, max: ORACLE_MAX_DIM });
    }
    let n = d * d;
    let mut l = Mat::zeros(n, n);
    let mut e = Mat::<C64>::zeros(d, d);
    for col in 0..n {
        let (i, j) = (col % d, col / d);
        e[(i, j)] = ONE;
        let out = lindblad_apply(ops, e.as_ref())?;
        e[(i, j)] = ZERO;
        for q in 0..d {
            for p in 0..d {
                l[(p + q * d, col)] = out[(p, q)];
            }
        }
    }
    Ok(l)
}

/// Full spectrum via dense eigendecomposition; map eigenvalues are
/// exp(ν·t_map) so the result follows the same ordering as the map solver.
pub fn dense_oracle(ops: &SystemOperators) -> Result<SpectrumResult> {
    let l = liouvillian_matrix(ops)?;
    let d = ops.dim();
    let (nu, vecs) = linalg::eigen(l.as_ref())?;
    let t_map = ops.params.t_map;
    let mut order: Vec<usize> = (0..nu.len()).collect();
    order.sort_by(|&a, &b| nu[b].re.total_cmp(&nu[a].re).then(nu[a].im.total_cmp(&nu[b].im)));
    let vectors: Vec<Mat<C64>> = order.iter().map(|&k| Mat::from_fn(d, d, |p, q| vecs[(p + q * d, k)])).collect();
    let residuals = order
        .iter()
        .zip(&vectors)
        .map(|(&k, v)| {
            let lv = lindblad_apply(ops, v.as_ref()).unwrap_or_else(|_| Mat::zeros(d, d));
            let r = &lv - &linalg::scale(v.as_ref(), nu[k]);
            linalg::frobenius(r.as_ref())
        })
        .collect();
    let liouv: Vec<C64> = order.iter().map(|&k| nu[k]).collect();
    let map: Vec<C64> = liouv.iter().map(|v| (v * t_map).exp()).collect();
    SpectrumResult::from_pairs(
        map,
        liouv,
        &vectors,
        residuals,
        0,
        (ops.params.n_cav, ops.params.n_mot),
        ops.params.kappa,
        1e-10,
    )
}
