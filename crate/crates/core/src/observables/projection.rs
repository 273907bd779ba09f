//! Fock-truncated half-axis operator P₊ with ⟨m|P₊|n⟩ = ∫₀^∞ φ_m φ_n dx.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::Mat;

use super::SingleMode;
use crate::linalg::ZERO;
use crate::{Error, Result, C64};

/// Gauss–Legendre panels on [0, L].
const PANELS: usize = 64;
const ORDER: usize = 24;

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            let dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// φ_0..φ_{dim−1} at x by the normalized three-term recurrence.
fn hermite_functions(x: f64, dim: usize, out: &mut [f64]) {
    out[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if dim > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

fn build(dim: usize) -> Mat<f64> {
    let (gx, gw) = gauss_legendre(ORDER);
    let upper = (2.0 * dim as f64 + 1.0).sqrt() + 12.0;
    let h = upper / PANELS as f64;
    let mut p = Mat::<f64>::zeros(dim, dim);
    let mut phi = vec![0.0; dim];
    for panel in 0..PANELS {
        let a = panel as f64 * h;
        for (&t, &wt) in gx.iter().zip(&gw) {
            let x = a + 0.5 * h * (t + 1.0);
            let w = 0.5 * h * wt;
            hermite_functions(x, dim, &mut phi);
            for n in 0..dim {
                for m in 0..dim {
                    // same parity is fixed exactly by symmetry below
                    if (m + n) % 2 == 1 {
                        p[(m, n)] += w * phi[m] * phi[n];
                    }
                }
            }
        }
    }
    for n in 0..dim {
        p[(n, n)] = 0.5;
    }
    p
}

/// P₊ truncated to `dim` Fock states (cached per dimension).
pub fn positive_axis_operator(dim: usize) -> Arc<Mat<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Mat<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard.entry(dim).or_insert_with(|| Arc::new(build(dim))).clone()
}

/// P₊ρP₊ / tr(P₊ρP₊) for a motional state in the full Fock basis.
pub fn project_positive(mode: &SingleMode) -> Result<SingleMode> {
    let d = mode.dim();
    let p = positive_axis_operator(d);
    let pc = Mat::from_fn(d, d, |i, j| C64::new(p[(i, j)], 0.0));
    let out = &pc * &mode.rho * &pc;
    let tr: C64 = (0..d).map(|i| out[(i, i)]).sum();
    if tr.re < 1e-10 {
        return Err(Error::DegenerateProjection(tr.re));
    }
    let rho = Mat::from_fn(d, d, |i, j| if tr == ZERO { ZERO } else { out[(i, j)] / tr.re });
    Ok(SingleMode { rho, offset: mode.offset })
}
