#![allow(dead_code)]

use faer::Mat;
use ion_cavity::model::SystemParams;
use ion_cavity::steady::DensityMatrix;
use ion_cavity::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Mat<C64> {
    Mat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> Mat<C64> {
    let m = random_matrix(rng, d);
    Mat::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// G G† / tr, optionally of low rank.
pub fn random_state(rng: &mut ChaCha8Rng, n_cav: usize, n_mot: usize, rank: usize) -> DensityMatrix {
    let d = n_cav * n_mot;
    let g = Mat::from_fn(d, rank, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let rho = &g * g.adjoint();
    DensityMatrix::normalized(rho.as_ref(), n_cav, n_mot).unwrap()
}

pub fn small_params(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams {
        coop: rng.gen_range(0.3..3.0),
        detuning: rng.gen_range(0.0..2.0),
        kappa: rng.gen_range(0.5..1.5),
        x_eq: rng.gen_range(3.0..6.0),
        eta_scaled: rng.gen_range(0.0..3.0),
        n_cav: rng.gen_range(2..5),
        n_mot: rng.gen_range(1..4),
        ..SystemParams::default()
    }
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}
