mod common;

use faer::Mat;
use ion_cavity::observables::{
    default_axes, entropies, husimi, log_negativity, mutual_information, non_gaussianity, wehrl_entropy, SingleMode,
};
use ion_cavity::C64;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::Rng;

use common::{random_state, rng};

/// Random single-mode state concentrated on low Fock numbers.
fn random_mode(seed: u64, dim: usize) -> SingleMode {
    let mut r = rng(seed);
    let rank = r.gen_range(1..=3);
    let g = Mat::from_fn(dim, rank, |i, _| {
        let damp = 0.6f64.powi(i as i32);
        C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)) * damp
    });
    let rho = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| rho[(i, i)].re).sum();
    SingleMode::new(Mat::from_fn(dim, dim, |i, j| rho[(i, j)] / tr))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, rng_seed: RngSeed::Fixed(24), ..ProptestConfig::default() })]

    #[test]
    fn entropy_subadditivity_and_entanglement_witness(seed in any::<u64>(), nc in 2usize..4, nm in 2usize..4, rank in 1usize..5) {
        let rho = random_state(&mut rng(seed), nc, nm, rank);
        let s = entropies(&rho).unwrap();
        let info = mutual_information(&rho).unwrap();
        prop_assert!(s.total <= s.cavity + s.motion + 1e-10);
        prop_assert!(info >= -1e-10);
        let en = log_negativity(&rho).unwrap();
        prop_assert!(en >= -1e-12);
        if en > 1e-8 {
            prop_assert!(info > 0.0);
        }
    }

    #[test]
    fn wehrl_bound_and_non_gaussianity_sign(seed in any::<u64>()) {
        let mode = random_mode(seed, 8);
        let (re, im) = default_axes(&mode, 161).unwrap();
        let q = husimi(&mode, re, im);
        prop_assert!(wehrl_entropy(&q).unwrap() >= 1.0 - 1e-3);
        let ng = non_gaussianity(&mode, re, im).unwrap();
        prop_assert!(ng.value >= -1e-3, "{:?}", ng);
    }
}
