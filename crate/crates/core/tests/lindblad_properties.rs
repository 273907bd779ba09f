mod common;

use faer::Mat;
use ion_cavity::model::{build_operators, lindblad_apply, SystemParams};
use ion_cavity::steady::{
    dense_oracle, liouvillian_matrix, steady_state_krylov, EulerMap, KrylovOptions, SpectralAction,
};
use ion_cavity::{linalg, C64};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use common::{max_abs, random_hermitian, random_matrix, rng, small_params};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, rng_seed: RngSeed::Fixed(24), ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn generator_is_traceless_and_hermiticity_preserving(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ops = build_operators(&small_params(&mut r)).unwrap();
        let rho = random_hermitian(&mut r, ops.dim());
        let out = lindblad_apply(&ops, rho.as_ref()).unwrap();
        let scale = max_abs(&out).max(1.0);
        prop_assert!(linalg::trace(out.as_ref()).norm() < 1e-12 * scale);
        prop_assert!(linalg::hermiticity_defect(out.as_ref()) < 1e-12 * scale);
    }

    #[test]
    fn map_is_linear_and_trace_preserving(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = SystemParams { dt: 1e-4, t_map: 0.1, ..small_params(&mut r) };
        let ops = build_operators(&p).unwrap();
        let map = EulerMap::new(&ops, p.t_map, p.dt).unwrap();
        let x = random_matrix(&mut r, ops.dim());
        let y = random_matrix(&mut r, ops.dim());
        let (a, b) = (C64::new(0.7, -0.2), C64::new(-1.3, 0.5));
        let combo = Mat::from_fn(ops.dim(), ops.dim(), |i, j| a * x[(i, j)] + b * y[(i, j)]);
        let lhs = map.apply(combo.as_ref()).unwrap();
        let mx = map.apply(x.as_ref()).unwrap();
        let my = map.apply(y.as_ref()).unwrap();
        let rhs = Mat::from_fn(ops.dim(), ops.dim(), |i, j| a * mx[(i, j)] + b * my[(i, j)]);
        prop_assert!(linalg::max_abs_diff(lhs.as_ref(), rhs.as_ref()) < 1e-12 * max_abs(&lhs).max(1.0));

        let h = random_hermitian(&mut r, ops.dim());
        let out = map.apply(h.as_ref()).unwrap();
        let (t0, t1) = (linalg::trace(h.as_ref()), linalg::trace(out.as_ref()));
        prop_assert!((t0 - t1).norm() < 1e-10 * t0.norm().max(1.0));
    }

    #[test]
    fn spectrum_comes_in_conjugate_pairs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ops = build_operators(&small_params(&mut r)).unwrap();
        let l = liouvillian_matrix(&ops).unwrap();
        let vals = linalg::eigen(l.as_ref()).unwrap().0;
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for v in &vals {
            let partner = vals.iter().map(|w| (w - v.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(partner < 1e-8 * scale, "{v} has no conjugate partner ({partner:e})");
        }
        prop_assert!(vals.iter().all(|v| v.re < 1e-9 * scale));
    }

    #[test]
    fn steady_states_are_physical(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ops = build_operators(&small_params(&mut r)).unwrap();
        let dense = dense_oracle(&ops).unwrap();
        dense.steady_state.check(1e-10, 1e-10, 1e-10).unwrap();
        let kry = steady_state_krylov(&ops, &KrylovOptions::default(), None).unwrap();
        prop_assert!(kry.converged);
        kry.state.check(1e-10, 1e-10, 1e-9).unwrap();
        if !dense.multistable {
            prop_assert!(kry.state.trace_distance(&dense.steady_state).unwrap() < 1e-7);
        }
    }
}
