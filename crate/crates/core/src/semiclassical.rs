//! Semiclassical equilibria of the ion in the cavity-modified potential.
//!
//! With z = 1 − (x̄/x_eq)² the total potential is
//! V(x̄) = (η²/κ)·arctan(C(z² − 1 + c)) + x̄²/2, and side equilibria are the
//! roots in (0, 1) of the quartic h(z) = 1 + C²(z² − 1 + c)² − 4Cγz.
//! Everything here depends on (C, c, γ) only, up to the overall energy
//! scale η²/κ.

use faer::Mat;

use crate::model::SystemParams;
use crate::{linalg, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Center,
    Side,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalEquilibrium {
    pub x_bar: f64,
    pub photon_amplitude: C64,
    pub stable: bool,
    pub branch: Branch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransitionType {
    Continuous,
    Discontinuous,
}

impl TransitionType {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransitionType::Continuous => "continuous",
            TransitionType::Discontinuous => "discontinuous",
        }
    }
}

/// Δ_eff(x̄) = Δ_c − U₀ f(x̄).
pub fn delta_eff(x: f64, p: &SystemParams) -> f64 {
    let s = (x / p.x_eq).powi(2) - 1.0;
    p.delta_c() - p.u0() * s * s
}

/// (η²/κ)·arctan(−Δ_eff(x̄)/κ).
pub fn effective_potential(x: f64, p: &SystemParams) -> f64 {
    p.eta() * p.eta() / p.kappa * (-delta_eff(x, p) / p.kappa).atan()
}

pub fn total_potential(x: f64, p: &SystemParams) -> f64 {
    effective_potential(x, p) + 0.5 * x * x
}

/// dV/dx̄ in closed form.
pub fn potential_derivative(x: f64, p: &SystemParams) -> f64 {
    let (cc, c) = (p.coop, p.detuning);
    let z = 1.0 - (x / p.x_eq).powi(2);
    let s = cc * (z * z - 1.0 + c);
    x * (1.0 - 4.0 * cc * p.gamma() * z / (1.0 + s * s))
}

/// ā = η/(κ − iΔ_eff(x̄)).
pub fn photon_amplitude(x: f64, p: &SystemParams) -> C64 {
    C64::new(p.eta(), 0.0) / C64::new(p.kappa, -delta_eff(x, p))
}

/// η²/(κ² + Δ_eff²(x̄)).
pub fn mean_photon_semiclassical(x: f64, p: &SystemParams) -> f64 {
    let d = delta_eff(x, p);
    p.eta() * p.eta() / (p.kappa * p.kappa + d * d)
}

fn quartic(z: f64, cc: f64, c: f64, gamma: f64) -> f64 {
    let s = z * z - 1.0 + c;
    1.0 + cc * cc * s * s - 4.0 * cc * gamma * z
}

fn quartic_prime(z: f64, cc: f64, c: f64, gamma: f64) -> f64 {
    4.0 * cc * cc * z * (z * z - 1.0 + c) - 4.0 * cc * gamma
}

/// Real roots of h(z) in the open interval (0, 1), ascending.
fn side_roots(cc: f64, c: f64, gamma: f64) -> Vec<f64> {
    let u = c - 1.0;
    // monic: z⁴ + 2u z² − (4γ/C) z + (1 + C²u²)/C²
    let coeffs = [(1.0 + cc * cc * u * u) / (cc * cc), -4.0 * gamma / cc, 2.0 * u, 0.0];
    let companion = Mat::from_fn(4, 4, |i, j| {
        if j == 3 {
            -coeffs[i]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let Ok(eigs) = linalg::real_eigenvalues(companion.as_ref()) else {
        return Vec::new();
    };
    let mut roots: Vec<f64> = Vec::new();
    for e in eigs {
        if e.im.abs() > 1e-6 {
            continue;
        }
        let mut z = e.re;
        for _ in 0..50 {
            let d = quartic_prime(z, cc, c, gamma);
            if d == 0.0 {
                break;
            }
            let step = quartic(z, cc, c, gamma) / d;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        if z > 0.0 && z < 1.0 && !roots.iter().any(|r| (r - z).abs() < 1e-9) {
            roots.push(z);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Side equilibria (positive representative x̄ > 0).
///
/// A side root is a minimum of V when h'(z) < 0; the intermediate root
/// between the two branches of a bistable window is a maximum.
pub fn side_equilibria(p: &SystemParams) -> Vec<ClassicalEquilibrium> {
    let gamma = p.gamma();
    side_roots(p.coop, p.detuning, gamma)
        .into_iter()
        .map(|z| {
            let x = p.x_eq * (1.0 - z).sqrt();
            ClassicalEquilibrium {
                x_bar: x,
                photon_amplitude: photon_amplitude(x, p),
                stable: quartic_prime(z, p.coop, p.detuning, gamma) < 0.0,
                branch: Branch::Side,
            }
        })
        .collect()
}

pub fn center_equilibrium(p: &SystemParams) -> ClassicalEquilibrium {
    ClassicalEquilibrium {
        x_bar: 0.0,
        photon_amplitude: photon_amplitude(0.0, p),
        stable: p.gamma() < center_critical_gamma(p.coop, p.detuning),
        branch: Branch::Center,
    }
}

/// γ_c^(0) = (1 + c²C²)/(4C): the center loses stability above it.
pub fn center_critical_gamma(cc: f64, c: f64) -> f64 {
    (1.0 + c * c * cc * cc) / (4.0 * cc)
}

/// Closed-form fold of the side branch at c = 1.
pub fn side_critical_gamma_resonant(cc: f64) -> f64 {
    1.0 / (3f64.powf(0.75) * cc.sqrt())
}

/// Fold point (z, γ) of the side branch, found by continuation in c from
/// the resonant case. Returns `None` when the fold lies outside z ∈ (0, 1).
pub fn side_fold(cc: f64, c: f64) -> Option<(f64, f64)> {
    // fold: h = 0 and h' = 0; eliminating γ = C z (z² + u) leaves
    // F(w) = 1 + C²(w + u)² − 4C² w (w + u) = 0 in w = z²
    let target = c - 1.0;
    let steps = ((target.abs() / 0.01).ceil() as usize).max(1);
    let mut w = 1.0 / (3f64.sqrt() * cc);
    for k in 1..=steps {
        let u = target * k as f64 / steps as f64;
        for _ in 0..60 {
            let f = 1.0 + cc * cc * (w + u).powi(2) - 4.0 * cc * cc * w * (w + u);
            let df = -6.0 * cc * cc * w - 2.0 * cc * cc * u;
            let step = f / df;
            w -= step;
            if step.abs() < 1e-15 * w.abs().max(1.0) {
                break;
            }
        }
    }
    if !(w > 0.0) {
        return None;
    }
    let z = w.sqrt();
    let gamma = cc * z * (w + target);
    (z < 1.0 && gamma > 0.0).then_some((z, gamma))
}

/// γ_c^(s); `None` for a continuous transition.
pub fn side_critical_gamma(cc: f64, c: f64) -> Option<f64> {
    side_fold(cc, c).map(|(_, g)| g)
}

/// C_crit = 1/√(c(4 − c)) for c ∈ (0, 4).
pub fn critical_cooperativity(c: f64) -> Option<f64> {
    (c > 0.0 && c < 4.0).then(|| 1.0 / (c * (4.0 - c)).sqrt())
}

pub fn transition_type(cc: f64, c: f64) -> TransitionType {
    match critical_cooperativity(c) {
        Some(crit) if cc > crit => TransitionType::Discontinuous,
        _ => TransitionType::Continuous,
    }
}

/// η/√κ corresponding to a given γ.
pub fn eta_scaled_for_gamma(gamma: f64, x_eq: f64) -> f64 {
    (gamma * x_eq * x_eq).sqrt()
}

#[derive(Clone, Debug)]
pub struct BifurcationBranch {
    pub eta_grid: Vec<f64>,
    /// Stable x̄ per grid point, ascending.
    pub minima: Vec<Vec<f64>>,
    pub global_min: Vec<f64>,
    pub gamma_c0: f64,
    pub gamma_cs: Option<f64>,
    /// η/√κ where the global minimum jumps from the center to the side.
    pub global_min_switch: Option<f64>,
    pub transition: TransitionType,
}

/// Local minima of V on [0, x_eq] at the pump strength in `p`.
pub fn local_minima(p: &SystemParams) -> Vec<f64> {
    let mut out = Vec::new();
    if center_equilibrium(p).stable {
        out.push(0.0);
    }
    out.extend(side_equilibria(p).into_iter().filter(|e| e.stable).map(|e| e.x_bar));
    if out.is_empty() {
        // marginal center exactly at γ_c^(0)
        out.push(0.0);
    }
    out
}

/// Global minimum; near-ties go to the center.
pub fn global_minimum(p: &SystemParams) -> f64 {
    let minima = local_minima(p);
    let v0 = total_potential(0.0, p);
    let mut best = minima[0];
    let mut best_v = total_potential(best, p);
    for &x in &minima[1..] {
        let v = total_potential(x, p);
        if v < best_v - 1e-12 * best_v.abs().max(1.0) {
            best = x;
            best_v = v;
        }
    }
    if best != 0.0 && minima.contains(&0.0) && (best_v - v0).abs() <= 1e-12 * v0.abs().max(1.0) {
        return 0.0;
    }
    best
}

/// V(side minimum) − V(0) when both are minima.
fn side_minus_center(eta: f64, p: &SystemParams) -> Option<f64> {
    let q = SystemParams { eta_scaled: eta, ..p.clone() };
    let side = side_equilibria(&q).into_iter().filter(|e| e.stable).map(|e| e.x_bar).next()?;
    Some(total_potential(side, &q) - total_potential(0.0, &q))
}

pub fn bifurcation_scan(p: &SystemParams, eta_grid: &[f64]) -> BifurcationBranch {
    let (cc, c) = (p.coop, p.detuning);
    let mut minima = Vec::with_capacity(eta_grid.len());
    let mut global = Vec::with_capacity(eta_grid.len());
    for &eta in eta_grid {
        let q = SystemParams { eta_scaled: eta, ..p.clone() };
        minima.push(local_minima(&q));
        global.push(global_minimum(&q));
    }
    let gamma_cs = side_critical_gamma(cc, c);
    let mut switch = None;
    if let Some(gcs) = gamma_cs {
        // the switch lies where both minima coexist, so bisect inside the window
        let mut lo = eta_scaled_for_gamma(gcs, p.x_eq) * (1.0 + 1e-12);
        let mut hi = eta_scaled_for_gamma(center_critical_gamma(cc, c), p.x_eq) * (1.0 - 1e-12);
        if let (Some(flo), Some(fhi)) = (side_minus_center(lo, p), side_minus_center(hi, p)) {
            if flo > 0.0 && fhi <= 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    match side_minus_center(mid, p) {
                        Some(f) if f > 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                    if hi - lo < 1e-13 * hi {
                        break;
                    }
                }
                switch = Some(0.5 * (lo + hi));
            }
        }
    }
    BifurcationBranch {
        eta_grid: eta_grid.to_vec(),
        minima,
        global_min: global,
        gamma_c0: center_critical_gamma(cc, c),
        gamma_cs,
        global_min_switch: switch,
        transition: transition_type(cc, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(cc: f64, c: f64, x_eq: f64, eta: f64) -> SystemParams {
        SystemParams { coop: cc, detuning: c, x_eq, eta_scaled: eta, kappa: 1.0, ..SystemParams::default() }
    }

    #[test]
    fn potential_examples() {
        let p = params(2.0, 1.0, 5.0, 0.0);
        for x in [0.0, 1.0, 4.0] {
            assert_eq!(effective_potential(x, &p), 0.0);
            assert!((total_potential(x, &p) - 0.5 * x * x).abs() < 1e-15);
        }
        let p = params(2.0, 1.0, 5.0, 1.7);
        assert!(effective_potential(5.0, &p).abs() < 1e-15);
        assert!(effective_potential(-5.0, &p).abs() < 1e-15);
        assert!((effective_potential(0.0, &p) - 1.7f64.powi(2) * 2f64.atan()).abs() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = params(1.3, 0.7, 4.0, 2.2);
        for x in [0.3, 1.1, 2.5, 3.9] {
            let h = 1e-6;
            let fd = (total_potential(x + h, &p) - total_potential(x - h, &p)) / (2.0 * h);
            assert!((fd - potential_derivative(x, &p)).abs() < 1e-7);
        }
    }

    #[test]
    fn photon_number_examples() {
        let p = params(2.0, 1.0, 5.0, 2.0);
        assert!((mean_photon_semiclassical(0.0, &p) - 0.8).abs() < 1e-14);
        assert!((mean_photon_semiclassical(5.0, &p) - 4.0).abs() < 1e-14);
        assert_eq!(mean_photon_semiclassical(1.0, &params(2.0, 1.0, 5.0, 0.0)), 0.0);
        let a = photon_amplitude(1.3, &p);
        assert!((a.norm_sqr() - mean_photon_semiclassical(1.3, &p)).abs() < 1e-14);
    }

    #[test]
    fn critical_values() {
        assert!((center_critical_gamma(2.0, 1.0) - 0.625).abs() < 1e-15);
        assert!((center_critical_gamma(0.5, 1.0) - 0.625).abs() < 1e-15);
        let g = center_critical_gamma(1e6, 0.5);
        assert!((g / (0.25 * 1e6 * 0.25) - 1.0).abs() < 1e-6);

        let gcs = side_critical_gamma(2.0, 1.0).unwrap();
        assert!((gcs - side_critical_gamma_resonant(2.0)).abs() < 1e-10);
        assert!((gcs - 0.310_201_619_700_7).abs() < 1e-12);
        assert!((eta_scaled_for_gamma(gcs, 5.0) - 2.784_787).abs() < 1e-6);
        assert!((eta_scaled_for_gamma(0.625, 5.0) - 3.9528).abs() < 1e-4);
        assert!((side_critical_gamma_resonant(0.5) - 0.6204).abs() < 1e-4);
        assert!(side_critical_gamma(0.5, 1.0).is_none());

        assert!((critical_cooperativity(1.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(critical_cooperativity(5.0).is_none());
        assert_eq!(transition_type(0.5, 1.0), TransitionType::Continuous);
        assert_eq!(transition_type(2.0, 1.0), TransitionType::Discontinuous);
        for cc in [0.1, 1.0, 10.0, 1e3] {
            assert_eq!(transition_type(cc, 5.0), TransitionType::Continuous);
        }
    }

    #[test]
    fn continuation_matches_closed_form_fold() {
        for &(cc, c) in &[(2.0, 0.3), (2.0, 2.5), (1.0, 1.8), (5.0, 0.2), (0.9, 1.2)] {
            let u: f64 = c - 1.0;
            let w = (-u + (4.0 * u * u + 3.0 / (cc * cc)).sqrt()) / 3.0;
            let z = w.sqrt();
            let (zf, gf) = side_fold(cc, c).unwrap();
            assert!((zf - z).abs() < 1e-10, "C={cc} c={c}");
            assert!((gf - cc * z * (w + u)).abs() < 1e-10);
            assert!(gf <= center_critical_gamma(cc, c));
        }
    }

    #[test]
    fn fold_is_a_double_root_at_resonance() {
        let cc = 2.0;
        let g = side_critical_gamma_resonant(cc);
        let z = (3.0 * cc * cc).powf(-0.25);
        assert!(quartic(z, cc, 1.0, g).abs() < 1e-12);
        assert!(quartic_prime(z, cc, 1.0, g).abs() < 1e-12);
        let p = params(cc, 1.0, 5.0, eta_scaled_for_gamma(g, 5.0));
        let eq = side_equilibria(&p);
        assert!(!eq.is_empty());
        let xs = 5.0 * (1.0 - z).sqrt();
        assert!(eq.iter().any(|e| (e.x_bar - xs).abs() < 1e-4));
    }

    #[test]
    fn side_branch_limits() {
        let below = params(2.0, 1.0, 5.0, 2.5);
        assert!(side_equilibria(&below).is_empty());
        assert_eq!(local_minima(&below), vec![0.0]);

        let huge = params(2.0, 1.0, 5.0, 400.0);
        let eq = side_equilibria(&huge);
        assert_eq!(eq.len(), 1);
        assert!(eq[0].stable && (eq[0].x_bar - 5.0).abs() < 1e-3);

        for e in side_equilibria(&params(2.0, 1.0, 5.0, 3.5)) {
            assert!(e.x_bar > 0.0 && e.x_bar < 5.0);
            let a = photon_amplitude(e.x_bar, &huge);
            assert_eq!(e.photon_amplitude.re.signum(), a.re.signum());
        }
    }

    #[test]
    fn bifurcation_structure() {
        let grid: Vec<f64> = (0..=80).map(|i| 0.05 * i as f64).collect();
        let weak = bifurcation_scan(&params(0.5, 1.0, 3.0, 0.0), &grid);
        assert!(weak.gamma_cs.is_none() && weak.global_min_switch.is_none());
        assert!(weak.minima.iter().all(|m| m.len() == 1));
        assert!(weak.global_min.windows(2).all(|w| w[1] >= w[0] - 1e-12));

        let strong = bifurcation_scan(&params(2.0, 1.0, 3.0, 0.0), &grid);
        let (lo, hi) =
            (eta_scaled_for_gamma(strong.gamma_cs.unwrap(), 3.0), eta_scaled_for_gamma(strong.gamma_c0, 3.0));
        for (eta, m) in grid.iter().zip(&strong.minima) {
            let inside = *eta > lo && *eta < hi;
            assert_eq!(m.len() == 2, inside, "eta={eta} minima={m:?}");
        }
        let sw = strong.global_min_switch.unwrap();
        assert!(sw > lo && sw < hi);
        let q = params(2.0, 1.0, 3.0, sw);
        let side = local_minima(&q)[1];
        assert!((total_potential(side, &q) - total_potential(0.0, &q)).abs() < 1e-9);
    }
}
