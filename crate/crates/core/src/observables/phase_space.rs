//! Gaussian moments, Husimi functions, Wehrl entropy and non-Gaussianity.
//!
//! Phase-space convention: α = (q + ip)/√2 with q = (a + a†)/√2 and
//! p = i(a† − a)/√2, so Q(α) = ⟨α|ρ|α⟩ integrates to π over d²α.

use faer::Mat;

use super::SingleMode;
use crate::linalg::ZERO;
use crate::{Error, Result, C64};

/// Allowed deviation of (1/π)∫Q d²α from one.
pub const NORMALIZATION_TOL: f64 = 1e-3;
/// Slack on det σ ≥ 1/4.
const UNCERTAINTY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentData {
    /// (⟨q⟩, ⟨p⟩)
    pub first: [f64; 2],
    /// σ_ij = ½⟨{R_i, R_j}⟩ − ⟨R_i⟩⟨R_j⟩
    pub covariance: [[f64; 2]; 2],
}

impl MomentData {
    pub fn center(&self) -> C64 {
        C64::new(self.first[0], self.first[1]) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// First and second moments of the physical quadratures.
pub fn gaussian_moments(mode: &SingleMode) -> Result<MomentData> {
    let d = mode.dim();
    let rho = &mode.rho;
    let at = |i: usize, j: usize| if i < d && j < d { rho[(i, j)] } else { ZERO };
    // moments of b in the working basis; the grid is padded so the top
    // level keeps its full b†b and b b† weight
    let mut mb = ZERO;
    let mut mbb = ZERO;
    let mut mn = 0.0;
    for n in 0..d {
        mn += n as f64 * at(n, n).re;
        mb += (n as f64 + 1.0).sqrt() * at(n + 1, n);
        mbb += ((n as f64 + 1.0) * (n as f64 + 2.0)).sqrt() * at(n + 2, n);
    }
    // ⟨b⟩ = Σ √(n+1) ρ_{n+1,n}: tr(ρ b) = Σ_n ρ_{n+1,n}·⟨n|b|n+1⟩
    let s = std::f64::consts::SQRT_2;
    let a = mode.offset;
    let mean_a = mb + a;
    let q = s * mean_a.re;
    let p = s * mean_a.im;
    // variances are displacement invariant: use b moments
    let var_q = 0.5 * (2.0 * mbb.re + 2.0 * mn + 1.0) - 2.0 * mb.re * mb.re;
    let var_p = 0.5 * (-2.0 * mbb.re + 2.0 * mn + 1.0) - 2.0 * mb.im * mb.im;
    let cov = mbb.im - 2.0 * mb.re * mb.im;
    let sigma = [[var_q, cov], [cov, var_p]];
    let det = var_q * var_p - cov * cov;
    if !(var_q > 0.0 && var_p > 0.0 && det >= 0.25 - UNCERTAINTY_TOL) {
        return Err(Error::NumericalState(format!(
            "covariance violates the uncertainty relation: det σ = {det:e}, diag ({var_q:e}, {var_p:e})"
        )));
    }
    Ok(MomentData { first: [q, p], covariance: sigma })
}

/// Uniform axis of `n` cell midpoints covering [center − half_width, center + half_width].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub center: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(center: f64, half_width: f64, n: usize) -> Result<Self> {
        if n == 0 || !(half_width > 0.0) || !center.is_finite() {
            return Err(Error::param(
                "husimi_grid",
                format!("invalid axis (center {center}, half-width {half_width}, n {n})"),
            ));
        }
        Ok(Self { center, half_width, n })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.center - self.half_width + (k as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct HusimiGrid {
    pub re_axis: Axis,
    pub im_axis: Axis,
    /// values[(i, j)] = Q(re_i + i·im_j)
    pub values: Mat<f64>,
    /// Grid reaches amplitudes the truncated basis cannot represent.
    pub support_warning: bool,
}

impl HusimiGrid {
    pub fn cell_area(&self) -> f64 {
        self.re_axis.step() * self.im_axis.step()
    }

    /// (1/π)ΣQ·ΔA.
    pub fn normalization(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.values.ncols() {
            for i in 0..self.values.nrows() {
                s += self.values[(i, j)];
            }
        }
        s * self.cell_area() / std::f64::consts::PI
    }
}

/// Fock amplitudes e^{−|β|²/2} βⁿ/√n! of a coherent state.
pub fn coherent_amplitudes(beta: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * beta / (n as f64).sqrt();
        }
        out.push(c);
    }
    out
}

/// Default axes: centered on the first moments, half-width
/// max(4, 1.5·√(2n̄ + 1)), 201 points per axis unless `n` says otherwise.
pub fn default_axes(mode: &SingleMode, n: usize) -> Result<(Axis, Axis)> {
    axes_with_floor(mode, n, 4.0)
}

/// As [`default_axes`] with the half-width floor set to `min_half_width`.
pub fn axes_with_floor(mode: &SingleMode, n: usize, min_half_width: f64) -> Result<(Axis, Axis)> {
    let center = gaussian_moments(mode).map(|m| m.center()).unwrap_or(mode.offset);
    let hw = (1.5 * (2.0 * mode.mean_number().max(0.0) + 1.0).sqrt()).max(min_half_width);
    Ok((Axis::new(center.re, hw, n)?, Axis::new(center.im, hw, n)?))
}

pub fn husimi(mode: &SingleMode, re_axis: Axis, im_axis: Axis) -> HusimiGrid {
    let d = mode.dim();
    let rho = &mode.rho;
    let mut values = Mat::zeros(re_axis.n, im_axis.n);
    let mut max_amp2 = 0.0f64;
    let re = re_axis.points();
    let im = im_axis.points();
    let mut tmp = vec![ZERO; d];
    for (i, &x) in re.iter().enumerate() {
        for (j, &y) in im.iter().enumerate() {
            let gamma = C64::new(x, y) - mode.offset;
            max_amp2 = max_amp2.max(gamma.norm_sqr());
            let c = coherent_amplitudes(gamma, d);
            // ⟨γ|ρ|γ⟩ = Σ c̄_m ρ_mn c_n
            for m in 0..d {
                let mut acc = ZERO;
                for n in 0..d {
                    acc += rho[(m, n)] * c[n];
                }
                tmp[m] = acc;
            }
            let q: C64 = (0..d).map(|m| c[m].conj() * tmp[m]).sum();
            values[(i, j)] = q.re.max(0.0);
        }
    }
    let support_warning = max_amp2 > 0.5 * d as f64;
    if support_warning {
        log::debug!("Husimi grid reaches |α|² = {max_amp2:.1} beyond half the cutoff {d}");
    }
    HusimiGrid { re_axis, im_axis, values, support_warning }
}

/// H_W = −(1/π)ΣQ ln Q·ΔA.
pub fn wehrl_entropy(q: &HusimiGrid) -> Result<f64> {
    let norm = q.normalization();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Quadrature(format!("Husimi normalization {norm:.6} off by more than {NORMALIZATION_TOL}")));
    }
    let mut s = 0.0;
    for j in 0..q.values.ncols() {
        for i in 0..q.values.nrows() {
            let v = q.values[(i, j)];
            if v > 0.0 {
                s -= v * v.ln();
            }
        }
    }
    Ok(s * q.cell_area() / std::f64::consts::PI)
}

/// Husimi function of the Gaussian state with the given moments, sampled
/// on the axes of `like`: a normal density in (q, p) with covariance σ + I/2.
pub fn gaussian_husimi(moments: &MomentData, like: &HusimiGrid) -> HusimiGrid {
    let s = std::f64::consts::SQRT_2;
    let [[a, b], [_, c]] = moments.covariance;
    let (a, c) = (a + 0.5, c + 0.5);
    let det = a * c - b * b;
    let (ia, ib, ic) = (c / det, -b / det, a / det);
    let norm = 1.0 / det.sqrt();
    let re = like.re_axis.points();
    let im = like.im_axis.points();
    let values = Mat::from_fn(re.len(), im.len(), |i, j| {
        let dq = s * re[i] - moments.first[0];
        let dp = s * im[j] - moments.first[1];
        norm * (-0.5 * (ia * dq * dq + 2.0 * ib * dq * dp + ic * dp * dp)).exp()
    });
    HusimiGrid { re_axis: like.re_axis, im_axis: like.im_axis, values, support_warning: false }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonGaussianity {
    pub value: f64,
    pub wehrl: f64,
    pub wehrl_gaussian: f64,
}

/// 𝒩 = H_W(ρ_G) − H_W(ρ), both evaluated on the same grid.
pub fn non_gaussianity(mode: &SingleMode, re_axis: Axis, im_axis: Axis) -> Result<NonGaussianity> {
    let moments = gaussian_moments(mode)?;
    let q = husimi(mode, re_axis, im_axis);
    let wehrl = wehrl_entropy(&q)?;
    let wehrl_gaussian = wehrl_entropy(&gaussian_husimi(&moments, &q))?;
    Ok(NonGaussianity { value: wehrl_gaussian - wehrl, wehrl, wehrl_gaussian })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes(c: C64, hw: f64, n: usize) -> (Axis, Axis) {
        (Axis::new(c.re, hw, n).unwrap(), Axis::new(c.im, hw, n).unwrap())
    }

    #[test]
    fn moments_of_simple_states() {
        let vac = gaussian_moments(&SingleMode::fock(0, 6)).unwrap();
        assert!(vac.first[0].abs() < 1e-15 && vac.first[1].abs() < 1e-15);
        assert!((vac.covariance[0][0] - 0.5).abs() < 1e-14 && (vac.covariance[1][1] - 0.5).abs() < 1e-14);

        let one = gaussian_moments(&SingleMode::fock(1, 6)).unwrap();
        assert!((one.covariance[0][0] - 1.5).abs() < 1e-14 && one.covariance[0][1].abs() < 1e-14);

        let beta = C64::new(0.8, -0.6);
        let coh = gaussian_moments(&SingleMode::coherent(beta, 30)).unwrap();
        let s = std::f64::consts::SQRT_2;
        assert!((coh.first[0] - s * beta.re).abs() < 1e-10);
        assert!((coh.first[1] - s * beta.im).abs() < 1e-10);
        assert!((coh.covariance[0][0] - 0.5).abs() < 1e-10 && coh.covariance[0][1].abs() < 1e-10);

        // the same coherent state held as vacuum in a displaced basis
        let shifted = SingleMode { offset: beta, ..SingleMode::fock(0, 4) };
        let m = gaussian_moments(&shifted).unwrap();
        assert!((m.first[0] - coh.first[0]).abs() < 1e-10 && (m.first[1] - coh.first[1]).abs() < 1e-10);
    }

    #[test]
    fn husimi_point_values() {
        let (re, im) = axes(C64::new(0.0, 0.0), 4.0, 81);
        let q = husimi(&SingleMode::fock(0, 10), re, im);
        assert!((q.values[(40, 40)] - 1.0).abs() < 1e-14);
        let x = re.point(50);
        assert!((q.values[(50, 40)] - (-x * x).exp()).abs() < 1e-12);

        let mixed = SingleMode::new(Mat::from_fn(2, 2, |i, j| if i == j { C64::new(0.5, 0.0) } else { ZERO }));
        let q = husimi(&mixed, re, im);
        assert!((q.values[(40, 40)] - 0.5).abs() < 1e-14);

        let beta = C64::new(1.0, 0.5);
        let (re, im) = axes(beta, 4.0, 81);
        let q = husimi(&SingleMode::coherent(beta, 40), re, im);
        assert!((q.values[(40, 40)] - 1.0).abs() < 1e-10);
        assert!(q.values.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).all(|v| v <= 1.0 + 1e-12));
    }

    #[test]
    fn wehrl_of_gaussians() {
        let (re, im) = axes(C64::new(0.0, 0.0), 6.0, 201);
        let h = wehrl_entropy(&husimi(&SingleMode::fock(0, 10), re, im)).unwrap();
        assert!((h - 1.0).abs() < 1e-3);
        let beta = C64::new(-0.7, 1.1);
        let (re, im) = axes(beta, 6.0, 201);
        let h = wehrl_entropy(&husimi(&SingleMode::coherent(beta, 40), re, im)).unwrap();
        assert!((h - 1.0).abs() < 1e-3);
    }

    #[test]
    fn wehrl_of_thermal_gaussians() {
        let (re, im) = axes(C64::new(0.0, 0.0), 12.0, 241);
        let grid = husimi(&SingleMode::fock(0, 2), re, im);
        for s in [1.5f64, 2.0, 3.0] {
            // Husimi covariance s·I/2 in α coordinates gives 1 + ln s
            let m = MomentData { first: [0.0, 0.0], covariance: [[s - 0.5, 0.0], [0.0, s - 0.5]] };
            let h = wehrl_entropy(&gaussian_husimi(&m, &grid)).unwrap();
            assert!((h - (1.0 + s.ln())).abs() < 1e-3, "s = {s}: {h}");
            // state covariance s·I/2 gives 1 + ln((s + 1)/2)
            let m = MomentData { first: [0.0, 0.0], covariance: [[0.5 * s, 0.0], [0.0, 0.5 * s]] };
            let h = wehrl_entropy(&gaussian_husimi(&m, &grid)).unwrap();
            assert!((h - (1.0 + (0.5 * (s + 1.0)).ln())).abs() < 1e-3);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let (re, im) = axes(C64::new(0.0, 0.0), 1.0, 11);
        assert!(matches!(wehrl_entropy(&husimi(&SingleMode::fock(0, 4), re, im)), Err(Error::Quadrature(_))));
    }

    #[test]
    fn non_gaussianity_calibration() {
        let (re, im) = axes(C64::new(0.0, 0.0), 6.0, 201);
        let g = non_gaussianity(&SingleMode::fock(0, 10), re, im).unwrap();
        assert!(g.value.abs() < 1e-4);
        let one = non_gaussianity(&SingleMode::fock(1, 10), re, im).unwrap();
        let euler_gamma = 0.577_215_664_901_532_9;
        assert!((one.value - (2f64.ln() - euler_gamma)).abs() < 1e-3, "{}", one.value);
        assert!(one.wehrl >= 1.0);
    }

    #[test]
    fn support_warning_flag() {
        let (re, im) = axes(C64::new(0.0, 0.0), 4.0, 21);
        assert!(husimi(&SingleMode::fock(0, 4), re, im).support_warning);
        assert!(!husimi(&SingleMode::fock(0, 80), re, im).support_warning);
    }
}
