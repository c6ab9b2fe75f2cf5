//! Brute-force two-photon rate integral for the mixed biphoton.
//!
//! After modulation the pair from bin 0 (signal up-shifted, idler
//! down-shifted) and the pair from bin 1 (signal down-shifted, idler
//! up-shifted) land on the same detected frequencies, displaced from each
//! other by 2 (f_m - Delta/2) on each photon. Frequencies are local angular
//! detunings in rad/ns around the common detected centres. The idler delay
//! contributes e^{i w tau} with w measured from each pair's own bin centre;
//! the constant bin-centre term is part of theta.

use num_complex::Complex64;

use super::InterferenceParams;
use crate::error::{Error, Result};
use crate::pairgen::BiphotonLineshape;
use crate::special::sinc;
use crate::state::c;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleGrid {
    /// Half-width of the integration window beyond the displaced peaks, in linewidths.
    pub half_window_gamma: f64,
    /// Grid points per linewidth along each Lorentzian axis.
    pub points_per_gamma: f64,
    /// Keep the pump sinc instead of pinning w1 + w2 = 0.
    pub exact_sinc: bool,
    /// Half-width of the sum-frequency axis in linewidths (exact sinc only).
    pub sum_window_gamma: f64,
    /// Grid points per pump width along the sum axis (exact sinc only).
    pub points_per_pump_width: f64,
    /// Largest accepted error estimate.
    pub tolerance: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            half_window_gamma: 40.0,
            points_per_gamma: 40.0,
            exact_sinc: false,
            sum_window_gamma: 10.0,
            points_per_pump_width: 4.0,
            tolerance: 1e-4,
        }
    }
}

impl OracleGrid {
    pub fn exact() -> Self {
        Self { exact_sinc: true, half_window_gamma: 25.0, points_per_gamma: 16.0, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEstimate {
    /// Rate with both pairs present, normalized so the incoherent part is 1.
    pub g2: f64,
    /// Richardson step-halving difference plus truncated-tail bound.
    pub error_estimate: f64,
}

/// Integrate |psi_0 + psi_1|^2 over the detected frequencies.
pub fn g2_numerical_oracle(
    p: &InterferenceParams,
    lineshapes: (&BiphotonLineshape, &BiphotonLineshape),
    grid: &OracleGrid,
) -> Result<OracleEstimate> {
    let (l0, l1) = lineshapes;
    let g0 = l0.gamma * 1e-9;
    let g1 = l1.gamma * 1e-9;
    let dw = l0.pump_width * 1e-9;
    let gmin = g0.min(g1);
    let gmax = g0.max(g1);
    if grid.half_window_gamma < 20.0 {
        return Err(Error::InvalidParameter("integration window must span at least 20 linewidths".into()));
    }
    if !(grid.points_per_gamma > 0.0) {
        return Err(Error::InvalidParameter("grid density must be positive".into()));
    }
    if grid.exact_sinc && !(dw > 0.0 && dw <= gmin / 20.0) {
        return Err(Error::RegimeViolation(format!("pump width {dw:.3e} rad/ns exceeds linewidth/20")));
    }

    let a = 2.0 * std::f64::consts::PI * p.detuning();
    let tau = p.delay_ns;
    let ph0 = Complex64::from_polar(1.0, p.phase_s - p.phase_i);
    let ph1 = Complex64::from_polar(1.0, p.theta - p.phase_s + p.phase_i);
    let lor = |g: f64, y: f64| c(1.0, 0.0) / c(y, -0.5 * g);
    // amplitudes at signal w1, idler w2, without the pump factor
    let psi = |w1: f64, w2: f64| -> (Complex64, Complex64) {
        let z0 = ph0 * lor(g0, w1 - a) * lor(g0, w2 + a) * Complex64::from_polar(1.0, (w2 + a) * tau);
        let z1 = ph1 * lor(g1, w1 + a) * lor(g1, w2 - a) * Complex64::from_polar(1.0, (w2 - a) * tau);
        (z0, z1)
    };

    let half = grid.half_window_gamma * gmax + a.abs();
    let h = gmin / grid.points_per_gamma;
    let n = (2.0 * half / h).ceil() as usize;
    let n = n + n % 2;
    let h = 2.0 * half / n as f64;

    // sums[0] = |psi_0 + psi_1|^2, sums[1] = |psi_0|^2 + |psi_1|^2, at steps h and 2h
    let mut fine = [0.0f64; 2];
    let mut coarse = [0.0f64; 2];
    let mut tail_rel;

    if !grid.exact_sinc {
        for k in 0..=n {
            let x = -half + k as f64 * h;
            let (z0, z1) = psi(x, -x);
            let num = (z0 + z1).norm_sqr();
            let den = z0.norm_sqr() + z1.norm_sqr();
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            fine[0] += w * num * h;
            fine[1] += w * den * h;
            if k % 2 == 0 {
                let w2 = if k == 0 || k == n { 0.5 } else { 1.0 };
                coarse[0] += w2 * num * 2.0 * h;
                coarse[1] += w2 * den * 2.0 * h;
            }
        }
        // |psi|^2 <= y^-4 beyond the window, relative to pi / (2 c^3)
        let cmin = 0.5 * gmin;
        let reach = half - a.abs();
        tail_rel = 4.0 * cmin.powi(3) / (3.0 * std::f64::consts::PI * reach.powi(3));
    } else {
        let smax = grid.sum_window_gamma * gmax;
        let hs = dw / grid.points_per_pump_width;
        let ns = (2.0 * smax / hs).ceil() as usize;
        let ns = ns + ns % 2;
        let hs = 2.0 * smax / ns as f64;
        let uhalf = half + 0.5 * smax;
        let nu = (2.0 * uhalf / h).ceil() as usize;
        let nu = nu + nu % 2;
        let hu = 2.0 * uhalf / nu as f64;
        for js in 0..=ns {
            let s = -smax + js as f64 * hs;
            let pump = sinc(s / dw).powi(2);
            let ws = if js == 0 || js == ns { 0.5 } else { 1.0 };
            for ku in 0..=nu {
                let u = -uhalf + ku as f64 * hu;
                let (z0, z1) = psi(0.5 * s + u, 0.5 * s - u);
                let num = (z0 + z1).norm_sqr() * pump;
                let den = (z0.norm_sqr() + z1.norm_sqr()) * pump;
                let wu = if ku == 0 || ku == nu { 0.5 } else { 1.0 };
                fine[0] += ws * wu * num * hs * hu;
                fine[1] += ws * wu * den * hs * hu;
                if js % 2 == 0 && ku % 2 == 0 {
                    coarse[0] += ws * wu * num * 4.0 * hs * hu;
                    coarse[1] += ws * wu * den * 4.0 * hs * hu;
                }
            }
        }
        let cmin = 0.5 * gmin;
        let reach = half - a.abs();
        tail_rel = 4.0 * cmin.powi(3) / (3.0 * std::f64::consts::PI * reach.powi(3));
        // pump weight beyond |s| = smax where the Lorentzian overlap has fallen as (gamma/s)^2
        tail_rel += 2.0 * dw / (std::f64::consts::PI.powi(2) * smax) * (gmax / smax).powi(2);
    }

    if !(fine[1] > 0.0) {
        return Err(Error::NumericalFailure("incoherent rate integral vanished".into()));
    }
    let g_fine = fine[0] / fine[1];
    let g_coarse = coarse[0] / coarse[1];
    let error_estimate = (g_fine - g_coarse).abs() / 3.0 + 2.0 * tail_rel;
    if error_estimate > grid.tolerance {
        return Err(Error::ResolutionTooCoarse(error_estimate));
    }
    Ok(OracleEstimate { g2: g_fine, error_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::{g2_closed_form, g2_lineshape_overlap};
    use crate::pairgen::lineshape;
    use crate::spectra::DeviceConfig;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn shapes(pump_ratio: f64) -> (BiphotonLineshape, BiphotonLineshape) {
        let mut ring = DeviceConfig::qubit_phi(0.0).rings[0].clone();
        ring.linewidth_ghz = 1.3;
        let l = lineshape(&ring, 1.3 * pump_ratio, (0.0, 0.0)).unwrap();
        (l.clone(), l)
    }

    #[test]
    fn perfect_overlap_constructive_and_destructive() {
        let (a, b) = shapes(1.0 / 50.0);
        let p = InterferenceParams { linewidth_ghz: 1.3, ..InterferenceParams::qubit() };
        let g = g2_numerical_oracle(&p, (&a, &b), &OracleGrid::default()).unwrap();
        assert_abs_diff_eq!(g.g2, 2.0, epsilon = 1e-3);
        let q = InterferenceParams { theta: PI, ..p };
        let g = g2_numerical_oracle(&q, (&a, &b), &OracleGrid::default()).unwrap();
        assert_abs_diff_eq!(g.g2, 0.0, epsilon = 1e-3);
    }

    #[test]
    fn delta_pinned_matches_lineshape_overlap() {
        let (a, b) = shapes(1.0 / 50.0);
        for theta in [0.0, PI / 2.0, PI] {
            for dt in [0.0, 8.5] {
                for k in -10..=10 {
                    let p = InterferenceParams {
                        linewidth_ghz: 1.3,
                        theta,
                        delay_ns: dt,
                        f_m_ghz: 9.5 + 0.5 * k as f64 * 1.3,
                        ..InterferenceParams::qubit()
                    };
                    let g = g2_numerical_oracle(&p, (&a, &b), &OracleGrid::default()).unwrap();
                    assert_abs_diff_eq!(g.g2, g2_lineshape_overlap(&p), epsilon = 1e-3);
                }
            }
        }
    }

    #[test]
    fn fringe_argument_uses_half_spacing() {
        let (a, b) = shapes(1.0 / 50.0);
        let p = InterferenceParams { linewidth_ghz: 1.3, delay_ns: 8.5, f_m_ghz: 9.5 + 0.3, ..InterferenceParams::qubit() };
        let oracle = g2_numerical_oracle(&p, (&a, &b), &OracleGrid::default()).unwrap().g2 - 1.0;
        let d = p.detuning();
        let envelope = 1.3f64.powi(2) / (4.0 * d * d + 1.3f64.powi(2));
        let half = envelope * (4.0 * PI * d * p.delay_ns).cos();
        let full = envelope * (4.0 * PI * (p.f_m_ghz - p.spacing_ghz) * p.delay_ns).cos();
        assert!((oracle - half).abs() < 1e-3);
        assert!((oracle - full).abs() > 0.1);
    }

    #[test]
    fn exact_sinc_agrees_with_pinned_path() {
        let (a, b) = shapes(1.0 / 50.0);
        for (fm, theta) in [(9.5, 0.0), (10.8, PI / 2.0)] {
            let p = InterferenceParams { linewidth_ghz: 1.3, f_m_ghz: fm, theta, delay_ns: 8.5, ..InterferenceParams::qubit() };
            let pinned = g2_numerical_oracle(&p, (&a, &b), &OracleGrid::default()).unwrap();
            let exact = g2_numerical_oracle(&p, (&a, &b), &OracleGrid { tolerance: 1e-2, ..OracleGrid::exact() }).unwrap();
            assert!((pinned.g2 - exact.g2).abs() < 2e-2, "{} vs {}", pinned.g2, exact.g2);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let (a, b) = shapes(1.0 / 50.0);
        let p = InterferenceParams { linewidth_ghz: 1.3, f_m_ghz: 11.0, ..InterferenceParams::qubit() };
        let grid = OracleGrid { points_per_gamma: 0.3, ..OracleGrid::default() };
        assert!(matches!(g2_numerical_oracle(&p, (&a, &b), &grid), Err(Error::ResolutionTooCoarse(_))));
    }

    #[test]
    fn closed_form_agrees_only_at_overlap() {
        let (a, b) = shapes(1.0 / 50.0);
        let p = InterferenceParams { linewidth_ghz: 1.3, ..InterferenceParams::qubit() };
        let g = g2_numerical_oracle(&p, (&a, &b), &OracleGrid::default()).unwrap();
        assert_abs_diff_eq!(g.g2, g2_closed_form(&p), epsilon = 1e-3);
    }
}
