//! Weighted least-squares visibility fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::FringeScan;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitModel {
    /// A (1 + V cos(x - x0)) over a phase axis.
    BellCosine,
    /// A (1 + V L(d) cos(4 pi d dT + x0)) over modulation frequency, with
    /// d = x - spacing/2 and L(d) = Gamma^2 / (d^2 + Gamma^2).
    LorentzianFringe { spacing_ghz: f64, linewidth_ghz: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Reduced chi-square above which the fit is rejected (weighted fits only).
    pub chi2_dof_bound: f64,
    /// Delay search interval in ns; defaults to [0, sampling limit].
    pub delay_range_ns: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { chi2_dof_bound: 25.0, delay_range_ns: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub visibility: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub delay_ns: Option<f64>,
    pub sigma_visibility: f64,
    pub sigma_phase: f64,
    pub sigma_amplitude: f64,
    pub sigma_delay_ns: Option<f64>,
    /// Reduced chi-square; `None` when the scan carries no uncertainties.
    pub chi2_dof: Option<f64>,
}

impl FitResult {
    /// Fringe period along the modulation-frequency axis, 1/(2 dT).
    pub fn fm_period_ghz(&self) -> Option<f64> {
        self.delay_ns.map(|t| 1.0 / (2.0 * t))
    }
}

struct Data {
    x: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
    weighted: bool,
}

impl Data {
    fn new(scan: &FringeScan) -> Self {
        let weighted = scan.samples.iter().all(|s| s.sigma > 0.0);
        Self {
            x: scan.xs(),
            y: scan.ys(),
            w: scan.samples.iter().map(|s| if weighted { 1.0 / (s.sigma * s.sigma) } else { 1.0 }).collect(),
            weighted,
        }
    }
}

/// Weighted linear least squares; returns coefficients, chi-square and the
/// coefficient covariance (scaled by the residual variance when unweighted).
fn linear_wls(design: &DMatrix<f64>, d: &Data) -> Option<(DVector<f64>, f64, DMatrix<f64>)> {
    let n = d.y.len();
    let p = design.ncols();
    let w = DVector::from_column_slice(&d.w);
    let y = DVector::from_column_slice(&d.y);
    let mut xtwx = DMatrix::zeros(p, p);
    let mut xtwy = DVector::zeros(p);
    for i in 0..n {
        let row = design.row(i);
        for a in 0..p {
            xtwy[a] += w[i] * row[a] * y[i];
            for b in 0..p {
                xtwx[(a, b)] += w[i] * row[a] * row[b];
            }
        }
    }
    let inv = xtwx.try_inverse()?;
    let beta: DVector<f64> = &inv * xtwy;
    let resid: DVector<f64> = y - design * &beta;
    let chi2: f64 = (0..n).map(|i| w[i] * resid[i] * resid[i]).sum();
    let cov = if d.weighted { inv } else { inv * (chi2 / (n - p).max(1) as f64) };
    Some((beta, chi2, cov))
}

pub fn fit_visibility(scan: &FringeScan, model: FitModel, options: &FitOptions) -> Result<FitResult> {
    let n = scan.samples.len();
    if n < 8 {
        return Err(Error::InvalidParameter(format!("visibility fit needs at least 8 samples, got {n}")));
    }
    let d = Data::new(scan);
    let result = match model {
        FitModel::BellCosine => {
            let span = (d.x[n - 1] - d.x[0]) * n as f64 / (n - 1) as f64;
            if span < 2.0 * PI - 1e-9 {
                return Err(Error::InvalidParameter(format!("phase samples span {span:.3} rad, less than one period")));
            }
            fit_cosine(&d)?
        }
        FitModel::LorentzianFringe { spacing_ghz, linewidth_ghz } => fit_envelope(&d, spacing_ghz, linewidth_ghz, options)?,
    };
    if let Some(c) = result.chi2_dof {
        if !(c <= options.chi2_dof_bound) {
            return Err(Error::FitDiverged(format!("reduced chi-square {c:.2} exceeds {}", options.chi2_dof_bound)));
        }
    }
    Ok(result)
}

fn fit_cosine(d: &Data) -> Result<FitResult> {
    let n = d.x.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => d.x[i].cos(),
        _ => d.x[i].sin(),
    });
    let (beta, chi2, cov) = linear_wls(&design, d).ok_or_else(|| Error::FitDiverged("singular normal equations".into()))?;
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    if !(a > 0.0) {
        return Err(Error::FitDiverged(format!("non-positive mean level {a}")));
    }
    let r = b.hypot(c);
    let v = r / a;
    let (grad_v, grad_x0) = if r > 1e-300 {
        ([-v / a, b / (a * r), c / (a * r)], [0.0, -c / (r * r), b / (r * r)])
    } else {
        ([0.0, 1.0 / a, 0.0], [0.0, 0.0, 0.0])
    };
    let var = |g: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += g[i] * cov[(i, j)] * g[j];
            }
        }
        s.max(0.0)
    };
    let sigma_v = if r > 1e-300 { var(&grad_v).sqrt() } else { (cov[(1, 1)] + cov[(2, 2)]).max(0.0).sqrt() / a };
    Ok(FitResult {
        visibility: v,
        phase: c.atan2(b),
        amplitude: a,
        delay_ns: None,
        sigma_visibility: sigma_v,
        sigma_phase: var(&grad_x0).sqrt(),
        sigma_amplitude: cov[(0, 0)].max(0.0).sqrt(),
        sigma_delay_ns: None,
        chi2_dof: d.weighted.then(|| chi2 / (n - 3) as f64),
    })
}

fn envelope(x: f64, spacing: f64, gamma: f64) -> (f64, f64) {
    let det = x - spacing / 2.0;
    (det, gamma * gamma / (det * det + gamma * gamma))
}

/// Linear sub-fit at fixed delay: y = A + B L cos(4 pi d t) + C L sin(4 pi d t).
fn profile(d: &Data, spacing: f64, gamma: f64, tau: f64) -> Option<(DVector<f64>, f64, DMatrix<f64>)> {
    let n = d.x.len();
    let design = DMatrix::from_fn(n, 3, |i, j| {
        let (det, l) = envelope(d.x[i], spacing, gamma);
        let ph = 4.0 * PI * det * tau;
        match j {
            0 => 1.0,
            1 => l * ph.cos(),
            _ => l * ph.sin(),
        }
    });
    linear_wls(&design, d)
}

fn fit_envelope(d: &Data, spacing: f64, gamma: f64, options: &FitOptions) -> Result<FitResult> {
    let n = d.x.len();
    let span = d.x[n - 1] - d.x[0];
    if !(span > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidParameter("envelope fit needs a positive span and linewidth".into()));
    }
    let min_dx = d.x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (lo, hi) = options.delay_range_ns.unwrap_or((0.0, 1.0 / (4.0 * min_dx)));
    let step = 1.0 / (32.0 * span);
    let steps = ((hi - lo) / step).ceil().max(1.0) as usize;
    let chi = |t: f64| profile(d, spacing, gamma, t).map(|r| r.1).unwrap_or(f64::INFINITY);
    let mut best = (lo, f64::INFINITY);
    for k in 0..=steps {
        let t = lo + (hi - lo) * k as f64 / steps as f64;
        let c = chi(t);
        if c < best.1 {
            best = (t, c);
        }
    }
    // golden-section refinement around the best grid point
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (chi(x1), chi(x2));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + best.0.abs()) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = chi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = chi(x2);
        }
    }
    let tau = if f1 < f2 { x1 } else { x2 };
    let tau = if chi(tau) <= best.1 { tau } else { best.0 };
    let (beta, chi2, _) =
        profile(d, spacing, gamma, tau).ok_or_else(|| Error::FitDiverged("singular normal equations".into()))?;
    let (amp, bc, bs) = (beta[0], beta[1], beta[2]);
    if !(amp > 0.0) {
        return Err(Error::FitDiverged(format!("non-positive mean level {amp}")));
    }
    let v = bc.hypot(bs) / amp;
    let phi = (-bs).atan2(bc);

    // covariance of (A, V, dT, phase) from the full-model Jacobian
    let jac = DMatrix::from_fn(n, 4, |i, j| {
        let (det, l) = envelope(d.x[i], spacing, gamma);
        let arg = 4.0 * PI * det * tau + phi;
        match j {
            0 => 1.0 + v * l * arg.cos(),
            1 => amp * l * arg.cos(),
            2 => -amp * v * l * arg.sin() * 4.0 * PI * det,
            _ => -amp * v * l * arg.sin(),
        }
    });
    let mut jtwj = DMatrix::zeros(4, 4);
    for i in 0..n {
        for a in 0..4 {
            for b in 0..4 {
                jtwj[(a, b)] += d.w[i] * jac[(i, a)] * jac[(i, b)];
            }
        }
    }
    let mut cov = jtwj.try_inverse().ok_or_else(|| Error::FitDiverged("singular Jacobian".into()))?;
    if !d.weighted {
        cov *= chi2 / (n - 4) as f64;
    }
    let sd = |k: usize| cov[(k, k)].max(0.0).sqrt();
    Ok(FitResult {
        visibility: v,
        phase: phi,
        amplitude: amp,
        delay_ns: Some(tau),
        sigma_visibility: sd(1),
        sigma_phase: sd(3),
        sigma_amplitude: sd(0),
        sigma_delay_ns: Some(sd(2)),
        chi2_dof: d.weighted.then(|| chi2 / (n - 4) as f64),
    })
}
