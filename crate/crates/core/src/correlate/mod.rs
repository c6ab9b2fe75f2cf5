//! Two-photon interference after electro-optic bin mixing: closed-form
//! cross-correlation, a numerical-integration oracle, Bell scans and
//! visibility fitting.

mod fit;
mod oracle;

use std::f64::consts::PI;

pub use fit::{fit_visibility, FitModel, FitOptions, FitResult};
pub use oracle::{g2_numerical_oracle, OracleEstimate, OracleGrid};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{poisson, stream_rng};
use crate::state::{c, BinState, CVector};

#[derive(Clone, Debug, PartialEq)]
pub struct InterferenceParams {
    /// Bin separation of each photon.
    pub spacing_ghz: f64,
    pub linewidth_ghz: f64,
    /// Phase between the two pair amplitudes.
    pub theta: f64,
    /// Idler minus signal arrival time.
    pub delay_ns: f64,
    pub phase_s: f64,
    pub phase_i: f64,
    pub f_m_ghz: f64,
}

impl InterferenceParams {
    /// Qubit device defaults: 19 GHz bins, 1.3 GHz linewidth, f_m = spacing/2.
    pub fn qubit() -> Self {
        Self {
            spacing_ghz: 19.0,
            linewidth_ghz: 1.3,
            theta: 0.0,
            delay_ns: 0.0,
            phase_s: 0.0,
            phase_i: 0.0,
            f_m_ghz: 9.5,
        }
    }

    /// Modulation detuning from half the bin spacing.
    pub fn detuning(&self) -> f64 {
        self.f_m_ghz - self.spacing_ghz / 2.0
    }

    /// Argument of the interference cosine.
    pub fn fringe_phase(&self) -> f64 {
        4.0 * PI * self.detuning() * self.delay_ns + 2.0 * self.phase_s - 2.0 * self.phase_i - self.theta
    }
}

/// G2 = 1 + Gamma^2 / ((f_m - Delta/2)^2 + Gamma^2) cos(4 pi (f_m - Delta/2) dT + 2 phi_s - 2 phi_i - theta)
pub fn g2_closed_form(p: &InterferenceParams) -> f64 {
    let d = p.detuning();
    let g2 = p.linewidth_ghz * p.linewidth_ghz;
    1.0 + g2 / (d * d + g2) * p.fringe_phase().cos()
}

/// Cross-correlation from the overlap of two Lorentzian biphotons of FWHM
/// Gamma displaced by 2 (f_m - Delta/2): envelope Gamma^2 / (4 d^2 + Gamma^2).
pub fn g2_lineshape_overlap(p: &InterferenceParams) -> f64 {
    let d = p.detuning();
    let g2 = p.linewidth_ghz * p.linewidth_ghz;
    1.0 + g2 / (4.0 * d * d + g2) * p.fringe_phase().cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FringeAxis {
    ModulationFrequency,
    SignalPhase,
    EomPhase,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeSample {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeScan {
    pub axis: FringeAxis,
    pub samples: Vec<FringeSample>,
}

impl FringeScan {
    pub fn new(axis: FringeAxis, samples: Vec<FringeSample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(Error::InvalidParameter("fringe scan x values must be strictly increasing".into()));
        }
        if samples.iter().any(|s| !(s.sigma >= 0.0) || !s.y.is_finite()) {
            return Err(Error::InvalidParameter("fringe scan needs finite values and non-negative sigma".into()));
        }
        Ok(Self { axis, samples })
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }
}

/// Measurement used to trace a Bell curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BellMeasurement {
    /// Signal on (|0> + e^{i alpha}|1>)/sqrt2, idler on (|0> + |1>)/sqrt2:
    /// what two modulator-plus-filter stages realize.
    #[default]
    Local,
    /// Joint projector (|00> + e^{i alpha}|11>)/sqrt2.
    PhiPovm,
    /// Joint projector (|01> + e^{i alpha}|10>)/sqrt2.
    PsiPovm,
}

impl BellMeasurement {
    pub fn vector(self, alpha: f64) -> CVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e = Complex64::from_polar(1.0, alpha);
        let v = match self {
            BellMeasurement::Local => {
                let s = [c(h, 0.0), e * h];
                let i = [c(h, 0.0), c(h, 0.0)];
                [s[0] * i[0], s[0] * i[1], s[1] * i[0], s[1] * i[1]]
            }
            BellMeasurement::PhiPovm => [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), e * h],
            BellMeasurement::PsiPovm => [c(0.0, 0.0), c(h, 0.0), e * h, c(0.0, 0.0)],
        };
        CVector::from_row_slice(&v)
    }
}

/// Poisson acquisition with a flat accidental floor set by a CAR against
/// the mean true coincidence rate of the scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanNoise {
    pub t_acq_s: f64,
    pub car: f64,
    pub seed: u64,
}

/// Coincidence rate R(alpha) = R0 tr(rho P(alpha)) for each alpha.
pub fn bell_scan(
    state: &BinState,
    alphas: &[f64],
    r0_hz: f64,
    measurement: BellMeasurement,
    noise: Option<&ScanNoise>,
) -> Result<FringeScan> {
    if state.dims() != (2, 2) {
        return Err(Error::DimensionMismatch { expected: 4, found: state.dim() });
    }
    let rates: Vec<f64> = alphas
        .iter()
        .map(|&a| state.probability(&measurement.vector(a)).map(|p| r0_hz * p))
        .collect::<Result<_>>()?;
    rate_scan(FringeAxis::EomPhase, alphas, &rates, noise)
}

/// Turn expected rates into a scan, sampling counts when `noise` is given.
pub fn rate_scan(axis: FringeAxis, xs: &[f64], rates: &[f64], noise: Option<&ScanNoise>) -> Result<FringeScan> {
    let samples = match noise {
        None => xs.iter().zip(rates).map(|(&x, &y)| FringeSample { x, y, sigma: 0.0 }).collect(),
        Some(n) => {
            if !(n.car > 0.0) || !(n.t_acq_s > 0.0) {
                return Err(Error::InvalidParameter("scan noise needs positive CAR and acquisition time".into()));
            }
            let mean = rates.iter().sum::<f64>() / rates.len().max(1) as f64;
            let floor = mean / n.car;
            xs.iter()
                .zip(rates)
                .enumerate()
                .map(|(k, (&x, &y))| {
                    let mut rng = stream_rng(n.seed, k as u64);
                    let counts = (poisson(&mut rng, y * n.t_acq_s) + poisson(&mut rng, floor * n.t_acq_s)) as f64;
                    FringeSample { x, y: counts / n.t_acq_s, sigma: counts.sqrt().max(1.0) / n.t_acq_s }
                })
                .collect()
        }
    };
    FringeScan::new(axis, samples)
}

/// Synthetic cross-correlation fringe versus modulation frequency with an
/// injected visibility; optional Poisson counting at `rate_hz` coincidences.
pub fn synthetic_fm_scan(
    base: &InterferenceParams,
    f_m_values: &[f64],
    visibility: f64,
    noise: Option<(f64, f64, u64)>,
) -> Result<FringeScan> {
    let g: Vec<f64> = f_m_values
        .iter()
        .map(|&f| {
            let p = InterferenceParams { f_m_ghz: f, ..base.clone() };
            let d = p.detuning();
            let g2 = p.linewidth_ghz * p.linewidth_ghz;
            1.0 + visibility * g2 / (d * d + g2) * p.fringe_phase().cos()
        })
        .collect();
    let samples = match noise {
        None => f_m_values.iter().zip(&g).map(|(&x, &y)| FringeSample { x, y, sigma: 0.0 }).collect(),
        Some((rate_hz, t_acq_s, seed)) => f_m_values
            .iter()
            .zip(&g)
            .enumerate()
            .map(|(k, (&x, &y))| {
                let mut rng = stream_rng(seed, k as u64);
                let n = poisson(&mut rng, rate_hz * t_acq_s * y) as f64;
                let scale = rate_hz * t_acq_s;
                FringeSample { x, y: n / scale, sigma: n.sqrt().max(1.0) / scale }
            })
            .collect(),
    };
    FringeScan::new(FringeAxis::ModulationFrequency, samples)
}

/// A visibility above 1/sqrt2 certifies entanglement.
pub fn entanglement_witness(visibility: f64) -> bool {
    visibility > std::f64::consts::FRAC_1_SQRT_2
}
