//! Pair generation: SFWM rates, the emitted bin state, the continuous
//! biphoton lineshape, CAR and Poisson-sampled count records.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::binops::Projector;
use crate::error::{Error, Result};
use crate::rng::{poisson, stream_rng};
use crate::special::sinc;
use crate::spectra::{BinGrid, DeviceConfig, RingSpec};
use crate::state::{c, BinState, CVector};

/// Pair probability per coincidence window above which the single-pair
/// picture is no longer trusted.
pub const DOUBLE_PAIR_THRESHOLD: f64 = 0.1;

/// Generated pair rate R = eta P^2.
pub fn pair_rate(eta_hz_per_uw2: f64, power_uw: f64) -> f64 {
    eta_hz_per_uw2 * power_uw * power_uw
}

/// State emitted by the device together with the per-ring generation rates.
#[derive(Clone, Debug)]
pub struct Emission {
    pub state: BinState,
    pub ring_rates_hz: Vec<f64>,
}

impl Emission {
    pub fn total_rate_hz(&self) -> f64 {
        self.ring_rates_hz.iter().sum()
    }

    pub fn pair_probability(&self, window_s: f64) -> f64 {
        self.total_rate_hz() * window_s
    }

    /// Warning text when more than one pair per window becomes likely.
    pub fn double_pair_risk(&self, window_s: f64) -> Option<String> {
        let p = self.pair_probability(window_s);
        (p > DOUBLE_PAIR_THRESHOLD)
            .then(|| format!("pair probability {p:.3} per {:.0} ps window exceeds {DOUBLE_PAIR_THRESHOLD}", window_s * 1e12))
    }
}

/// Coherent superposition of the pairs each pumped ring emits; the pair
/// amplitude is quadratic in the pump field reaching the ring.
pub fn emit_state(device: &DeviceConfig, grid: &BinGrid) -> Result<Emission> {
    let amps = device.pump_amplitudes()?;
    if amps.len() != grid.ring_bins.len() {
        return Err(Error::DimensionMismatch { expected: grid.ring_bins.len(), found: amps.len() });
    }
    if device.pair_phase.len() != amps.len() {
        return Err(Error::DimensionMismatch { expected: amps.len(), found: device.pair_phase.len() });
    }
    let (ds, di) = grid.dims();
    let mut v = CVector::zeros(ds * di);
    let mut rates = Vec::with_capacity(amps.len());
    for (j, (a, &(s, i))) in amps.iter().zip(&grid.ring_bins).enumerate() {
        v[s * di + i] += a * a * Complex64::from_polar(1.0, device.pair_phase[j]);
        let p = a.norm_sqr() * device.pump_power_uw;
        rates.push(pair_rate(device.rings[j].sfwm_efficiency, p));
    }
    let state = BinState::pure_normalized(ds, di, rephase(v))
        .map_err(|_| Error::InfeasibleConfig("no ring receives pump light".into()))?;
    Ok(Emission { state, ring_rates_hz: rates })
}

/// Remove the global phase so the first non-zero amplitude is real positive.
pub(crate) fn rephase(v: CVector) -> CVector {
    match v.iter().find(|z| z.norm() > 1e-14) {
        Some(z) => {
            let g = z.conj() / z.norm();
            v * g
        }
        None => v,
    }
}

/// Continuous two-photon amplitude of one ring, with detunings measured
/// from that ring's signal and idler bin centres (angular, rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct BiphotonLineshape {
    pub gamma: f64,
    pub pump_width: f64,
    pub norm: Complex64,
    pub centers: (f64, f64),
}

/// Quasi-CW lineshape of a ring pumped by a laser of spectral width
/// `pump_width_ghz`.
pub fn lineshape(ring: &RingSpec, pump_width_ghz: f64, centers_ghz: (f64, f64)) -> Result<BiphotonLineshape> {
    check_regime(ring.linewidth_ghz, pump_width_ghz)?;
    Ok(BiphotonLineshape {
        gamma: 2.0 * PI * ring.linewidth_ghz * 1e9,
        pump_width: 2.0 * PI * pump_width_ghz * 1e9,
        norm: c(1.0, 0.0),
        centers: (2.0 * PI * centers_ghz.0 * 1e9, 2.0 * PI * centers_ghz.1 * 1e9),
    })
}

pub fn check_regime(linewidth_ghz: f64, pump_width_ghz: f64) -> Result<()> {
    if !(pump_width_ghz > 0.0) || pump_width_ghz >= linewidth_ghz / 10.0 {
        return Err(Error::RegimeViolation(format!(
            "pump width {pump_width_ghz} GHz is not below linewidth/10 = {} GHz",
            linewidth_ghz / 10.0
        )));
    }
    Ok(())
}

impl BiphotonLineshape {
    /// g(w1, w2) = G / (w1 - i gamma/2) / (w2 - i gamma/2) * sinc((w1 + w2) / dw)
    pub fn amplitude(&self, w1: f64, w2: f64) -> Complex64 {
        let h = c(0.0, 0.5 * self.gamma);
        self.norm / ((c(w1, 0.0) - h) * (c(w2, 0.0) - h)) * sinc((w1 + w2) / self.pump_width)
    }

    /// Closed-form value of the integral of |g|^2 over the plane when the sinc
    /// is narrow: |G|^2 * pi dw * 4 pi / gamma^3.
    pub fn norm_integral(&self) -> f64 {
        self.norm.norm_sqr() * PI * self.pump_width * 4.0 * PI / self.gamma.powi(3)
    }

    /// Same lineshape with G chosen so the plane integral equals `rate_hz`.
    pub fn with_rate(mut self, rate_hz: f64) -> Self {
        self.norm = c(1.0, 0.0);
        self.norm = c((rate_hz / self.norm_integral()).sqrt(), 0.0);
        self
    }
}

/// Coincidence-to-accidental ratio. A zero accidental count yields +inf
/// with `zero_accidentals` set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CarEstimate {
    pub value: f64,
    pub zero_accidentals: bool,
}

pub fn car(total_in_window: f64, accidental_in_window: f64) -> CarEstimate {
    if accidental_in_window <= 0.0 {
        return CarEstimate { value: f64::INFINITY, zero_accidentals: true };
    }
    CarEstimate { value: (total_in_window - accidental_in_window) / accidental_in_window, zero_accidentals: false }
}

/// Power transmission for a loss in dB.
pub fn db_to_efficiency(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum AccidentalModel {
    None,
    /// Uncorrelated overlap of the two singles streams, S_s S_i tau_c.
    FromSingles,
    /// Fixed accidental coincidence rate.
    Flat { rate_hz: f64 },
}

/// Detection model converting a generated pair rate into detected rates.
#[derive(Clone, Debug, PartialEq)]
pub struct RateModel {
    pub pair_rate_hz: f64,
    pub efficiency_signal: f64,
    pub efficiency_idler: f64,
    /// Uncorrelated background singles per arm (dark counts, leakage).
    pub noise_singles_hz: (f64, f64),
    pub window_s: f64,
    pub accidentals: AccidentalModel,
}

impl RateModel {
    /// Losses of 6 dB and 7 dB, 380 ps window, accidentals from singles.
    pub fn with_default_losses(pair_rate_hz: f64) -> Self {
        Self {
            pair_rate_hz,
            efficiency_signal: db_to_efficiency(6.0),
            efficiency_idler: db_to_efficiency(7.0),
            noise_singles_hz: (0.0, 0.0),
            window_s: 380e-12,
            accidentals: AccidentalModel::FromSingles,
        }
    }

    /// Detected-rate model with unit efficiency and no noise.
    pub fn ideal(pair_rate_hz: f64) -> Self {
        Self {
            pair_rate_hz,
            efficiency_signal: 1.0,
            efficiency_idler: 1.0,
            noise_singles_hz: (0.0, 0.0),
            window_s: 380e-12,
            accidentals: AccidentalModel::None,
        }
    }

    /// Expected (coincidence, accidental, singles_s, singles_i) rates for a
    /// Born-rule coincidence probability and the two marginal probabilities.
    pub fn expected_rates(&self, p_coinc: f64, p_signal: f64, p_idler: f64) -> ExpectedRates {
        let r = self.pair_rate_hz;
        let coinc = r * self.efficiency_signal * self.efficiency_idler * p_coinc;
        let s = r * self.efficiency_signal * p_signal + self.noise_singles_hz.0;
        let i = r * self.efficiency_idler * p_idler + self.noise_singles_hz.1;
        let acc = match self.accidentals {
            AccidentalModel::None => 0.0,
            AccidentalModel::FromSingles => s * i * self.window_s,
            AccidentalModel::Flat { rate_hz } => rate_hz,
        };
        ExpectedRates { coincidence_hz: coinc, accidental_hz: acc, singles_signal_hz: s, singles_idler_hz: i }
    }

    /// CAR of the expected rates with both arms fully transmitting.
    pub fn expected_car(&self) -> f64 {
        let e = self.expected_rates(1.0, 1.0, 1.0);
        e.coincidence_hz / e.accidental_hz
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedRates {
    pub coincidence_hz: f64,
    pub accidental_hz: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
}

/// One acquisition at a fixed projector setting.
#[derive(Clone, Debug, PartialEq)]
pub struct CountRecord {
    pub setting_id: usize,
    pub singles_signal: u64,
    pub singles_idler: u64,
    /// Counts in the coincidence window, true pairs plus accidentals.
    pub coincidences: u64,
    /// Estimated accidental counts in the window.
    pub accidentals: f64,
    pub window_s: f64,
    pub t_acq_s: f64,
    pub seed: u64,
}

impl CountRecord {
    pub fn car(&self) -> CarEstimate {
        car(self.coincidences as f64, self.accidentals)
    }

    pub fn check(&self) -> Result<()> {
        if self.coincidences > self.singles_signal.min(self.singles_idler) {
            return Err(Error::InvalidParameter(format!(
                "setting {}: coincidences {} exceed singles ({}, {})",
                self.setting_id, self.coincidences, self.singles_signal, self.singles_idler
            )));
        }
        if !(self.accidentals >= 0.0) || !(self.t_acq_s > 0.0) {
            return Err(Error::InvalidParameter(format!("setting {}: bad accidental or acquisition time", self.setting_id)));
        }
        Ok(())
    }
}

/// Poisson-sample a setting given by a signal and an idler projector.
/// The projector throughputs scale the detected rates.
pub fn sample_counts(
    state: &BinState,
    projectors: (&Projector, &Projector),
    rates: &RateModel,
    t_acq_s: f64,
    seed: u64,
    setting_id: usize,
) -> Result<CountRecord> {
    let (ps, pi) = projectors;
    let (ds, di) = state.dims();
    if ps.dim() != ds || pi.dim() != di {
        return Err(Error::DimensionMismatch { expected: ds + di, found: ps.dim() + pi.dim() });
    }
    let joint = ps.vector.kronecker(&pi.vector);
    let p_coinc = state.probability(&joint)? * ps.throughput * pi.throughput;
    let p_s = marginal(state, &ps.vector, true)? * ps.throughput;
    let p_i = marginal(state, &pi.vector, false)? * pi.throughput;
    Ok(sample_rates(rates.expected_rates(p_coinc, p_s, p_i), rates, t_acq_s, seed, setting_id))
}

/// Poisson-sample a joint (possibly entangled) two-photon measurement
/// vector; singles are taken as the corresponding coincidence rate share.
pub fn sample_joint(
    state: &BinState,
    joint: &CVector,
    throughput: f64,
    rates: &RateModel,
    t_acq_s: f64,
    seed: u64,
    setting_id: usize,
) -> Result<CountRecord> {
    let p = state.probability(joint)? * throughput;
    Ok(sample_rates(rates.expected_rates(p, p, p), rates, t_acq_s, seed, setting_id))
}

/// Draw counts from expected rates with seed stream `setting_id`.
pub fn sample_rates(e: ExpectedRates, rates: &RateModel, t_acq_s: f64, seed: u64, setting_id: usize) -> CountRecord {
    let mut rng = stream_rng(seed, setting_id as u64);
    let true_c = poisson(&mut rng, e.coincidence_hz * t_acq_s);
    let acc_c = poisson(&mut rng, e.accidental_hz * t_acq_s);
    let coincidences = true_c + acc_c;
    let rest_s = (e.singles_signal_hz - e.coincidence_hz - e.accidental_hz).max(0.0) * t_acq_s;
    let rest_i = (e.singles_idler_hz - e.coincidence_hz - e.accidental_hz).max(0.0) * t_acq_s;
    let singles_signal = coincidences + poisson(&mut rng, rest_s);
    let singles_idler = coincidences + poisson(&mut rng, rest_i);
    let accidentals = match rates.accidentals {
        AccidentalModel::None => 0.0,
        AccidentalModel::FromSingles => singles_signal as f64 * singles_idler as f64 * rates.window_s / t_acq_s,
        AccidentalModel::Flat { rate_hz } => rate_hz * t_acq_s,
    };
    CountRecord {
        setting_id,
        singles_signal,
        singles_idler,
        coincidences,
        accidentals,
        window_s: rates.window_s,
        t_acq_s,
        seed,
    }
}

/// Probability that one photon passes its projector, the other photon unmeasured.
fn marginal(state: &BinState, v: &CVector, signal: bool) -> Result<f64> {
    let (ds, di) = state.dims();
    let other = if signal { di } else { ds };
    let mut p = 0.0;
    for k in 0..other {
        let mut e = CVector::zeros(other);
        e[k] = c(1.0, 0.0);
        let joint = if signal { v.kronecker(&e) } else { e.kronecker(v) };
        p += state.probability(&joint)?;
    }
    Ok(p)
}
