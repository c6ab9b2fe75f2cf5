//! Two-qubit state tomography: the 16-setting projector set realized with
//! modulators and filters, maximum-likelihood reconstruction and metrics.

mod metrics;
mod mle;

use std::f64::consts::PI;

pub use metrics::{concurrence, entanglement_of_formation, fidelity, purity};
pub use mle::{mle_reconstruct, DensityMatrixEstimate, MleOptions};

use nalgebra::DMatrix;

use crate::binops::{mix_projector, Arm, EomSpec, Projector};
use crate::error::{Error, Result};
use crate::pairgen::{sample_counts, AccidentalModel, CountRecord, RateModel};
use crate::spectra::BinGrid;
use crate::state::{outer, BinState, CVector};

/// Single-photon states measured on each arm.
pub const ARM_STATES: [&str; 4] = ["0", "1", "D", "R"];

/// Modulator and filter tuning that realizes one arm's projector.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmSetting {
    pub name: String,
    pub projector: Projector,
    pub eom: Option<EomSpec>,
    pub selected_center_ghz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Setting {
    pub id: usize,
    pub signal: ArmSetting,
    pub idler: ArmSetting,
}

impl Setting {
    /// Joint measurement vector P_s (x) P_i.
    pub fn joint(&self) -> CVector {
        self.signal.projector.vector.kronecker(&self.idler.projector.vector)
    }

    /// Relative detection weight of this setting.
    pub fn throughput(&self) -> f64 {
        self.signal.projector.throughput * self.idler.projector.throughput
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographySettings {
    pub settings: Vec<Setting>,
    pub t_acq_s: f64,
    /// Detection efficiency per arm; cancels in the reconstruction.
    pub arm_efficiency: (f64, f64),
}

impl TomographySettings {
    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }
}

fn target_vector(name: &str) -> CVector {
    match name {
        "0" => Projector::basis(2, 0).vector,
        "1" => Projector::basis(2, 1).vector,
        "D" => Projector::superposition(2, 0, 1, 0.0).vector,
        _ => Projector::superposition(2, 0, 1, PI / 2.0).vector,
    }
}

/// Realize {|0>, |1>, D, R} on one arm with an amplitude modulator at half
/// the bin spacing and a filter on an outer sideband or the midpoint.
fn arm_settings(grid: &BinGrid, arm: Arm, beta: f64) -> Result<Vec<ArmSetting>> {
    let bins = grid.bins(arm);
    if bins.len() != 2 {
        return Err(Error::InfeasibleConfig("tomography needs two bins per photon".into()));
    }
    let sign = if bins[1] > bins[0] { 1.0 } else { -1.0 };
    let f_m = (bins[1] - bins[0]).abs() / 2.0;
    let mid = 0.5 * (bins[0] + bins[1]);
    ARM_STATES
        .iter()
        .map(|&name| {
            // the midpoint projector carries alpha = 2 phi when bin 1 is the upper bin
            let (phase, center) = match name {
                "0" => (0.0, bins[0] - sign * f_m),
                "1" => (0.0, bins[1] + sign * f_m),
                "D" => (0.0, mid),
                _ => (sign * PI / 4.0, mid),
            };
            let eom = EomSpec::amplitude(f_m, beta, phase);
            let projector = mix_projector(grid, arm, &eom, center)?;
            if (projector.vector.dotc(&target_vector(name)).norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InfeasibleConfig(format!("{arm:?} arm cannot realize projector {name}")));
            }
            Ok(ArmSetting { name: name.to_string(), projector, eom: Some(eom), selected_center_ghz: Some(center) })
        })
        .collect()
}

fn pair_up(signal: Vec<ArmSetting>, idler: Vec<ArmSetting>) -> Vec<Setting> {
    let mut out = Vec::with_capacity(signal.len() * idler.len());
    for s in &signal {
        for i in &idler {
            out.push(Setting { id: out.len(), signal: s.clone(), idler: i.clone() });
        }
    }
    out
}

/// The 16 modulator-realized settings for a qubit grid, each arm driven at
/// half its own bin spacing with modulation index 1.7.
pub fn standard_settings(grid: &BinGrid) -> Result<TomographySettings> {
    settings_with_index(grid, 1.7)
}

/// `standard_settings` at another modulation index; only the throughput changes.
pub fn settings_with_index(grid: &BinGrid, beta: f64) -> Result<TomographySettings> {
    let settings = pair_up(arm_settings(grid, Arm::Signal, beta)?, arm_settings(grid, Arm::Idler, beta)?);
    Ok(TomographySettings { settings, t_acq_s: 15.0, arm_efficiency: (1.0, 1.0) })
}

/// The same 16 projectors with unit throughput and no hardware tuning.
pub fn ideal_settings() -> TomographySettings {
    let arm = || {
        ARM_STATES
            .iter()
            .map(|&name| ArmSetting {
                name: name.to_string(),
                projector: Projector::from_response(target_vector(name)).unwrap(),
                eom: None,
                selected_center_ghz: None,
            })
            .collect::<Vec<_>>()
    };
    TomographySettings { settings: pair_up(arm(), arm()), t_acq_s: 15.0, arm_efficiency: (1.0, 1.0) }
}

/// Rank of the Gram matrix tr(M_k M_l) of the measurement operators.
pub fn gram_rank(settings: &TomographySettings) -> usize {
    let ops: Vec<_> = settings.settings.iter().map(|s| outer(&s.joint())).collect();
    let n = ops.len();
    let gram = DMatrix::from_fn(n, n, |k, l| (&ops[k] * &ops[l]).trace().re);
    let sv = gram.singular_values();
    let max = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * max).count()
}

/// Counting statistics for a simulated tomography run.
#[derive(Clone, Debug, PartialEq)]
pub struct Exposure {
    /// Mean true coincidence rate over the settings.
    pub mean_coincidence_hz: f64,
    /// Ratio of the mean true rate to the flat accidental rate; `None` is noiseless.
    pub car: Option<f64>,
    pub t_acq_s: f64,
}

impl Exposure {
    /// 2 kHz coincidences, CAR 50, 15 s per setting.
    pub fn standard() -> Self {
        Self { mean_coincidence_hz: 2000.0, car: Some(50.0), t_acq_s: 15.0 }
    }

    /// Rate model whose mean coincidence rate over `settings` hits the target.
    pub fn rate_model(&self, state: &BinState, settings: &TomographySettings) -> Result<RateModel> {
        let mut mean = 0.0;
        for s in &settings.settings {
            mean += state.probability(&s.joint())? * s.throughput();
        }
        mean /= settings.len().max(1) as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidState("state gives no coincidences in any setting".into()));
        }
        let mut model = RateModel::ideal(self.mean_coincidence_hz / mean);
        model.efficiency_signal = settings.arm_efficiency.0;
        model.efficiency_idler = settings.arm_efficiency.1;
        model.pair_rate_hz /= model.efficiency_signal * model.efficiency_idler;
        model.accidentals = match self.car {
            Some(car) => AccidentalModel::Flat { rate_hz: self.mean_coincidence_hz / car },
            None => AccidentalModel::None,
        };
        Ok(model)
    }
}

/// Forward-simulate one count record per setting.
pub fn simulate_records(
    state: &BinState,
    settings: &TomographySettings,
    model: &RateModel,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    settings
        .settings
        .iter()
        .map(|s| sample_counts(state, (&s.signal.projector, &s.idler.projector), model, settings.t_acq_s, seed, s.id))
        .collect()
}

/// Expected (noise-free, non-integer) counts for each setting.
pub fn expected_counts(state: &BinState, settings: &TomographySettings, model: &RateModel) -> Result<Vec<f64>> {
    settings
        .settings
        .iter()
        .map(|s| {
            let p = state.probability(&s.joint())? * s.throughput();
            let e = model.expected_rates(p, 0.0, 0.0);
            Ok((e.coincidence_hz + e.accidental_hz) * settings.t_acq_s)
        })
        .collect()
}
