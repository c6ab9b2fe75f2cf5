//! TOML description of a device plus the detection chain and exposure used
//! to simulate it.
//!
//! ```toml
//! reference_thz = 194.0
//! mode = "phi"
//! bin_order = 5
//!
//! [[ring]]
//! label = "A"
//! fsr_ghz = 377.2
//! q_factor = 150000
//! sfwm_efficiency = 57.6
//!
//! [pump]
//! power_uw = 50
//! scheme = "split"
//! split = [0.5, 0.5]
//! ```
//!
//! Rings without `fsr_ghz` take it from `radius_um` and `group_index`; rings
//! without `linewidth_ghz` take f0 / Q.

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::pairgen::{db_to_efficiency, AccidentalModel, RateModel};
use crate::qudit::DEFAULT_FLOOR_FRACTION;
use crate::spectra::{fsr_from_radius, DeviceConfig, Diagnostic, Mode, PumpScheme, RingSpec};
use crate::tomo::Exposure;

fn default_reference() -> f64 {
    194.0
}
fn default_group_index() -> f64 {
    4.2
}
fn default_half() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_reference")]
    reference_thz: f64,
    mode: Mode,
    bin_order: u32,
    #[serde(default = "default_group_index")]
    group_index: f64,
    ring: Vec<RawRing>,
    pump: RawPump,
    #[serde(default)]
    channels: ChannelConfig,
    #[serde(default)]
    modulators: ModulatorConfig,
    #[serde(default)]
    interference: InterferenceConfig,
    #[serde(default)]
    power_scan: PowerScanConfig,
    #[serde(default)]
    exposure: ExposureConfig,
    #[serde(default)]
    qudit: QuditConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRing {
    label: String,
    #[serde(default)]
    radius_um: f64,
    fsr_ghz: Option<f64>,
    q_factor: f64,
    linewidth_ghz: Option<f64>,
    #[serde(default)]
    resonance_ghz: f64,
    #[serde(default = "default_half")]
    escape_efficiency: f64,
    sfwm_efficiency: f64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SchemeName {
    Split,
    Sidebands,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    power_uw: f64,
    #[serde(default = "RawPump::default_width")]
    width_ghz: f64,
    scheme: SchemeName,
    /// Power fraction delivered to each ring.
    split: Option<Vec<f64>>,
    split_phase: Option<Vec<f64>>,
    pair_phase: Option<Vec<f64>>,
    beta: Option<f64>,
    #[serde(default)]
    drive_phase: f64,
}

impl RawPump {
    fn default_width() -> f64 {
        0.01
    }
}

/// Losses, timing window and background of the two detection arms.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub loss_signal_db: f64,
    pub loss_idler_db: f64,
    pub window_ps: f64,
    pub noise_singles_hz: [f64; 2],
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { loss_signal_db: 6.0, loss_idler_db: 7.0, window_ps: 380.0, noise_singles_hz: [0.0, 0.0] }
    }
}

impl ChannelConfig {
    /// Rate model for a generated pair rate, accidentals from the singles.
    pub fn rate_model(&self, pair_rate_hz: f64) -> RateModel {
        RateModel {
            pair_rate_hz,
            efficiency_signal: db_to_efficiency(self.loss_signal_db),
            efficiency_idler: db_to_efficiency(self.loss_idler_db),
            noise_singles_hz: (self.noise_singles_hz[0], self.noise_singles_hz[1]),
            window_s: self.window_ps * 1e-12,
            accidentals: AccidentalModel::FromSingles,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulatorConfig {
    /// Amplitude-modulator index used for the tomography projectors.
    pub beta: f64,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        Self { beta: 1.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterferenceConfig {
    /// Idler minus signal delay ahead of the modulators.
    pub delay_ns: f64,
    /// Modulation-frequency scan half-range around half the bin spacing.
    pub fm_half_range_ghz: f64,
    pub fm_points: usize,
    pub phase_points: usize,
    /// Visibility injected into synthetic modulation-frequency scans.
    pub visibility: f64,
}

impl Default for InterferenceConfig {
    fn default() -> Self {
        Self { delay_ns: 8.5, fm_half_range_ghz: 1.5, fm_points: 601, phase_points: 12, visibility: 1.0 }
    }
}

/// Total on-chip pump powers for a rate and CAR scan.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerScanConfig {
    pub min_uw: f64,
    pub max_uw: f64,
    pub points: usize,
}

impl Default for PowerScanConfig {
    fn default() -> Self {
        Self { min_uw: 10.0, max_uw: 200.0, points: 20 }
    }
}

impl PowerScanConfig {
    pub fn powers(&self) -> Vec<f64> {
        let n = self.points.max(1);
        if n == 1 {
            return vec![self.min_uw];
        }
        (0..n).map(|k| self.min_uw + (self.max_uw - self.min_uw) * k as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExposureConfig {
    pub t_acq_s: f64,
    pub mean_coincidence_hz: f64,
    /// Omit or set to 0 for a noiseless run.
    pub car: f64,
}

impl Default for ExposureConfig {
    fn default() -> Self {
        Self { t_acq_s: 15.0, mean_coincidence_hz: 2000.0, car: 50.0 }
    }
}

impl ExposureConfig {
    pub fn exposure(&self) -> Exposure {
        Exposure {
            mean_coincidence_hz: self.mean_coincidence_hz,
            car: (self.car > 0.0).then_some(self.car),
            t_acq_s: self.t_acq_s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuditConfig {
    /// Z-basis accidental floor per cell as a fraction of the correlated rate.
    pub floor_fraction: f64,
    /// Correlated coincidence rate for the Z-basis matrix.
    pub rate_hz: f64,
    /// Weight of the coherent pair in adjacent-bin Bell scans; 1 is noiseless.
    pub pair_weight: f64,
    /// Neighbouring bins (l, m) driven for the Bell scan.
    pub bell_pair: [usize; 2],
}

impl Default for QuditConfig {
    fn default() -> Self {
        Self { floor_fraction: DEFAULT_FLOOR_FRACTION, rate_hz: 2000.0, pair_weight: 1.0, bell_pair: [0, 1] }
    }
}

/// A parsed device together with its simulation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub device: DeviceConfig,
    pub channels: ChannelConfig,
    pub modulators: ModulatorConfig,
    pub interference: InterferenceConfig,
    pub power_scan: PowerScanConfig,
    pub exposure: ExposureConfig,
    pub qudit: QuditConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        let raw: RawConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let n = raw.ring.len();
        let rings = raw
            .ring
            .into_iter()
            .map(|r| {
                let fsr_ghz = match r.fsr_ghz {
                    Some(f) => f,
                    None if r.radius_um > 0.0 => fsr_from_radius(r.radius_um, raw.group_index),
                    None => return Err(Error::Config(format!("ring {}: needs fsr_ghz or radius_um", r.label))),
                };
                Ok(RingSpec {
                    label: r.label,
                    radius_um: r.radius_um,
                    fsr_ghz,
                    q_factor: r.q_factor,
                    linewidth_ghz: r
                        .linewidth_ghz
                        .unwrap_or((raw.reference_thz * 1e3 + r.resonance_ghz) / r.q_factor),
                    resonance_ghz: r.resonance_ghz,
                    escape_efficiency: r.escape_efficiency,
                    sfwm_efficiency: r.sfwm_efficiency,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let p = raw.pump;
        let pump = match p.scheme {
            SchemeName::Split => {
                let split = p.split.unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
                let phase = p.split_phase.unwrap_or_else(|| vec![0.0; split.len()]);
                if phase.len() != split.len() {
                    return Err(Error::Config("pump.split_phase and pump.split differ in length".into()));
                }
                if split.iter().any(|&f| f < 0.0) {
                    return Err(Error::Config("pump.split fractions must be non-negative".into()));
                }
                let amplitude = split.iter().zip(&phase).map(|(&f, &ph)| Complex64::from_polar(f.sqrt(), ph)).collect();
                PumpScheme::Split { amplitude }
            }
            SchemeName::Sidebands => PumpScheme::Sidebands {
                beta: p.beta.ok_or_else(|| Error::Config("sideband pumping needs pump.beta".into()))?,
                drive_phase: p.drive_phase,
            },
        };
        let device = DeviceConfig {
            rings,
            mode: raw.mode,
            reference_thz: raw.reference_thz,
            pump,
            pair_phase: p.pair_phase.unwrap_or_else(|| vec![0.0; n]),
            pump_power_uw: p.power_uw,
            pump_width_ghz: p.width_ghz,
            bin_order: raw.bin_order,
        };
        Ok(Self {
            device,
            channels: raw.channels,
            modulators: raw.modulators,
            interference: raw.interference,
            power_scan: raw.power_scan,
            exposure: raw.exposure,
            qudit: raw.qudit,
        })
    }

    /// Every invariant violation, device first; empty means runnable.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out = self.device.check();
        let ch = &self.channels;
        if ch.loss_signal_db < 0.0 || ch.loss_idler_db < 0.0 {
            out.push(Diagnostic::new("channel-loss", "channel losses must be non-negative dB"));
        }
        if !(ch.window_ps > 0.0) {
            out.push(Diagnostic::new("channel-window", "coincidence window must be positive"));
        }
        if ch.noise_singles_hz.iter().any(|&x| x < 0.0) {
            out.push(Diagnostic::new("channel-noise", "background singles must be non-negative"));
        }
        if !(self.modulators.beta > 0.0) {
            out.push(Diagnostic::new("modulator-beta", "modulation index must be positive"));
        }
        let it = &self.interference;
        if it.fm_points < 8 || it.phase_points < 8 {
            out.push(Diagnostic::new("scan-points", "fringe scans need at least 8 points"));
        }
        if !(it.fm_half_range_ghz > 0.0) {
            out.push(Diagnostic::new("scan-range", "modulation-frequency range must be positive"));
        }
        if !(0.0..=1.0).contains(&it.visibility) {
            out.push(Diagnostic::new("scan-visibility", "injected visibility must lie in [0, 1]"));
        }
        let ps = &self.power_scan;
        if !(ps.min_uw >= 0.0) || !(ps.max_uw > ps.min_uw) || ps.points < 2 {
            out.push(Diagnostic::new("power-scan", "power scan needs 0 <= min < max and at least 2 points"));
        }
        let ex = &self.exposure;
        if !(ex.t_acq_s > 0.0) || !(ex.mean_coincidence_hz > 0.0) || ex.car < 0.0 {
            out.push(Diagnostic::new("exposure", "exposure needs positive time and rate and a non-negative CAR"));
        }
        let q = &self.qudit;
        if q.floor_fraction < 0.0 || !(q.rate_hz > 0.0) || !(0.0..=1.0).contains(&q.pair_weight) {
            out.push(Diagnostic::new("qudit-noise", "qudit floor must be non-negative, rate positive, pair weight in [0, 1]"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI: &str = r#"
        mode = "phi"
        bin_order = 5
        [[ring]]
        label = "A"
        radius_um = 30.0
        fsr_ghz = 377.2
        q_factor = 150000
        sfwm_efficiency = 57.6
        [[ring]]
        label = "B"
        radius_um = 30.3
        fsr_ghz = 373.4
        q_factor = 150000
        sfwm_efficiency = 62.4
        [pump]
        power_uw = 50
        scheme = "split"
        split = [0.5, 0.5]
    "#;

    #[test]
    fn phi_text_matches_preset() {
        let cfg = SimConfig::from_toml_str(PHI).unwrap();
        let preset = DeviceConfig::qubit_phi(0.0);
        assert_eq!(cfg.device.rings, preset.rings);
        assert_eq!(cfg.device.bin_order, 5);
        let (PumpScheme::Split { amplitude: a }, PumpScheme::Split { amplitude: b }) = (&cfg.device.pump, &preset.pump) else {
            panic!("split pump expected");
        };
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(cfg.check().is_empty(), "{:?}", cfg.check());
        assert_eq!(cfg.channels, ChannelConfig::default());
    }

    #[test]
    fn fsr_from_radius_when_omitted() {
        let text = PHI.replacen("fsr_ghz = 377.2\n", "", 1);
        let cfg = SimConfig::from_toml_str(&text).unwrap();
        assert!((cfg.device.rings[0].fsr_ghz - fsr_from_radius(30.0, 4.2)).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        let text = format!("{PHI}\n[channels]\nloss_sigal_db = 3\n");
        assert!(matches!(SimConfig::from_toml_str(&text), Err(Error::Config(_))));
        assert!(matches!(SimConfig::from_toml_str("mode = 3"), Err(Error::Config(_))));
    }

    #[test]
    fn bad_exposure_is_diagnosed() {
        let text = format!("{PHI}\n[exposure]\nt_acq_s = 0\n");
        let d = SimConfig::from_toml_str(&text).unwrap().check();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "exposure");
    }

    #[test]
    fn sidebands_need_beta() {
        let text = PHI.replace("scheme = \"split\"", "scheme = \"sidebands\"").replace("split = [0.5, 0.5]", "");
        assert!(matches!(SimConfig::from_toml_str(&text), Err(Error::Config(_))));
    }
}
