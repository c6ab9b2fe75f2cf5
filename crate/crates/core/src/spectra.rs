//! Linear-optics model of the device: ring resonance grids, bus transmission,
//! pump routing and the resonance configurations that define the bins.
//!
//! Frequencies are GHz offsets from the device reference carrier
//! (`DeviceConfig::reference_thz`); absolute THz appears only at I/O.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const C_M_PER_S: f64 = 299_792_458.0;

/// Resolution that bin spacings are snapped to (1 kHz, in GHz).
const SPACING_RESOLUTION_GHZ: f64 = 1e-6;

/// A violated invariant: stable code plus human-readable detail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Critical,
    Under,
    Over,
}

impl Coupling {
    pub fn from_escape_efficiency(eta: f64) -> Self {
        if (eta - 0.5).abs() < 1e-9 {
            Coupling::Critical
        } else if eta < 0.5 {
            Coupling::Under
        } else {
            Coupling::Over
        }
    }
}

/// One ring-resonator pair source.
#[derive(Clone, Debug, PartialEq)]
pub struct RingSpec {
    pub label: String,
    pub radius_um: f64,
    pub fsr_ghz: f64,
    pub q_factor: f64,
    /// Loaded FWHM.
    pub linewidth_ghz: f64,
    /// m = 0 resonance, relative to the device reference.
    pub resonance_ghz: f64,
    /// External (bus) share of the total loss rate; 0.5 is critical coupling.
    pub escape_efficiency: f64,
    /// Pair rate per squared on-chip pump power, Hz/uW^2.
    pub sfwm_efficiency: f64,
}

impl RingSpec {
    /// Ring whose linewidth is derived from its Q at the absolute carrier.
    pub fn with_q(label: &str, radius_um: f64, fsr_ghz: f64, q_factor: f64, reference_thz: f64) -> Self {
        Self {
            label: label.to_string(),
            radius_um,
            fsr_ghz,
            q_factor,
            linewidth_ghz: reference_thz * 1e3 / q_factor,
            resonance_ghz: 0.0,
            escape_efficiency: 0.5,
            sfwm_efficiency: 0.0,
        }
    }

    pub fn resonance(&self, m: i32) -> f64 {
        self.resonance_ghz + f64::from(m) * self.fsr_ghz
    }

    pub fn coupling(&self) -> Coupling {
        Coupling::from_escape_efficiency(self.escape_efficiency)
    }

    /// Invariant violations for this ring, empty when consistent.
    pub fn check(&self, reference_thz: f64) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if !(self.fsr_ghz > 0.0) {
            out.push(Diagnostic::new("ring-fsr", format!("ring {}: FSR must be positive", self.label)));
        }
        if !(self.linewidth_ghz > 0.0) {
            out.push(Diagnostic::new("ring-linewidth", format!("ring {}: linewidth must be positive", self.label)));
        }
        if self.linewidth_ghz >= self.fsr_ghz / 10.0 {
            out.push(Diagnostic::new("ring-resolution", format!(
                "ring {}: linewidth {:.3} GHz is not well below FSR/10 = {:.3} GHz",
                self.label,
                self.linewidth_ghz,
                self.fsr_ghz / 10.0
            )));
        }
        if self.q_factor > 0.0 {
            let expected = (reference_thz * 1e3 + self.resonance_ghz) / self.q_factor;
            if (self.linewidth_ghz - expected).abs() > 0.01 * expected {
                out.push(Diagnostic::new("ring-q-linewidth", format!(
                    "ring {}: linewidth {:.4} GHz disagrees with f0/Q = {:.4} GHz by more than 1%",
                    self.label, self.linewidth_ghz, expected
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.escape_efficiency) {
            out.push(Diagnostic::new("ring-coupling", format!("ring {}: escape efficiency must lie in [0, 1]", self.label)));
        }
        if self.sfwm_efficiency < 0.0 {
            out.push(Diagnostic::new("ring-efficiency", format!("ring {}: SFWM efficiency must be non-negative", self.label)));
        }
        out
    }
}

/// FSR of a ring of the given radius, c / (n_g 2 pi R), in GHz.
pub fn fsr_from_radius(radius_um: f64, group_index: f64) -> f64 {
    C_M_PER_S / (group_index * 2.0 * std::f64::consts::PI * radius_um * 1e-6) * 1e-9
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Phi,
    Psi,
    Qudit,
}

/// How pump light reaches the generation rings.
#[derive(Clone, Debug, PartialEq)]
pub enum PumpScheme {
    /// Complex field amplitude delivered to each ring by the MZI tree and
    /// add-drop gates.
    Split { amplitude: Vec<Complex64> },
    /// Bus pumping with a phase-modulated laser half-way between two pump
    /// resonances; the first-order sidebands drive the two rings.
    Sidebands { beta: f64, drive_phase: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceConfig {
    pub rings: Vec<RingSpec>,
    pub mode: Mode,
    /// Absolute carrier the GHz offsets are measured from.
    pub reference_thz: f64,
    pub pump: PumpScheme,
    /// Extra phase on each ring's pair amplitude (thermo-optic shifter).
    pub pair_phase: Vec<f64>,
    /// Total on-chip pump power.
    pub pump_power_uw: f64,
    /// Spectral width of the pump (Delta omega / 2 pi).
    pub pump_width_ghz: f64,
    /// Azimuthal order |m| of the bins used for encoding.
    pub bin_order: u32,
}

impl DeviceConfig {
    /// Two-ring qubit device with the measured FSRs, Q and SFWM efficiencies,
    /// in configuration PHI with equal pump power per ring.
    pub fn qubit_phi(theta: f64) -> Self {
        let reference_thz = 194.0;
        let mut a = RingSpec::with_q("A", 30.0, 377.2, 150_000.0, reference_thz);
        a.sfwm_efficiency = 57.6;
        let mut b = RingSpec::with_q("B", 30.3, 373.4, 150_000.0, reference_thz);
        b.sfwm_efficiency = 62.4;
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            rings: vec![a, b],
            mode: Mode::Phi,
            reference_thz,
            pump: PumpScheme::Split { amplitude: vec![h, h] },
            // Ring A hosts |11>, so the state phase rides on ring A.
            pair_phase: vec![theta, 0.0],
            pump_power_uw: 50.0,
            pump_width_ghz: 0.01,
            bin_order: 5,
        }
    }

    /// Configuration PSI: ring B's pump resonance 38 GHz above ring A's,
    /// both rings driven by the first-order sidebands of the pump.
    pub fn qubit_psi(drive_phase: f64) -> Self {
        let mut dev = Self::qubit_phi(0.0);
        dev.mode = Mode::Psi;
        dev.rings[0].resonance_ghz = -19.0;
        dev.rings[1].resonance_ghz = 19.0;
        for r in &mut dev.rings {
            r.linewidth_ghz = (dev.reference_thz * 1e3 + r.resonance_ghz) / r.q_factor;
        }
        dev.pump = PumpScheme::Sidebands { beta: 1.84, drive_phase };
        dev.pair_phase = vec![0.0, 0.0];
        dev
    }

    /// Four-ring device with radii 30 + 0.1 j um and bins at |m| = 7.
    pub fn qudit() -> Self {
        let reference_thz = 194.0;
        let rings = (0..4)
            .map(|j| {
                let radius = 30.0 + 0.1 * f64::from(j);
                let label = ["A", "B", "C", "D"][j as usize];
                let mut r = RingSpec::with_q(label, radius, fsr_from_radius(radius, 4.2), 150_000.0, reference_thz);
                r.sfwm_efficiency = 60.0;
                r
            })
            .collect();
        let q = Complex64::new(0.5, 0.0);
        Self {
            rings,
            mode: Mode::Qudit,
            reference_thz,
            pump: PumpScheme::Split { amplitude: vec![q; 4] },
            pair_phase: vec![0.0; 4],
            pump_power_uw: 50.0,
            pump_width_ghz: 0.01,
            bin_order: 7,
        }
    }

    /// Pump field amplitude (relative to the total) arriving at each ring.
    pub fn pump_amplitudes(&self) -> Result<Vec<Complex64>> {
        match &self.pump {
            PumpScheme::Split { amplitude } => {
                if amplitude.len() != self.rings.len() {
                    return Err(Error::DimensionMismatch { expected: self.rings.len(), found: amplitude.len() });
                }
                Ok(amplitude.clone())
            }
            PumpScheme::Sidebands { beta, drive_phase } => {
                if self.rings.len() != 2 {
                    return Err(Error::InfeasibleConfig("sideband pumping needs exactly two rings".into()));
                }
                let eom = crate::binops::EomSpec::phase(self.pump_separation().abs() / 2.0, *beta, *drive_phase);
                // the ring whose pump resonance sits above the laser takes the +1 sideband
                let upper = if self.rings[1].resonance(0) > self.rings[0].resonance(0) { 1 } else { 0 };
                let mut amp = vec![Complex64::new(0.0, 0.0); 2];
                amp[upper] = crate::binops::sideband_amplitude(&eom, 1);
                amp[1 - upper] = crate::binops::sideband_amplitude(&eom, -1);
                Ok(amp)
            }
        }
    }

    /// Pump resonance of ring 1 minus that of ring 0.
    pub fn pump_separation(&self) -> f64 {
        match self.rings.as_slice() {
            [a, b, ..] => b.resonance(0) - a.resonance(0),
            _ => 0.0,
        }
    }

    pub fn max_linewidth(&self) -> f64 {
        self.rings.iter().map(|r| r.linewidth_ghz).fold(0.0, f64::max)
    }

    /// Every static invariant violation, without building bins.
    pub fn check(&self) -> Vec<Diagnostic> {
        let mut out: Vec<Diagnostic> = self.rings.iter().flat_map(|r| r.check(self.reference_thz)).collect();
        let expected_rings = match self.mode {
            Mode::Phi | Mode::Psi => 2,
            Mode::Qudit => 4,
        };
        if self.rings.len() != expected_rings {
            out.push(Diagnostic::new(
                "ring-count",
                format!("{:?} mode needs {expected_rings} rings, found {}", self.mode, self.rings.len()),
            ));
            return out;
        }
        if self.pair_phase.len() != self.rings.len() {
            out.push(Diagnostic::new(
                "pair-phase-length",
                format!("pair_phase has {} entries for {} rings", self.pair_phase.len(), self.rings.len()),
            ));
        }
        match self.pump_amplitudes() {
            Ok(amp) => {
                let total: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
                if total > 1.0 + 1e-9 {
                    out.push(Diagnostic::new(
                        "passive-splitter",
                        format!("pump split delivers {total:.4} of the input power (a passive splitter needs <= 1)"),
                    ));
                }
                if total <= 0.0 {
                    out.push(Diagnostic::new("no-pump", "no ring is pumped"));
                }
            }
            Err(e) => out.push(Diagnostic::new("pump-scheme", e.to_string())),
        }
        if matches!(self.pump, PumpScheme::Sidebands { .. }) && self.mode != Mode::Psi {
            out.push(Diagnostic::new("pump-scheme", "sideband pumping is only defined for PSI mode"));
        }
        if !(self.pump_power_uw >= 0.0) {
            out.push(Diagnostic::new("pump-power", "pump power must be non-negative"));
        }
        let min_gamma = self.rings.iter().map(|r| r.linewidth_ghz).fold(f64::INFINITY, f64::min);
        if let Err(e) = crate::pairgen::check_regime(min_gamma, self.pump_width_ghz) {
            let msg = match e {
                Error::RegimeViolation(m) => m,
                other => other.to_string(),
            };
            out.push(Diagnostic::new("regime-violation", msg));
        }
        if let Err(d) = build_grid(self) {
            out.push(d);
        }
        out
    }
}

/// Spacing between the two rings' bins at azimuthal order m.
pub fn bin_spacing(ring_a: &RingSpec, ring_b: &RingSpec, m: i32) -> f64 {
    let raw = f64::from(m.unsigned_abs()) * (ring_a.fsr_ghz - ring_b.fsr_ghz).abs();
    (raw / SPACING_RESOLUTION_GHZ).round() * SPACING_RESOLUTION_GHZ
}

/// Bus transmission of a single all-pass ring.
pub fn transmission(ring: &RingSpec, f_ghz: f64) -> f64 {
    let eta = ring.escape_efficiency.clamp(0.0, 1.0);
    let depth = 4.0 * eta * (1.0 - eta);
    let hw2 = 0.25 * ring.linewidth_ghz * ring.linewidth_ghz;
    let nearest = ((f_ghz - ring.resonance_ghz) / ring.fsr_ghz).round() as i32;
    let d = f_ghz - ring.resonance(nearest);
    (1.0 - depth * hw2 / (d * d + hw2)).clamp(0.0, 1.0)
}

/// Bus transmission with all rings side-coupled to the same waveguide.
pub fn device_transmission(device: &DeviceConfig, f_ghz: f64) -> f64 {
    device.rings.iter().map(|r| transmission(r, f_ghz)).product()
}

/// Bin assignment produced by a resonance configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct BinGrid {
    pub mode: Mode,
    pub order: i32,
    /// Signal bin centres indexed by bin label.
    pub signal_bins: Vec<f64>,
    pub idler_bins: Vec<f64>,
    /// m = 0 resonance of each ring.
    pub pump_resonances: Vec<f64>,
    /// (signal label, idler label) of the pair each ring emits.
    pub ring_bins: Vec<(usize, usize)>,
    pub linewidth_ghz: f64,
}

impl BinGrid {
    pub fn dims(&self) -> (usize, usize) {
        (self.signal_bins.len(), self.idler_bins.len())
    }

    pub fn bins(&self, arm: crate::binops::Arm) -> &[f64] {
        match arm {
            crate::binops::Arm::Signal => &self.signal_bins,
            crate::binops::Arm::Idler => &self.idler_bins,
        }
    }

    /// Adjacent-bin spacings along the label order.
    pub fn spacings(&self, arm: crate::binops::Arm) -> Vec<f64> {
        let bins = self.bins(arm);
        bins.windows(2)
            .map(|w| ((w[1] - w[0]).abs() / SPACING_RESOLUTION_GHZ).round() * SPACING_RESOLUTION_GHZ)
            .collect()
    }

    /// Mean adjacent spacing; for qubits this is the bin separation.
    pub fn spacing(&self, arm: crate::binops::Arm) -> f64 {
        let s = self.spacings(arm);
        s.iter().sum::<f64>() / s.len() as f64
    }
}

/// Build the bin grid a device configuration defines.
pub fn configure(device: &DeviceConfig) -> Result<BinGrid> {
    build_grid(device).map_err(|d| Error::InfeasibleConfig(d.message))
}

fn build_grid(device: &DeviceConfig) -> std::result::Result<BinGrid, Diagnostic> {
    let m = i32::try_from(device.bin_order).map_err(|_| Diagnostic::new("bin-order", "bin order too large"))?;
    if m == 0 {
        return Err(Diagnostic::new("bin-order", "bin order must be non-zero"));
    }
    let n = device.rings.len();
    if n < 2 {
        return Err(Diagnostic::new("ring-count", "at least two rings are needed"));
    }
    let gamma = device.max_linewidth();
    let pumps: Vec<f64> = device.rings.iter().map(|r| r.resonance(0)).collect();
    let signal: Vec<f64> = device.rings.iter().map(|r| r.resonance(m)).collect();
    let idler: Vec<f64> = device.rings.iter().map(|r| r.resonance(-m)).collect();
    let pump_centre = pumps.iter().sum::<f64>() / n as f64;
    let pump_spread = pumps.iter().cloned().fold(f64::MIN, f64::max) - pumps.iter().cloned().fold(f64::MAX, f64::min);

    let (ring_bins, n_signal, n_idler): (Vec<(usize, usize)>, usize, usize) = match device.mode {
        Mode::Phi => {
            if n != 2 {
                return Err(Diagnostic::new("ring-count", format!("PHI mode needs 2 rings, found {n}")));
            }
            if pump_spread > gamma / 10.0 {
                return Err(Diagnostic::new("phi-pump-alignment", format!(
                    "PHI mode: pump resonances differ by {pump_spread:.3} GHz, more than linewidth/10 = {:.3} GHz",
                    gamma / 10.0
                )));
            }
            let s_rank = rank_by_distance(&signal, pump_centre);
            let i_rank = rank_by_distance(&idler, pump_centre);
            if s_rank != i_rank {
                return Err(Diagnostic::new("phi-bin-labels", 
                    "PHI mode: the ring closest to the pump differs between signal and idler",
                ));
            }
            ((0..n).map(|j| (s_rank[j], i_rank[j])).collect(), n, n)
        }
        Mode::Psi => {
            if n != 2 {
                return Err(Diagnostic::new("ring-count", format!("PSI mode needs 2 rings, found {n}")));
            }
            if pump_spread <= gamma {
                return Err(Diagnostic::new("psi-pump-separation", format!(
                    "PSI mode: pump resonances separated by {pump_spread:.3} GHz, not more than linewidth {gamma:.3} GHz"
                )));
            }
            // ring A holds |0>_s and |1>_i, ring B holds |1>_s and |0>_i
            let s_rank = rank_by_distance(&signal, pump_centre);
            let i_rank = rank_by_distance(&idler, pump_centre);
            if s_rank != [0, 1] || i_rank != [1, 0] {
                return Err(Diagnostic::new("psi-bin-assignment", 
                    "PSI mode: ring A must hold the inner signal and outer idler bins",
                ));
            }
            (vec![(0, 1), (1, 0)], 2, 2)
        }
        Mode::Qudit => {
            if pump_spread > gamma {
                return Err(Diagnostic::new("qudit-pump-overlap", format!(
                    "qudit mode: pump resonances spread over {pump_spread:.3} GHz, more than linewidth {gamma:.3} GHz"
                )));
            }
            ((0..n).map(|j| (j, j)).collect(), n, n)
        }
    };

    let mut signal_bins = vec![0.0; n_signal];
    let mut idler_bins = vec![0.0; n_idler];
    for (j, &(s, i)) in ring_bins.iter().enumerate() {
        signal_bins[s] = signal[j];
        idler_bins[i] = idler[j];
    }
    let grid = BinGrid {
        mode: device.mode,
        order: m,
        signal_bins,
        idler_bins,
        pump_resonances: pumps,
        ring_bins,
        linewidth_ghz: gamma,
    };

    for (name, bins) in [("signal", &grid.signal_bins), ("idler", &grid.idler_bins)] {
        for a in 0..bins.len() {
            for b in a + 1..bins.len() {
                if (bins[a] - bins[b]).abs() <= gamma {
                    return Err(Diagnostic::new("bin-resolution", format!(
                        "{name} bins {a} and {b} are {:.3} GHz apart, not resolvable at linewidth {gamma:.3} GHz",
                        (bins[a] - bins[b]).abs()
                    )));
                }
            }
        }
    }
    if device.mode == Mode::Qudit {
        for arm in [crate::binops::Arm::Signal, crate::binops::Arm::Idler] {
            let bins = grid.bins(arm);
            let monotone = bins.windows(2).all(|w| w[1] > w[0]) || bins.windows(2).all(|w| w[1] < w[0]);
            let sp = grid.spacings(arm);
            let mean = grid.spacing(arm);
            if !monotone || sp.iter().any(|s| (s - mean).abs() > 0.05 * mean) {
                return Err(Diagnostic::new("qudit-equidistance", format!(
                    "qudit mode: {arm:?} bins are not equidistant within 5% (spacings {sp:?})"
                )));
            }
        }
    }
    Ok(grid)
}

/// rank[j] = position of element j when sorted by distance from `centre`.
fn rank_by_distance(freqs: &[f64], centre: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..freqs.len()).collect();
    order.sort_by(|&a, &b| (freqs[a] - centre).abs().total_cmp(&(freqs[b] - centre).abs()));
    let mut rank = vec![0; freqs.len()];
    for (pos, &j) in order.iter().enumerate() {
        rank[j] = pos;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binops::Arm;
    use approx::assert_abs_diff_eq;

    fn ring(fsr: f64) -> RingSpec {
        RingSpec::with_q("x", 30.0, fsr, 150_000.0, 194.0)
    }

    #[test]
    fn spacing_examples() {
        let (a, b) = (ring(377.2), ring(373.4));
        assert_eq!(bin_spacing(&a, &b, 5), 19.0);
        assert_eq!(bin_spacing(&a, &b, -5), 19.0);
        assert_eq!(bin_spacing(&a, &b, 0), 0.0);
        assert_eq!(bin_spacing(&b, &a, 5), 19.0);
    }

    #[test]
    fn transmission_examples() {
        let r = ring(377.2);
        let g = r.linewidth_ghz;
        assert_abs_diff_eq!(transmission(&r, 0.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(transmission(&r, r.resonance(3)), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(transmission(&r, 0.5 * g), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(transmission(&r, -0.5 * g), 0.5, epsilon = 1e-6);
        assert!((transmission(&r, 60.0 * g) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn under_coupled_dip_is_shallower() {
        let mut r = ring(377.2);
        r.escape_efficiency = 0.3;
        assert_eq!(r.coupling(), Coupling::Under);
        assert_abs_diff_eq!(transmission(&r, 0.0), 1.0 - 4.0 * 0.3 * 0.7, epsilon = 1e-9);
    }

    #[test]
    fn linewidth_follows_q() {
        let r = ring(377.2);
        assert_abs_diff_eq!(r.linewidth_ghz, 1.2933, epsilon = 1e-4);
        assert!(r.check(194.0).is_empty());
        let mut bad = r.clone();
        bad.linewidth_ghz *= 1.05;
        assert_eq!(bad.check(194.0).len(), 1);
    }

    #[test]
    fn phi_configuration() {
        let grid = configure(&DeviceConfig::qubit_phi(0.0)).unwrap();
        assert_eq!(grid.spacing(Arm::Signal), 19.0);
        assert_eq!(grid.spacing(Arm::Idler), 19.0);
        // ring A (larger FSR) holds the outer bins |1>
        assert_eq!(grid.ring_bins, vec![(1, 1), (0, 0)]);
    }

    #[test]
    fn phi_swap_rings_keeps_spacing() {
        let mut dev = DeviceConfig::qubit_phi(0.0);
        dev.rings.swap(0, 1);
        let grid = configure(&dev).unwrap();
        assert_eq!(grid.spacing(Arm::Signal), 19.0);
    }

    #[test]
    fn phi_misaligned_pumps_are_infeasible() {
        let mut dev = DeviceConfig::qubit_phi(0.0);
        dev.rings[1].resonance_ghz = 0.5;
        assert!(matches!(configure(&dev), Err(Error::InfeasibleConfig(_))));
    }

    #[test]
    fn psi_configuration() {
        let grid = configure(&DeviceConfig::qubit_psi(0.0)).unwrap();
        assert_abs_diff_eq!(grid.spacing(Arm::Signal), 19.0, epsilon = 1e-9);
        assert_abs_diff_eq!(grid.spacing(Arm::Idler), 57.0, epsilon = 1e-9);
        assert_eq!(grid.ring_bins, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn psi_needs_separated_pumps() {
        let mut dev = DeviceConfig::qubit_psi(0.0);
        dev.rings[0].resonance_ghz = 0.0;
        dev.rings[1].resonance_ghz = 0.5;
        assert!(configure(&dev).is_err());
    }

    #[test]
    fn qudit_configuration() {
        let dev = DeviceConfig::qudit();
        let grid = configure(&dev).unwrap();
        let s = grid.spacing(Arm::Signal);
        assert!((s - 9.0).abs() < 0.15 * 9.0, "spacing {s}");
        assert!((8.5..=9.5).contains(&s));
        for (j, &(a, b)) in grid.ring_bins.iter().enumerate() {
            assert_eq!((a, b), (j, j));
        }
    }

    #[test]
    fn qudit_spacing_cross_check() {
        // FSR_j proportional to 1/R_j; spacing = 7 (FSR_j - FSR_{j+1})
        let fsr = |r: f64| C_M_PER_S / (4.2 * 2.0 * std::f64::consts::PI * r * 1e-6) * 1e-9;
        let dev = DeviceConfig::qudit();
        let grid = configure(&dev).unwrap();
        for (j, sp) in grid.spacings(Arm::Signal).iter().enumerate() {
            let r = 30.0 + 0.1 * j as f64;
            assert_abs_diff_eq!(*sp, 7.0 * (fsr(r) - fsr(r + 0.1)), epsilon = 1e-5);
        }
    }

    #[test]
    fn default_devices_are_consistent() {
        assert!(DeviceConfig::qubit_phi(0.3).check().is_empty());
        assert!(DeviceConfig::qubit_psi(0.0).check().is_empty());
        assert!(DeviceConfig::qudit().check().is_empty());
    }

    #[test]
    fn misaligned_phi_gives_one_named_diagnostic() {
        let mut dev = DeviceConfig::qubit_phi(0.0);
        dev.rings[1].resonance_ghz = 0.5;
        let d = dev.check();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "phi-pump-alignment");
    }

    #[test]
    fn broad_pump_is_a_regime_violation() {
        let mut dev = DeviceConfig::qubit_phi(0.0);
        dev.pump_width_ghz = dev.rings[0].linewidth_ghz;
        let d = dev.check();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "regime-violation");
    }

    #[test]
    fn overdriven_splitter_is_flagged() {
        let mut dev = DeviceConfig::qubit_phi(0.0);
        dev.pump = PumpScheme::Split { amplitude: vec![Complex64::new(0.9, 0.0); 2] };
        assert_eq!(dev.check().len(), 1);
    }

    #[test]
    fn device_dip_at_aligned_pump() {
        let dev = DeviceConfig::qubit_phi(0.0);
        assert!(device_transmission(&dev, 0.0) < 1e-12);
        let grid = configure(&dev).unwrap();
        for f in grid.signal_bins.iter().chain(&grid.idler_bins) {
            assert!(device_transmission(&dev, *f) < 1e-9);
        }
        let mid = 0.5 * (grid.signal_bins[0] + grid.signal_bins[1]);
        assert!(device_transmission(&dev, mid) > 0.98);
    }

    proptest::proptest! {
        #[test]
        fn spacing_linear_and_symmetric(fa in 300.0f64..400.0, fb in 300.0f64..400.0, m in -20i32..20) {
            let (a, b) = (ring(fa), ring(fb));
            proptest::prop_assert_eq!(bin_spacing(&a, &b, m), bin_spacing(&a, &b, -m));
            let unit = (fa - fb).abs();
            proptest::prop_assert!((bin_spacing(&a, &b, m) - f64::from(m.abs()) * unit).abs() < 1e-6);
        }

        #[test]
        fn transmission_bounded(f in -2000.0f64..2000.0, eta in 0.0f64..1.0) {
            let mut r = ring(377.2);
            r.escape_efficiency = eta;
            let t = transmission(&r, f);
            proptest::prop_assert!((0.0..=1.0).contains(&t));
        }
    }
}
