//! Electro-optic sideband generation and the frequency-bin projectors that a
//! modulator followed by a narrowband filter realizes.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::bessel_j;
use crate::spectra::BinGrid;
use crate::state::{c, CVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    Signal,
    Idler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EomKind {
    /// Push-pull Mach-Zehnder biased at null: odd orders only.
    AmplitudeDsbSc,
    Phase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EomSpec {
    pub kind: EomKind,
    pub f_m_ghz: f64,
    pub beta: f64,
    pub drive_phase: f64,
    /// Power transmission of the device, in [0, 1].
    pub insertion_efficiency: f64,
    /// Highest sideband order that is kept; the rest is loss.
    pub max_order: u32,
    /// Residual carrier of the amplitude modulator; `None` is perfect null bias.
    pub carrier_extinction_db: Option<f64>,
}

impl EomSpec {
    pub fn phase(f_m_ghz: f64, beta: f64, drive_phase: f64) -> Self {
        Self {
            kind: EomKind::Phase,
            f_m_ghz,
            beta,
            drive_phase,
            insertion_efficiency: 1.0,
            max_order: 3,
            carrier_extinction_db: None,
        }
    }

    pub fn amplitude(f_m_ghz: f64, beta: f64, drive_phase: f64) -> Self {
        Self { kind: EomKind::AmplitudeDsbSc, ..Self::phase(f_m_ghz, beta, drive_phase) }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.f_m_ghz > 0.0) {
            return Err(Error::InvalidParameter(format!("modulation frequency {} GHz must be positive", self.f_m_ghz)));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!("modulation index {} must be non-negative", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.insertion_efficiency) {
            return Err(Error::InvalidParameter("insertion efficiency must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Complex field amplitude the modulator puts into sideband `n`.
pub fn sideband_amplitude(eom: &EomSpec, n: i32) -> Complex64 {
    if n.unsigned_abs() > eom.max_order {
        return c(0.0, 0.0);
    }
    let loss = eom.insertion_efficiency.clamp(0.0, 1.0).sqrt();
    let phase = Complex64::from_polar(1.0, f64::from(n) * eom.drive_phase);
    let jn = bessel_j(n, eom.beta);
    let a = match eom.kind {
        EomKind::Phase => phase * jn,
        EomKind::AmplitudeDsbSc => {
            if n % 2 != 0 {
                // i^(n-1) drops the common factor i of sin(beta cos(...))
                c(0.0, 1.0).powi(n - 1) * phase * jn
            } else if n == 0 {
                match eom.carrier_extinction_db {
                    Some(db) => phase * jn * 10f64.powf(db / 20.0),
                    None => c(0.0, 0.0),
                }
            } else {
                c(0.0, 0.0)
            }
        }
    };
    a * loss
}

/// Power in sideband `n` relative to the input, in dB.
pub fn sideband_power_db(eom: &EomSpec, n: i32) -> f64 {
    10.0 * sideband_amplitude(eom, n).norm_sqr().log10()
}

/// Index beta* > 0 where the phase-modulator carrier and first-order
/// sidebands have equal magnitude, J0(beta) = J1(beta).
pub fn equal_amplitude_index() -> f64 {
    let f = |b: f64| bessel_j(0, b) - bessel_j(1, b);
    // J0' = -J1, J1' = J0 - J1/b
    let df = |b: f64| -bessel_j(1, b) - (bessel_j(0, b) - bessel_j(1, b) / b);
    let mut b = 1.4;
    for _ in 0..50 {
        let step = f(b) / df(b);
        b -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    b
}

/// Frequency-domain overlap weight of the two shifted bins when the
/// modulation frequency is detuned from half the bin spacing.
pub fn partial_overlap_weight(linewidth_ghz: f64, spacing_ghz: f64, f_m_ghz: f64) -> f64 {
    let d = f_m_ghz - spacing_ghz / 2.0;
    let g2 = linewidth_ghz * linewidth_ghz;
    g2 / (d * d + g2)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectorLabel {
    Basis(usize),
    /// (|j> + e^{i alpha} |k>) / sqrt 2
    Superposition { j: usize, k: usize, alpha: f64 },
    General,
}

/// Single-photon measurement vector over the bin basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    pub vector: CVector,
    pub label: ProjectorLabel,
    /// Fraction of a photon in the ideal projected state that reaches the detector.
    pub throughput: f64,
}

impl Projector {
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[k] = c(1.0, 0.0);
        Self { vector: v, label: ProjectorLabel::Basis(k), throughput: 1.0 }
    }

    pub fn superposition(dim: usize, j: usize, k: usize, alpha: f64) -> Self {
        let mut v = CVector::zeros(dim);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        v[j] = c(h, 0.0);
        v[k] = Complex64::from_polar(h, alpha);
        Self { vector: v, label: ProjectorLabel::Superposition { j, k, alpha }, throughput: 1.0 }
    }

    /// Projector from an unnormalized filter response; the norm becomes the throughput.
    pub fn from_response(response: CVector) -> Result<Self> {
        let norm2 = response.norm_squared();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidParameter("projector response is zero".into()));
        }
        let vector = &response / Complex64::from(norm2.sqrt());
        let label = classify(&vector);
        Ok(Self { vector, label, throughput: norm2 })
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn with_throughput(mut self, throughput: f64) -> Self {
        self.throughput = throughput;
        self
    }
}

fn classify(v: &CVector) -> ProjectorLabel {
    let nz: Vec<usize> = (0..v.len()).filter(|&k| v[k].norm() > 1e-9).collect();
    match nz.as_slice() {
        [k] => ProjectorLabel::Basis(*k),
        [j, k] if (v[*j].norm() - v[*k].norm()).abs() < 1e-9 => {
            let alpha = (v[*k] / v[*j]).arg().rem_euclid(2.0 * PI);
            ProjectorLabel::Superposition { j: *j, k: *k, alpha }
        }
        _ => ProjectorLabel::General,
    }
}

/// Projector realized by modulating one arm and keeping only the light
/// within the filter passband centred on `selected_center_ghz`.
///
/// A bin contributes through sideband `n` (|n| <= 1) when its shifted centre
/// lands within linewidth/10 of the selected frequency; the vector component
/// is the conjugate of that sideband amplitude so that `<proj|psi>` sums the
/// paths. Higher orders only remove light from the passband.
pub fn mix_projector(grid: &BinGrid, arm: Arm, eom: &EomSpec, selected_center_ghz: f64) -> Result<Projector> {
    eom.check()?;
    let bins = grid.bins(arm);
    let tol = grid.linewidth_ghz / 10.0;
    let max = eom.max_order.min(1) as i32;
    let mut response = CVector::zeros(bins.len());
    let mut hit = false;
    for (k, &f) in bins.iter().enumerate() {
        for n in -max..=max {
            if (f + f64::from(n) * eom.f_m_ghz - selected_center_ghz).abs() < tol {
                response[k] += sideband_amplitude(eom, n).conj();
                hit = true;
            }
        }
    }
    if !hit {
        return Err(Error::NoOverlap(selected_center_ghz));
    }
    Projector::from_response(response).map_err(|_| Error::NoOverlap(selected_center_ghz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{configure, DeviceConfig};
    use approx::assert_abs_diff_eq;

    fn phi_grid() -> BinGrid {
        configure(&DeviceConfig::qubit_phi(0.0)).unwrap()
    }

    fn midpoint(grid: &BinGrid, arm: Arm) -> f64 {
        let b = grid.bins(arm);
        0.5 * (b[0] + b[1])
    }

    #[test]
    fn dsb_first_order_efficiency() {
        let eom = EomSpec::amplitude(9.5, 1.7, 0.0);
        for n in [-1, 1] {
            let db = sideband_power_db(&eom, n);
            assert!((db + 4.8).abs() < 0.2, "{db}");
        }
        assert_eq!(sideband_amplitude(&eom, 0).norm(), 0.0);
        assert_eq!(sideband_amplitude(&eom, 2).norm(), 0.0);
    }

    #[test]
    fn modulator_off() {
        for eom in [EomSpec::phase(9.5, 0.0, 0.3), EomSpec::amplitude(9.5, 0.0, 0.3)] {
            for n in -3..=3 {
                let expected = if n == 0 && eom.kind == EomKind::Phase { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(sideband_amplitude(&eom, n).norm(), expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn carrier_leak_follows_extinction() {
        let mut eom = EomSpec::amplitude(9.5, 1.0, 0.0);
        eom.carrier_extinction_db = Some(-20.0);
        assert_abs_diff_eq!(sideband_amplitude(&eom, 0).norm(), 0.1 * bessel_j(0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn equal_amplitude_root() {
        let b = equal_amplitude_index();
        // independent bisection on [1, 2]
        let f = |b: f64| bessel_j(0, b) - bessel_j(1, b);
        let (mut lo, mut hi) = (1.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert_abs_diff_eq!(b, 0.5 * (lo + hi), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.4347, epsilon = 1e-3);
        let eom = EomSpec::phase(9.0, b, 0.0);
        assert_abs_diff_eq!(sideband_amplitude(&eom, 1).norm(), sideband_amplitude(&eom, 0).norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(sideband_amplitude(&eom, -1).norm(), sideband_amplitude(&eom, 0).norm(), epsilon = 1e-12);
    }

    #[test]
    fn overlap_weight_examples() {
        assert_abs_diff_eq!(partial_overlap_weight(1.3, 19.0, 9.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(partial_overlap_weight(1.3, 19.0, 9.5 + 1.3), 0.5, epsilon = 1e-12);
        assert!(partial_overlap_weight(1.3, 19.0, 1e6) < 1e-10);
    }

    #[test]
    fn midpoint_superposition() {
        let grid = phi_grid();
        let mid = midpoint(&grid, Arm::Signal);
        let p = mix_projector(&grid, Arm::Signal, &EomSpec::amplitude(9.5, 1.7, 0.0), mid).unwrap();
        match p.label {
            ProjectorLabel::Superposition { j: 0, k: 1, alpha } => assert_abs_diff_eq!(alpha, 0.0, epsilon = 1e-12),
            ref other => panic!("unexpected label {other:?}"),
        }
        assert_abs_diff_eq!(p.throughput, 2.0 * bessel_j(1, 1.7).powi(2), epsilon = 1e-12);

        let p = mix_projector(&grid, Arm::Signal, &EomSpec::amplitude(9.5, 1.7, PI / 2.0), mid).unwrap();
        let expected = Projector::superposition(2, 0, 1, PI);
        assert_abs_diff_eq!(p.vector.dotc(&expected.vector).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn idler_phase_runs_backwards() {
        let grid = phi_grid();
        let mid = midpoint(&grid, Arm::Idler);
        let p = mix_projector(&grid, Arm::Idler, &EomSpec::amplitude(9.5, 1.7, PI / 4.0), mid).unwrap();
        let expected = Projector::superposition(2, 0, 1, -PI / 2.0);
        assert_abs_diff_eq!(p.vector.dotc(&expected.vector).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn outer_sideband_is_basis() {
        let grid = phi_grid();
        let eom = EomSpec::amplitude(9.5, 1.7, 0.3);
        let b = grid.bins(Arm::Signal);
        let outer0 = b[0] - 9.5;
        let p0 = mix_projector(&grid, Arm::Signal, &eom, outer0).unwrap();
        assert_eq!(p0.label, ProjectorLabel::Basis(0));
        let p1 = mix_projector(&grid, Arm::Signal, &eom, b[1] + 9.5).unwrap();
        assert_eq!(p1.label, ProjectorLabel::Basis(1));
        assert_abs_diff_eq!(p0.vector.dotc(&p1.vector).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn unmatched_frequency_is_no_overlap() {
        let grid = phi_grid();
        let eom = EomSpec::amplitude(9.5, 1.7, 0.0);
        assert!(matches!(mix_projector(&grid, Arm::Signal, &eom, 1000.0), Err(Error::NoOverlap(_))));
    }

    #[test]
    fn drive_phase_covariance() {
        let grid = phi_grid();
        let mid = midpoint(&grid, Arm::Signal);
        let base = mix_projector(&grid, Arm::Signal, &EomSpec::amplitude(9.5, 1.7, 0.2), mid).unwrap();
        let shifted = mix_projector(&grid, Arm::Signal, &EomSpec::amplitude(9.5, 1.7, 0.2 + PI), mid).unwrap();
        assert_abs_diff_eq!(base.vector.dotc(&shifted.vector).norm(), 1.0, epsilon = 1e-12);
        let quarter = mix_projector(&grid, Arm::Signal, &EomSpec::amplitude(9.5, 1.7, 0.2 + PI / 2.0), mid).unwrap();
        assert_abs_diff_eq!(base.vector.dotc(&quarter.vector).norm(), 0.0, epsilon = 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn sideband_power_conserved(beta in 0.0f64..2.0, phi in -PI..PI) {
            for kind in [EomKind::Phase, EomKind::AmplitudeDsbSc] {
                let mut eom = EomSpec::phase(10.0, beta, phi);
                eom.kind = kind;
                eom.max_order = 10;
                let total: f64 = (-10..=10).map(|n| sideband_amplitude(&eom, n).norm_sqr()).sum();
                proptest::prop_assert!(total <= 1.0 + 1e-12);
                if kind == EomKind::Phase {
                    proptest::prop_assert!(total >= 0.999);
                }
            }
        }

        #[test]
        fn projectors_unit_norm(phi in -PI..PI, beta in 0.1f64..2.0) {
            let grid = phi_grid();
            let mid = midpoint(&grid, Arm::Signal);
            let p = mix_projector(&grid, Arm::Signal, &EomSpec::amplitude(9.5, beta, phi), mid).unwrap();
            proptest::prop_assert!((p.vector.norm() - 1.0).abs() < 1e-12);
        }
    }
}
