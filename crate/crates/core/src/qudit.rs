//! Four-bin (d = 4) operation: ring-gated emission, Z-basis correlation
//! matrices and Bell interference between neighbouring bins.

use num_complex::Complex64;

use crate::binops::{equal_amplitude_index, mix_projector, Arm, EomSpec};
use crate::correlate::{rate_scan, FringeAxis, FringeScan, ScanNoise};
use crate::error::{Error, Result};
use crate::pairgen::{emit_state, Emission};
use crate::rng::{poisson, stream_rng};
use crate::spectra::{configure, BinGrid, DeviceConfig, Mode, PumpScheme};
use crate::state::{c, outer, BinState, CMatrix, CVector};

/// Z-basis accidental floor per matrix cell relative to the correlated rate.
/// Twelve off-diagonal cells at R/1200 put the uncorrelated total at R/100.
pub const DEFAULT_FLOOR_FRACTION: f64 = 1.0 / 1200.0;

/// Emission with the add-drop gates set to `gates` (one complex amplitude per ring).
pub fn qudit_emit(device: &DeviceConfig, gates: &[Complex64]) -> Result<(Emission, BinGrid)> {
    if device.mode != Mode::Qudit {
        return Err(Error::InfeasibleConfig("qudit emission needs a device in qudit mode".into()));
    }
    if gates.len() != device.rings.len() {
        return Err(Error::DimensionMismatch { expected: device.rings.len(), found: gates.len() });
    }
    let mut dev = device.clone();
    dev.pump = PumpScheme::Split { amplitude: gates.to_vec() };
    let grid = configure(&dev)?;
    Ok((emit_state(&dev, &grid)?, grid))
}

/// Equal gates on the listed rings, the others closed.
pub fn gates_for(rings: &[usize], n: usize) -> Vec<Complex64> {
    let a = 1.0 / (rings.len() as f64).sqrt();
    (0..n).map(|j| if rings.contains(&j) { c(a, 0.0) } else { c(0.0, 0.0) }).collect()
}

/// p |Phi+>_{l,m}<Phi+| + (1 - p) (|ll><ll| + |mm><mm|) / 2 in dimension d x d.
pub fn pair_mixture(d: usize, l: usize, m: usize, p: f64) -> Result<BinState> {
    if l >= d || m >= d || l == m {
        return Err(Error::InvalidParameter(format!("bad bin pair ({l}, {m}) for d = {d}")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CVector::zeros(d * d);
    v[l * d + l] = c(h, 0.0);
    v[m * d + m] = c(h, 0.0);
    let mut noise = CMatrix::zeros(d * d, d * d);
    noise[(l * d + l, l * d + l)] = c(0.5, 0.0);
    noise[(m * d + m, m * d + m)] = c(0.5, 0.0);
    let rho = outer(&v) * c(p, 0.0) + noise * c(1.0 - p, 0.0);
    BinState::mixed(d, d, rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    /// counts[l][m]: signal bin l, idler bin m.
    pub counts: Vec<Vec<u64>>,
    pub t_acq_s: f64,
    pub seed: u64,
    pub floor_hz: f64,
}

impl CorrelationMatrix {
    /// Correlated (diagonal) over uncorrelated (off-diagonal) counts.
    pub fn correlated_ratio(&self) -> f64 {
        let mut diag = 0u64;
        let mut off = 0u64;
        for (l, row) in self.counts.iter().enumerate() {
            for (m, &n) in row.iter().enumerate() {
                if l == m {
                    diag += n;
                } else {
                    off += n;
                }
            }
        }
        if off == 0 {
            f64::INFINITY
        } else {
            diag as f64 / off as f64
        }
    }
}

/// Z-basis counts with mean R |<lm|psi>|^2 T plus a flat per-cell floor.
/// `floor_hz` defaults to `rate_hz * DEFAULT_FLOOR_FRACTION`.
pub fn z_basis_matrix(
    state: &BinState,
    rate_hz: f64,
    floor_hz: Option<f64>,
    t_acq_s: f64,
    seed: u64,
) -> Result<CorrelationMatrix> {
    let (ds, di) = state.dims();
    let floor = floor_hz.unwrap_or(rate_hz * DEFAULT_FLOOR_FRACTION);
    let mut counts = vec![vec![0u64; di]; ds];
    for (l, row) in counts.iter_mut().enumerate() {
        for (m, cell) in row.iter_mut().enumerate() {
            let p = BinState::basis(ds, di, l, m);
            let prob = state.probability(p.amplitudes().expect("basis state is pure"))?;
            let mut rng = stream_rng(seed, (l * di + m) as u64);
            *cell = poisson(&mut rng, (rate_hz * prob + floor) * t_acq_s);
        }
    }
    Ok(CorrelationMatrix { counts, t_acq_s, seed, floor_hz: floor })
}

/// Coincidence-rate scan over the signal drive phase for the neighbouring
/// bins (l, m). Both phase modulators run at the bin spacing with
/// J0 = J1 and both filters sit on bin m, so the baseband of bin m
/// interferes with the first sideband of bin l.
pub fn adjacent_bell_scan(
    state: &BinState,
    grid: &BinGrid,
    pair: (usize, usize),
    alphas: &[f64],
    r0_hz: f64,
    noise: Option<&ScanNoise>,
) -> Result<FringeScan> {
    let (l, m) = pair;
    if l.abs_diff(m) != 1 {
        return Err(Error::NonAdjacentPair(l, m));
    }
    let (ds, di) = grid.dims();
    if state.dims() != (ds, di) || l.max(m) >= ds.min(di) {
        return Err(Error::DimensionMismatch { expected: ds * di, found: state.dim() });
    }
    let beta = equal_amplitude_index();
    let fm = |arm: Arm| (grid.bins(arm)[m] - grid.bins(arm)[l]).abs();
    let idler_eom = EomSpec::phase(fm(Arm::Idler), beta, 0.0);
    let pi = mix_projector(grid, Arm::Idler, &idler_eom, grid.idler_bins[m])?;
    let rates = alphas
        .iter()
        .map(|&alpha| {
            let eom = EomSpec::phase(fm(Arm::Signal), beta, alpha);
            let ps = mix_projector(grid, Arm::Signal, &eom, grid.signal_bins[m])?;
            let joint = ps.vector.kronecker(&pi.vector);
            Ok(r0_hz * state.probability(&joint)? * ps.throughput * pi.throughput)
        })
        .collect::<Result<Vec<f64>>>()?;
    rate_scan(FringeAxis::EomPhase, alphas, &rates, noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlate::{entanglement_witness, fit_visibility, FitModel, FitOptions};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn alphas() -> Vec<f64> {
        (0..12).map(|k| 2.0 * PI * k as f64 / 12.0).collect()
    }

    fn amp(e: &Emission, s: usize, i: usize) -> Complex64 {
        e.state.amplitudes().unwrap()[s * 4 + i]
    }

    #[test]
    fn gate_examples() {
        let dev = DeviceConfig::qudit();
        let (e, _) = qudit_emit(&dev, &gates_for(&[0], 4)).unwrap();
        assert_abs_diff_eq!(amp(&e, 0, 0).norm(), 1.0, epsilon = 1e-12);
        let (e, _) = qudit_emit(&dev, &gates_for(&[1, 2], 4)).unwrap();
        assert_abs_diff_eq!(amp(&e, 1, 1).norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(amp(&e, 2, 2).norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        let (e, _) = qudit_emit(&dev, &gates_for(&[0, 1, 2, 3], 4)).unwrap();
        for j in 0..4 {
            assert_abs_diff_eq!(amp(&e, j, j).re, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn permuted_gates_permute_amplitudes() {
        let dev = DeviceConfig::qudit();
        let gates = vec![c(0.1, 0.0), c(0.5, 0.2), c(0.3, -0.4), c(0.6, 0.0)];
        let perm = [2, 0, 3, 1];
        let permuted: Vec<_> = (0..4).map(|j| gates[perm[j]]).collect();
        let (a, _) = qudit_emit(&dev, &gates).unwrap();
        let (b, _) = qudit_emit(&dev, &permuted).unwrap();
        // compare up to the global phase fixed by the first non-zero amplitude
        let ratio = amp(&b, 0, 0) / amp(&a, perm[0], perm[0]);
        for j in 0..4 {
            assert_abs_diff_eq!((amp(&b, j, j) - amp(&a, perm[j], perm[j]) * ratio).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn z_basis_examples() {
        let s = BinState::basis(4, 4, 1, 1);
        let m = z_basis_matrix(&s, 1e4, Some(0.0), 10.0, 1).unwrap();
        for l in 0..4 {
            for k in 0..4 {
                assert_eq!(m.counts[l][k] > 0, l == 1 && k == 1);
            }
        }
        let s = BinState::basis(4, 4, 0, 0);
        let m = z_basis_matrix(&s, 1e4, None, 15.0, 2).unwrap();
        let r = m.correlated_ratio();
        assert!((r - 100.0).abs() < 50.0, "{r}");
    }

    #[test]
    fn maximally_correlated_is_flat_diagonal() {
        let dev = DeviceConfig::qudit();
        let (e, _) = qudit_emit(&dev, &gates_for(&[0, 1, 2, 3], 4)).unwrap();
        let m = z_basis_matrix(&e.state, 4e4, Some(0.0), 1.0, 3).unwrap();
        for l in 0..4 {
            let n = m.counts[l][l] as f64;
            assert!((n - 1e4).abs() < 5.0 * 100.0);
        }
    }

    #[test]
    fn ratio_falls_with_floor() {
        let s = BinState::basis(4, 4, 2, 2);
        let ratios: Vec<f64> =
            [1.0, 10.0, 100.0].iter().map(|&f| z_basis_matrix(&s, 1e5, Some(f), 15.0, 4).unwrap().correlated_ratio()).collect();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2]);
    }

    #[test]
    fn adjacent_visibility_equals_mixture_weight() {
        let grid = configure(&DeviceConfig::qudit()).unwrap();
        for (l, m) in [(0, 1), (1, 2), (2, 3)] {
            for p in [1.0, 0.884, 0.5] {
                let s = pair_mixture(4, l, m, p).unwrap();
                let scan = adjacent_bell_scan(&s, &grid, (l, m), &alphas(), 1e3, None).unwrap();
                let v = fit_visibility(&scan, FitModel::BellCosine, &FitOptions::default()).unwrap().visibility;
                assert_abs_diff_eq!(v, p, epsilon = 1e-6);
            }
        }
        for v in [0.831, 0.884, 0.81] {
            assert!(entanglement_witness(v));
        }
    }

    #[test]
    fn emitted_pair_interferes() {
        let dev = DeviceConfig::qudit();
        let (e, grid) = qudit_emit(&dev, &gates_for(&[0, 1], 4)).unwrap();
        let scan = adjacent_bell_scan(&e.state, &grid, (0, 1), &alphas(), 1e3, None).unwrap();
        let v = fit_visibility(&scan, FitModel::BellCosine, &FitOptions::default()).unwrap().visibility;
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn non_adjacent_pair_rejected() {
        let grid = configure(&DeviceConfig::qudit()).unwrap();
        let s = pair_mixture(4, 0, 2, 1.0).unwrap();
        assert!(matches!(adjacent_bell_scan(&s, &grid, (0, 2), &alphas(), 1.0, None), Err(Error::NonAdjacentPair(0, 2))));
    }
}
