//! Poisson maximum-likelihood reconstruction with the Cholesky
//! parameterization rho = T^dagger T / Tr(T^dagger T).

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::TomographySettings;
use crate::error::{Error, Result};
use crate::pairgen::CountRecord;
use crate::rng::stream_rng;
use crate::state::{c, CMatrix, CVector};

const LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub restart_seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, gradient_tolerance: 1e-8, step_tolerance: 1e-10, restart_seed: 0x7a3d }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrixEstimate {
    pub rho: CMatrix,
    /// Sum of n ln(lambda) - lambda at the optimum.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Normalized negative log-likelihood after each accepted step.
    pub objective_trace: Vec<f64>,
}

struct Problem {
    dim: usize,
    vectors: Vec<CVector>,
    weights: Vec<f64>,
    counts: Vec<f64>,
    accidentals: Vec<f64>,
    scale: f64,
}

impl Problem {
    fn n_params(&self) -> usize {
        self.dim * self.dim
    }

    /// Lower-triangular T: real diagonal first, then (re, im) of each a > b entry.
    fn unpack(&self, x: &[f64]) -> CMatrix {
        let d = self.dim;
        let mut t = CMatrix::zeros(d, d);
        let mut k = d;
        for a in 0..d {
            t[(a, a)] = c(x[a], 0.0);
            for b in 0..a {
                t[(a, b)] = c(x[k], x[k + 1]);
                k += 2;
            }
        }
        t
    }

    fn lambdas(&self, t: &CMatrix) -> Vec<(f64, CVector)> {
        self.vectors
            .iter()
            .zip(&self.weights)
            .zip(&self.accidentals)
            .map(|((v, w), acc)| {
                let u = t * v;
                (w * u.norm_squared() + acc, u)
            })
            .collect()
    }

    /// Negative log-likelihood divided by the total count, and its gradient.
    fn objective(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dim;
        let t = self.unpack(x);
        let mut f = 0.0;
        let mut g = vec![0.0; self.n_params()];
        for (k, (lam, u)) in self.lambdas(&t).into_iter().enumerate() {
            let n = self.counts[k];
            let lam_c = lam.max(LAMBDA_FLOOR);
            f += lam_c - n * lam_c.ln();
            if lam <= LAMBDA_FLOOR {
                continue;
            }
            let coef = (1.0 - n / lam) * self.weights[k];
            let v = &self.vectors[k];
            let mut idx = d;
            for a in 0..d {
                let ua = u[a].conj();
                g[a] += coef * 2.0 * (ua * v[a]).re;
                for b in 0..a {
                    let z = ua * v[b];
                    g[idx] += coef * 2.0 * z.re;
                    g[idx + 1] += coef * -2.0 * z.im;
                    idx += 2;
                }
            }
        }
        (f / self.scale, g.into_iter().map(|x| x / self.scale).collect())
    }
}

struct Outcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn bfgs(p: &Problem, x0: Vec<f64>, opts: &MleOptions) -> Outcome {
    let n = x0.len();
    let mut x = DVector::from_vec(x0);
    let (mut f, g) = p.objective(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut trace = vec![f];
    for it in 0..opts.max_iterations {
        if g.norm() < opts.gradient_tolerance {
            return Outcome { x: x.as_slice().to_vec(), f, iterations: it, converged: true, trace };
        }
        let mut dir = -(&h * &g);
        if dir.dot(&g) >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * step;
            let (ft, gt) = p.objective(trial.as_slice());
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, DVector::from_vec(gt)));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            // no descent possible along any scaled direction: stationary to working precision
            let converged = g.norm() < opts.gradient_tolerance.sqrt();
            return Outcome { x: x.as_slice().to_vec(), f, iterations: it, converged, trace };
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let step_norm = s.norm();
        x = xn;
        f = fnew;
        g = gn;
        trace.push(f);
        if step_norm < opts.step_tolerance * (1.0 + x.norm()) {
            return Outcome { x: x.as_slice().to_vec(), f, iterations: it + 1, converged: true, trace };
        }
        let sy = s.dot(&y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let left = &i - &s * y.transpose() * rho;
            let right = &i - &y * s.transpose() * rho;
            h = &left * &h * &right + &s * s.transpose() * rho;
        }
    }
    let converged = g.norm() < opts.gradient_tolerance;
    Outcome { x: x.as_slice().to_vec(), f, iterations: opts.max_iterations, converged, trace }
}

/// Reconstruct rho from one record per setting (matched by `setting_id`).
pub fn mle_reconstruct(
    records: &[CountRecord],
    settings: &TomographySettings,
    options: &MleOptions,
) -> Result<DensityMatrixEstimate> {
    if records.len() != settings.len() {
        return Err(Error::DimensionMismatch { expected: settings.len(), found: records.len() });
    }
    let dim = settings.settings.first().map(|s| s.joint().len()).unwrap_or(0);
    let mut vectors = Vec::new();
    let mut weights = Vec::new();
    let mut counts = Vec::new();
    let mut accidentals = Vec::new();
    for s in &settings.settings {
        let r = records
            .iter()
            .find(|r| r.setting_id == s.id)
            .ok_or_else(|| Error::InvalidParameter(format!("no record for setting {}", s.id)))?;
        let v = s.joint();
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        vectors.push(v);
        weights.push(s.throughput() * r.t_acq_s);
        counts.push(r.coincidences as f64);
        accidentals.push(r.accidentals.max(0.0));
    }
    let total: f64 = counts.iter().sum();
    let signal: f64 = counts.iter().zip(&accidentals).map(|(n, a)| n - a).sum();
    if !(total > 0.0) || !(signal > 0.0) {
        // nothing above background: no information beyond the trace
        let rho = CMatrix::identity(dim, dim) * c(1.0 / dim as f64, 0.0);
        return Ok(DensityMatrixEstimate { rho, log_likelihood: 0.0, iterations: 0, converged: true, objective_trace: vec![] });
    }
    let p = Problem { dim, vectors, weights, counts, accidentals, scale: total };

    // T = sqrt(s) I, with s matching the signal counts for rho = I / d
    let s0 = (signal / p.weights.iter().sum::<f64>()).max(LAMBDA_FLOOR);
    let mut x0 = vec![0.0; p.n_params()];
    for v in x0.iter_mut().take(dim) {
        *v = s0.sqrt();
    }
    let mut best = bfgs(&p, x0.clone(), options);
    if !best.converged {
        let mut rng = stream_rng(options.restart_seed, 1);
        let x1: Vec<f64> = x0.iter().map(|v| v + s0.sqrt() * (rng.random::<f64>() - 0.5)).collect();
        let second = bfgs(&p, x1, options);
        if second.converged || second.f < best.f {
            best = second;
        }
    }

    let t = p.unpack(&best.x);
    let m = t.adjoint() * &t;
    let tr = m.trace().re;
    if !(tr > 0.0) {
        return Err(Error::NumericalFailure("reconstructed T vanished".into()));
    }
    let mut rho = m * c(1.0 / tr, 0.0);
    rho = (&rho + rho.adjoint()) * c(0.5, 0.0);
    let log_likelihood = -best.f * p.scale;
    Ok(DensityMatrixEstimate {
        rho,
        log_likelihood,
        iterations: best.iterations,
        converged: best.converged,
        objective_trace: best.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairgen::RateModel;
    use crate::state::{BinState, Bell};
    use crate::tomo::{expected_counts, fidelity, ideal_settings, purity, Exposure};
    use approx::assert_abs_diff_eq;

    fn records_from(counts: &[f64], t: f64) -> Vec<CountRecord> {
        counts
            .iter()
            .enumerate()
            .map(|(k, &n)| CountRecord {
                setting_id: k,
                singles_signal: n.round() as u64,
                singles_idler: n.round() as u64,
                coincidences: n.round() as u64,
                accidentals: 0.0,
                window_s: 380e-12,
                t_acq_s: t,
                seed: 0,
            })
            .collect()
    }

    #[test]
    fn finite_difference_gradient() {
        let set = ideal_settings();
        let state = BinState::werner(0.8, Bell::PsiPlus);
        let counts = expected_counts(&state, &set, &RateModel::ideal(1e3)).unwrap();
        let p = Problem {
            dim: 4,
            vectors: set.settings.iter().map(|s| s.joint()).collect(),
            weights: vec![15.0; 16],
            counts,
            accidentals: vec![3.0; 16],
            scale: 1e4,
        };
        let x: Vec<f64> = (0..16).map(|k| 1.0 + 0.1 * k as f64 - 0.05 * (k * k) as f64 / 16.0).collect();
        let (_, g) = p.objective(&x);
        for k in 0..16 {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let fd = (p.objective(&xp).0 - p.objective(&xm).0) / (2.0 * h);
            assert_abs_diff_eq!(g[k], fd, epsilon = 1e-6 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn exact_counts_invert() {
        let set = ideal_settings();
        for b in [Bell::PhiPlus, Bell::PsiMinus] {
            let state = BinState::bell(b);
            let model = Exposure { car: None, ..Exposure::standard() }.rate_model(&state, &set).unwrap();
            let counts = expected_counts(&state, &set, &model).unwrap();
            let est = mle_reconstruct(&records_from(&counts, 15.0), &set, &MleOptions::default()).unwrap();
            assert!(fidelity(&est.rho, state.amplitudes().unwrap()).unwrap() >= 0.999);
            assert!(est.converged);
        }
    }

    #[test]
    fn flat_counts_give_maximally_mixed() {
        let set = ideal_settings();
        let est = mle_reconstruct(&records_from(&[500.0; 16], 15.0), &set, &MleOptions::default()).unwrap();
        assert!(purity(&est.rho) <= 0.26);
    }

    #[test]
    fn zero_counts_are_handled() {
        let set = ideal_settings();
        let est = mle_reconstruct(&records_from(&[0.0; 16], 15.0), &set, &MleOptions::default()).unwrap();
        assert_abs_diff_eq!(purity(&est.rho), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn missing_setting_is_an_error() {
        let set = ideal_settings();
        let mut recs = records_from(&[10.0; 16], 1.0);
        recs[3].setting_id = 99;
        assert!(mle_reconstruct(&recs, &set, &MleOptions::default()).is_err());
        assert!(mle_reconstruct(&recs[..4], &set, &MleOptions::default()).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn output_is_physical_and_monotone(counts in proptest::collection::vec(0u64..5000, 16)) {
            let set = ideal_settings();
            let c: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
            let est = mle_reconstruct(&records_from(&c, 15.0), &set, &MleOptions::default()).unwrap();
            let rho = &est.rho;
            proptest::prop_assert!((rho - rho.adjoint()).norm() < 1e-12);
            proptest::prop_assert!((rho.trace().re - 1.0).abs() < 1e-9);
            let min = nalgebra::SymmetricEigen::new(rho.clone()).eigenvalues.min();
            proptest::prop_assert!(min >= -1e-9);
            for w in est.objective_trace.windows(2) {
                proptest::prop_assert!(w[1] <= w[0]);
            }
        }
    }
}
