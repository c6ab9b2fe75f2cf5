use fbsim_core::binops::Projector;
use fbsim_core::pairgen::{sample_counts, RateModel};
use fbsim_core::state::{BinState, Bell};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

/// Pearson chi-square of sampled coincidences against Poisson(mean), bins
/// merged until each expects at least 5 draws.
fn chi_square_p(samples: &[u64], mean: f64) -> f64 {
    let n = samples.len() as f64;
    let pois = Poisson::new(mean).unwrap();
    let lo = (mean - 5.0 * mean.sqrt()).max(0.0) as u64;
    let hi = (mean + 5.0 * mean.sqrt()) as u64;
    let mut edges = vec![lo];
    let mut acc = 0.0;
    for k in lo..=hi {
        acc += pois.pmf(k) * n;
        if acc >= 5.0 {
            edges.push(k + 1);
            acc = 0.0;
        }
    }
    let mut chi2 = 0.0;
    let mut bins = 0;
    for w in edges.windows(2) {
        let expect: f64 = (w[0]..w[1]).map(|k| pois.pmf(k)).sum::<f64>() * n;
        let seen = samples.iter().filter(|&&x| x >= w[0] && x < w[1]).count() as f64;
        chi2 += (seen - expect).powi(2) / expect;
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2)
}

#[test]
fn coincidences_are_poisson_at_the_born_rate() {
    let state = BinState::bell(Bell::PhiPlus);
    let ps = Projector::superposition(2, 0, 1, 0.0);
    let pi = Projector::basis(2, 0);
    let rates = RateModel::ideal(400.0);
    let t = 0.25;
    // R |<D, 0|Phi+>|^2 T = 400 * 0.25 * 0.25
    let mean = 25.0;
    let samples: Vec<u64> =
        (0..4000).map(|seed| sample_counts(&state, (&ps, &pi), &rates, t, seed, 0).unwrap().coincidences).collect();
    let avg = samples.iter().sum::<u64>() as f64 / samples.len() as f64;
    assert!((avg - mean).abs() < 4.0 * (mean / 4000.0).sqrt(), "{avg}");
    let p = chi_square_p(&samples, mean);
    assert!(p > 1e-3, "chi-square p = {p}");
}

#[test]
fn seed_streams_are_independent_of_setting_order() {
    let state = BinState::werner(0.7, Bell::PsiMinus);
    let ps = Projector::basis(2, 1);
    let pi = Projector::basis(2, 0);
    let rates = RateModel::with_default_losses(1e5);
    let a = sample_counts(&state, (&ps, &pi), &rates, 1.0, 11, 3).unwrap();
    let _ = sample_counts(&state, (&ps, &pi), &rates, 1.0, 11, 2).unwrap();
    let b = sample_counts(&state, (&ps, &pi), &rates, 1.0, 11, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_counts(&state, (&ps, &pi), &rates, 1.0, 12, 3).unwrap());
}
