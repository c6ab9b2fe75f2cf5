use fbsim_core::pairgen::emit_state;
use fbsim_core::spectra::{configure, DeviceConfig};
use fbsim_core::state::{BinState, Bell};
use fbsim_core::tomo::{
    entanglement_of_formation, fidelity, mle_reconstruct, purity, simulate_records, standard_settings, Exposure,
    MleOptions,
};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn reconstruct_fidelity(state: &BinState, exposure: &Exposure, seed: u64) -> (f64, f64, f64) {
    let grid = configure(&DeviceConfig::qubit_phi(0.0)).unwrap();
    let set = standard_settings(&grid).unwrap();
    let model = exposure.rate_model(state, &set).unwrap();
    let recs = simulate_records(state, &set, &model, seed).unwrap();
    let est = mle_reconstruct(&recs, &set, &MleOptions::default()).unwrap();
    assert!(est.converged);
    let target = state.amplitudes().unwrap();
    (
        fidelity(&est.rho, target).unwrap(),
        purity(&est.rho),
        entanglement_of_formation(&est.rho).unwrap(),
    )
}

#[test]
fn emitted_phi_minus_reconstructs_at_standard_exposure() {
    let dev = DeviceConfig::qubit_phi(std::f64::consts::PI);
    let grid = configure(&dev).unwrap();
    let state = emit_state(&dev, &grid).unwrap().state;
    let phi_minus = BinState::bell(Bell::PhiMinus);
    let overlap = phi_minus.amplitudes().unwrap().dotc(state.amplitudes().unwrap()).norm();
    assert!((overlap - 1.0).abs() < 1e-12);
    for seed in 0..5 {
        let (f, p, ef) = reconstruct_fidelity(&state, &Exposure::standard(), seed);
        assert!((0.90..=1.0).contains(&f), "seed {seed}: F = {f}");
        assert!(p > 0.85 && ef > 0.8, "seed {seed}: P = {p}, EF = {ef}");
    }
}

#[test]
fn more_counts_do_not_lower_median_fidelity() {
    let state = BinState::werner(0.9, Bell::PsiPlus);
    let target = BinState::werner(0.9, Bell::PsiPlus).density();
    let mut medians = Vec::new();
    for scale in [1.0, 100.0] {
        let exposure = Exposure { mean_coincidence_hz: 20.0 * scale, car: Some(50.0), t_acq_s: 1.0 };
        let grid = configure(&DeviceConfig::qubit_phi(0.0)).unwrap();
        let set = standard_settings(&grid).unwrap();
        let model = exposure.rate_model(&state, &set).unwrap();
        let dist: Vec<f64> = (0..9)
            .map(|seed| {
                let recs = simulate_records(&state, &set, &model, seed).unwrap();
                let rho = mle_reconstruct(&recs, &set, &MleOptions::default()).unwrap().rho;
                // trace distance to the true state
                let d = &rho - &target;
                0.5 * d.singular_values().sum()
            })
            .collect();
        medians.push(median(dist));
    }
    assert!(medians[1] <= medians[0], "{medians:?}");
}
