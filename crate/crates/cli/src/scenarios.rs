//! The simulations behind each scenario, producing in-memory artifacts.

use std::f64::consts::PI;

use fbsim_core::binops::Arm;
use fbsim_core::config::SimConfig;
use fbsim_core::correlate::{
    bell_scan, entanglement_witness, fit_visibility, g2_closed_form, synthetic_fm_scan, BellMeasurement,
    FitModel, FitOptions, FitResult, InterferenceParams, ScanNoise,
};
use fbsim_core::io;
use fbsim_core::pairgen::{emit_state, sample_rates, Emission};
use fbsim_core::qudit::{adjacent_bell_scan, gates_for, pair_mixture, qudit_emit, z_basis_matrix};
use fbsim_core::spectra::{configure, device_transmission, BinGrid, Mode};
use fbsim_core::state::{BinState, NamedState};
use fbsim_core::tomo::{
    concurrence, entanglement_of_formation, fidelity, mle_reconstruct, purity, settings_with_index,
    simulate_records, MleOptions,
};
use toml::{Table, Value};

use crate::error::{RunError, RunResult};
use crate::plan::Scenario;
use crate::runner::Artifact;

pub struct Context<'a> {
    pub cfg: &'a SimConfig,
    pub seed: u64,
    pub meta: Vec<(String, String)>,
}

pub fn run(scenario: Scenario, ctx: &Context) -> RunResult<Vec<Artifact>> {
    match scenario {
        Scenario::PowerScan => power_scan(ctx),
        Scenario::FringeScan => fringe_scan(ctx),
        Scenario::BellScan => bell(ctx),
        Scenario::Tomography => tomography(ctx),
        Scenario::QuditZbasis => qudit_zbasis(ctx),
        Scenario::QuditBell => qudit_bell(ctx),
        Scenario::Spectrum => spectrum(ctx),
    }
}

fn artifact(file: &str, contents: String) -> Artifact {
    Artifact { file: file.to_string(), contents }
}

/// `[provenance]` and `[metrics]` tables as TOML.
pub fn metrics_file(meta: &[(String, String)], metrics: Table) -> RunResult<String> {
    let mut prov = Table::new();
    for (k, v) in meta {
        let value = match k.as_str() {
            "seed" => Value::Integer(v.parse::<i64>().unwrap_or(i64::MAX)),
            _ => Value::String(v.clone()),
        };
        prov.insert(k.clone(), value);
    }
    let mut root = Table::new();
    root.insert("provenance".into(), Value::Table(prov));
    root.insert("metrics".into(), Value::Table(metrics));
    toml::to_string(&root).map_err(|e| RunError::Scenario(e.to_string()))
}

fn put(t: &mut Table, key: &str, v: impl Into<Value>) {
    t.insert(key.to_string(), v.into());
}

fn emit(cfg: &SimConfig) -> RunResult<(Emission, BinGrid)> {
    let grid = configure(&cfg.device)?;
    Ok((emit_state(&cfg.device, &grid)?, grid))
}

fn noise(cfg: &SimConfig, seed: u64) -> Option<ScanNoise> {
    (cfg.exposure.car > 0.0).then(|| ScanNoise { t_acq_s: cfg.exposure.t_acq_s, car: cfg.exposure.car, seed })
}

fn phase_axis(points: usize) -> Vec<f64> {
    (0..points).map(|k| 2.0 * PI * k as f64 / points as f64).collect()
}

fn fit_metrics(t: &mut Table, fit: &FitResult) {
    put(t, "visibility", fit.visibility);
    put(t, "visibility_sigma", fit.sigma_visibility);
    put(t, "phase_rad", fit.phase);
    put(t, "phase_sigma_rad", fit.sigma_phase);
    if let Some(c) = fit.chi2_dof {
        put(t, "chi2_dof", c);
    }
    put(t, "entanglement_witness", entanglement_witness(fit.visibility));
}

fn power_scan(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let cfg = ctx.cfg;
    let grid = configure(&cfg.device)?;
    let t = cfg.exposure.t_acq_s;
    let mut rows = Vec::new();
    let mut warnings = 0i64;
    for (k, p) in cfg.power_scan.powers().into_iter().enumerate() {
        let mut dev = cfg.device.clone();
        dev.pump_power_uw = p;
        let e = emit_state(&dev, &grid)?;
        let model = cfg.channels.rate_model(e.total_rate_hz());
        let rec = sample_rates(model.expected_rates(1.0, 1.0, 1.0), &model, t, ctx.seed, k);
        if e.double_pair_risk(model.window_s).is_some() {
            warnings += 1;
        }
        let net = (rec.coincidences as f64 - rec.accidentals) / t;
        rows.push(vec![p, e.total_rate_hz(), net, rec.car().value]);
    }
    let csv = io::write_table(&["P_uW", "pair_rate_Hz", "rate_Hz", "CAR"], &rows, &ctx.meta)?;
    let mut m = Table::new();
    let cars: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    put(&mut m, "car_min", cars.iter().copied().fold(f64::INFINITY, f64::min));
    put(&mut m, "car_at_max_power", *cars.last().unwrap_or(&f64::NAN));
    put(&mut m, "rate_at_max_power_hz", rows.last().map_or(f64::NAN, |r| r[2]));
    put(&mut m, "double_pair_warnings", warnings);
    Ok(vec![artifact("power_scan.csv", csv), artifact("metrics.toml", metrics_file(&ctx.meta, m)?)])
}

fn spectrum(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let dev = &ctx.cfg.device;
    let grid = configure(dev)?;
    let order = dev.bin_order as i32 + 1;
    let mut freqs = Vec::new();
    for ring in &dev.rings {
        let w = 5.0 * ring.linewidth_ghz;
        for m in -order..=order {
            let f0 = ring.resonance(m);
            freqs.extend((0..=200).map(|k| f0 - w + 2.0 * w * f64::from(k) / 200.0));
        }
    }
    freqs.sort_by(f64::total_cmp);
    freqs.dedup();
    let points: Vec<(f64, f64)> = freqs.iter().map(|&f| (f, device_transmission(dev, f))).collect();
    let mut meta = ctx.meta.clone();
    meta.push(("reference_thz".into(), dev.reference_thz.to_string()));
    let csv = io::write_spectrum(&points, &meta)?;
    let mut m = Table::new();
    put(&mut m, "linewidth_ghz", grid.linewidth_ghz);
    let arr = |v: Vec<f64>| Value::Array(v.into_iter().map(Value::Float).collect());
    m.insert("signal_bins_ghz".into(), arr(grid.signal_bins.clone()));
    m.insert("idler_bins_ghz".into(), arr(grid.idler_bins.clone()));
    m.insert("signal_spacings_ghz".into(), arr(grid.spacings(Arm::Signal)));
    Ok(vec![artifact("spectrum.csv", csv), artifact("metrics.toml", metrics_file(&ctx.meta, m)?)])
}

/// Phase of the second pair amplitude relative to the first.
fn relative_phase(state: &BinState, phi: bool) -> Option<f64> {
    let v = state.amplitudes()?;
    let (a, b) = if phi { (v[0], v[3]) } else { (v[1], v[2]) };
    (a.norm() > 1e-12 && b.norm() > 1e-12).then(|| (b / a).arg())
}

fn fringe_scan(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let cfg = ctx.cfg;
    let (e, grid) = emit(cfg)?;
    let theta = relative_phase(&e.state, cfg.device.mode == Mode::Phi)
        .ok_or_else(|| RunError::Scenario("fringe scan needs both pair amplitudes non-zero".into()))?;
    let spacing = grid.spacing(Arm::Signal);
    let it = &cfg.interference;
    let base = InterferenceParams {
        spacing_ghz: spacing,
        linewidth_ghz: grid.linewidth_ghz,
        theta,
        delay_ns: it.delay_ns,
        phase_s: theta / 2.0,
        phase_i: 0.0,
        f_m_ghz: spacing / 2.0,
    };
    let n = it.fm_points;
    let fms: Vec<f64> = (0..n)
        .map(|k| spacing / 2.0 - it.fm_half_range_ghz + 2.0 * it.fm_half_range_ghz * k as f64 / (n - 1) as f64)
        .collect();
    let counting = (cfg.exposure.car > 0.0).then_some((cfg.exposure.mean_coincidence_hz, cfg.exposure.t_acq_s, ctx.seed));
    let scan = synthetic_fm_scan(&base, &fms, it.visibility, counting)?;
    let fit = fit_visibility(
        &scan,
        FitModel::LorentzianFringe { spacing_ghz: spacing, linewidth_ghz: grid.linewidth_ghz },
        &FitOptions::default(),
    )?;
    let mut m = Table::new();
    put(&mut m, "g2_at_half_spacing", g2_closed_form(&base));
    fit_metrics(&mut m, &fit);
    if let (Some(d), Some(s)) = (fit.delay_ns, fit.sigma_delay_ns) {
        put(&mut m, "delay_ns", d);
        put(&mut m, "delay_sigma_ns", s);
    }
    if let Some(p) = fit.fm_period_ghz() {
        put(&mut m, "fm_period_mhz", p * 1e3);
    }
    Ok(vec![artifact("fringe.csv", io::write_fringe(&scan, &ctx.meta)?), artifact("metrics.toml", metrics_file(&ctx.meta, m)?)])
}

fn bell(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let cfg = ctx.cfg;
    let (e, _) = emit(cfg)?;
    let alphas = phase_axis(cfg.interference.phase_points);
    let unit = bell_scan(&e.state, &alphas, 1.0, BellMeasurement::Local, None)?;
    let mean = unit.ys().iter().sum::<f64>() / alphas.len() as f64;
    let r0 = cfg.exposure.mean_coincidence_hz / mean;
    let scan = bell_scan(&e.state, &alphas, r0, BellMeasurement::Local, noise(cfg, ctx.seed).as_ref())?;
    let fit = fit_visibility(&scan, FitModel::BellCosine, &FitOptions::default())?;
    let mut m = Table::new();
    fit_metrics(&mut m, &fit);
    Ok(vec![artifact("bell.csv", io::write_fringe(&scan, &ctx.meta)?), artifact("metrics.toml", metrics_file(&ctx.meta, m)?)])
}

/// Name of the programmable state closest to `state`, with its fidelity.
pub fn closest_named(state: &BinState) -> (NamedState, f64) {
    NamedState::ALL
        .into_iter()
        .map(|n| {
            let f = state.probability(n.state().amplitudes().expect("named states are pure")).unwrap_or(0.0);
            (n, f)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("eight named states")
}

const BOOTSTRAP: u64 = 20;

fn tomography(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let cfg = ctx.cfg;
    let (e, grid) = emit(cfg)?;
    let mut settings = settings_with_index(&grid, cfg.modulators.beta)?;
    settings.t_acq_s = cfg.exposure.t_acq_s;
    let model = cfg.exposure.exposure().rate_model(&e.state, &settings)?;
    let records = simulate_records(&e.state, &settings, &model, ctx.seed)?;
    let opts = MleOptions::default();
    let est = mle_reconstruct(&records, &settings, &opts)?;
    let target = e.state.amplitudes().expect("emitted states are pure");
    let figures = |rho: &fbsim_core::state::CMatrix| -> RunResult<[f64; 3]> {
        Ok([fidelity(rho, target)?, purity(rho), entanglement_of_formation(rho)?])
    };
    let point = figures(&est.rho)?;
    // parametric bootstrap around the estimate
    let fitted = BinState::mixed(2, 2, est.rho.clone())?;
    let mut samples = Vec::new();
    for b in 0..BOOTSTRAP {
        let seed = ctx.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(b + 1);
        let recs = simulate_records(&fitted, &settings, &model, seed)?;
        samples.push(figures(&mle_reconstruct(&recs, &settings, &opts)?.rho)?);
    }
    let sigma = |k: usize| {
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    };
    let (name, overlap) = closest_named(&e.state);
    let mut m = Table::new();
    put(&mut m, "target_state", name.to_string());
    put(&mut m, "target_overlap", overlap);
    for (k, key) in ["fidelity", "purity", "entanglement_of_formation"].into_iter().enumerate() {
        put(&mut m, key, point[k]);
        put(&mut m, &format!("{key}_sigma"), sigma(k));
    }
    put(&mut m, "concurrence", concurrence(&est.rho)?);
    put(&mut m, "converged", est.converged);
    put(&mut m, "iterations", est.iterations as i64);
    put(&mut m, "log_likelihood", est.log_likelihood);
    put(&mut m, "bootstrap_samples", BOOTSTRAP as i64);

    let mut dm_metrics: Vec<(String, String)> = vec![
        ("target_state".into(), name.to_string()),
        ("fidelity".into(), point[0].to_string()),
        ("purity".into(), point[1].to_string()),
        ("entanglement_of_formation".into(), point[2].to_string()),
        ("converged".into(), est.converged.to_string()),
        ("iterations".into(), est.iterations.to_string()),
    ];
    dm_metrics.push(("log_likelihood".into(), est.log_likelihood.to_string()));
    Ok(vec![
        artifact("counts.csv", io::write_counts(&records, Some(&settings), &ctx.meta)?),
        artifact("settings.csv", io::write_settings(&settings, &ctx.meta)?),
        artifact("density_matrix.txt", io::write_density_matrix(&est.rho, &dm_metrics, &ctx.meta)),
        artifact("metrics.toml", metrics_file(&ctx.meta, m)?),
    ])
}

fn qudit_zbasis(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let cfg = ctx.cfg;
    let (e, grid) = emit(cfg)?;
    let q = &cfg.qudit;
    let matrix = z_basis_matrix(&e.state, q.rate_hz, Some(q.rate_hz * q.floor_fraction), cfg.exposure.t_acq_s, ctx.seed)?;
    let mut m = Table::new();
    put(&mut m, "correlated_ratio", matrix.correlated_ratio());
    put(&mut m, "floor_hz", matrix.floor_hz);
    m.insert(
        "signal_spacings_ghz".into(),
        Value::Array(grid.spacings(Arm::Signal).into_iter().map(Value::Float).collect()),
    );
    Ok(vec![
        artifact("correlation.csv", io::write_correlation_matrix(&matrix, &ctx.meta)?),
        artifact("metrics.toml", metrics_file(&ctx.meta, m)?),
    ])
}

fn qudit_bell(ctx: &Context) -> RunResult<Vec<Artifact>> {
    let cfg = ctx.cfg;
    let [l, m] = cfg.qudit.bell_pair;
    let n = cfg.device.rings.len();
    let (e, grid) = qudit_emit(&cfg.device, &gates_for(&[l, m], n))?;
    let state = if cfg.qudit.pair_weight < 1.0 {
        e.state.mix(&pair_mixture(n, l, m, 0.0)?, cfg.qudit.pair_weight)?
    } else {
        e.state
    };
    let alphas = phase_axis(cfg.interference.phase_points);
    let unit = adjacent_bell_scan(&state, &grid, (l, m), &alphas, 1.0, None)?;
    let mean = unit.ys().iter().sum::<f64>() / alphas.len() as f64;
    let r0 = cfg.qudit.rate_hz / mean;
    let scan = adjacent_bell_scan(&state, &grid, (l, m), &alphas, r0, noise(cfg, ctx.seed).as_ref())?;
    let fit = fit_visibility(&scan, FitModel::BellCosine, &FitOptions::default())?;
    let mut t = Table::new();
    t.insert("bins".into(), Value::Array(vec![Value::Integer(l as i64), Value::Integer(m as i64)]));
    fit_metrics(&mut t, &fit);
    Ok(vec![artifact("bell.csv", io::write_fringe(&scan, &ctx.meta)?), artifact("metrics.toml", metrics_file(&ctx.meta, t)?)])
}
