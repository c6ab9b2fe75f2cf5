use std::path::Path;
use std::process::Command;

use fbsim::plan::{named_plan, DeviceSource, Scenario};
use fbsim::runner::{execute, run, validate};
use fbsim::RunError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fbsim"))
}

#[test]
fn shipped_configs_validate_clean() {
    for dev in ["qubit_phi", "qubit_psi", "qudit"] {
        let d = validate(&DeviceSource::parse(dev), &[], None).unwrap();
        assert!(d.is_empty(), "{dev}: {d:?}");
    }
}

#[test]
fn misaligned_phi_pump_names_the_invariant() {
    let d = validate(&DeviceSource::Builtin("qubit_phi"), &["ring.1.resonance_ghz=0.5".into()], None).unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, "phi-pump-alignment");
}

#[test]
fn pump_as_wide_as_the_resonance_is_a_regime_violation() {
    let d = validate(&DeviceSource::Builtin("qubit_phi"), &["pump.width_ghz=1.2933333333333332".into()], None).unwrap();
    assert!(d.iter().any(|x| x.code == "regime-violation"), "{d:?}");
}

#[test]
fn validate_agrees_with_run_on_every_named_plan() {
    let out = tempfile::tempdir().unwrap();
    for (name, dev, scenario, ov) in fbsim::plan::named_plans() {
        let diags = validate(&dev, &ov, Some(scenario)).unwrap();
        let plan = named_plan(&name, out.path(), Some(3)).unwrap();
        let result = execute(&plan);
        assert_eq!(diags.is_empty(), !matches!(result, Err(RunError::Scenario(_))), "{name}: {diags:?}");
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for name in ["fig2_power_scan", "fig5_phi_minus", "fig7_zbasis"] {
        let ma = run(&named_plan(name, a.path(), Some(11)).unwrap()).unwrap();
        let mb = run(&named_plan(name, b.path(), Some(11)).unwrap()).unwrap();
        for (fa, fb) in ma.files.iter().zip(&mb.files) {
            let (ta, tb) = (std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap());
            assert_eq!(ta, tb, "{}", fa.display());
            let text = String::from_utf8(ta).unwrap();
            assert!(text.contains("seed") && text.contains("config_sha256"), "{}", fa.display());
        }
    }
}

#[test]
fn power_scan_table_has_the_expected_columns() {
    let out = tempfile::tempdir().unwrap();
    let m = run(&named_plan("fig2_power_scan", out.path(), None).unwrap()).unwrap();
    let text = std::fs::read_to_string(&m.files[0]).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "P_uW,pair_rate_Hz,rate_Hz,CAR");
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let st = bin().args(["run", "fig4_bell_phi_plus", "--out", o]).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    let st = bin().args(["run", "fig4_bell_phi_plus", "--out", o, "--device", "/no/such/file.toml"]).output().unwrap().status;
    assert_eq!(st.code(), Some(2));
    let st = bin().args(["run", "fig4_bell_phi_plus", "--out", o, "--set", "ring.1.resonance_ghz=3.0"]).output().unwrap().status;
    assert_eq!(st.code(), Some(3));
    let st = bin().args(["validate", "--device", "qudit", "--scenario", "tomography"]).output().unwrap().status;
    assert_eq!(st.code(), Some(3));
}

#[test]
fn jobs_do_not_change_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let plans = ["fig4_fringe", "fig6_psi_plus", "fig7_bell_01"];
    let st = bin().arg("run").args(plans).args(["--out", a.path().to_str().unwrap()]).output().unwrap().status;
    assert!(st.success());
    let st = bin().arg("run").args(plans).args(["--jobs", "3", "--out", b.path().to_str().unwrap()]).output().unwrap().status;
    assert!(st.success());
    for p in plans {
        for f in std::fs::read_dir(a.path().join(p)).unwrap() {
            let f = f.unwrap().path();
            let g = b.path().join(p).join(f.file_name().unwrap());
            assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(g).unwrap());
        }
    }
}

#[test]
fn tomo_reads_back_simulated_counts() {
    let out = tempfile::tempdir().unwrap();
    let m = run(&named_plan("fig5_phi_plus", out.path(), None).unwrap()).unwrap();
    let counts = m.files.iter().find(|f| f.ends_with("counts.csv")).unwrap();
    let o = out.path().join("t");
    let st = bin()
        .args(["tomo", "--counts", counts.to_str().unwrap(), "--target", "phi+", "--out", o.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let dm = std::fs::read_to_string(o.join("tomo/density_matrix.txt")).unwrap();
    let f: f64 = dm.lines().find_map(|l| l.strip_prefix("fidelity = ")).unwrap().parse().unwrap();
    assert!(f > 0.99, "{f}");
}

#[test]
fn manifest_plans_run() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        "[[plan]]\nname = \"dim\"\ndevice = \"qubit_phi\"\nscenario = \"bell_scan\"\nseed = 2\noverrides = [\"exposure.car = 10.0\"]\n",
    )
    .unwrap();
    let plans = fbsim::plan::load_manifest(&manifest, dir.path(), None).unwrap();
    assert_eq!(plans[0].scenario, Scenario::BellScan);
    let m = run(&plans[0]).unwrap();
    assert!(Path::new(&m.files[0]).exists());
}
