//! Plan execution: config loading with overrides, provenance, artifact
//! writing and parallel plan dispatch.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fbsim_core::config::SimConfig;
use fbsim_core::spectra::{Diagnostic, Mode};
use sha2::{Digest, Sha256};

use crate::error::{RunError, RunResult};
use crate::overrides;
use crate::plan::{DeviceSource, ExperimentPlan, Scenario};
use crate::scenarios;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One output file, held in memory until written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

/// What a completed plan wrote.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtifactManifest {
    pub plan: String,
    pub files: Vec<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parsed config plus the hash of its canonical (post-override) text.
pub struct LoadedConfig {
    pub config: SimConfig,
    pub sha256: String,
}

pub fn load_config(device: &DeviceSource, edits: &[String]) -> RunResult<LoadedConfig> {
    let text = device.text()?;
    let mut value: toml::Value =
        toml::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", device.describe())))?;
    overrides::apply_all(&mut value, edits)?;
    let canonical = toml::to_string(&value).map_err(|e| RunError::Config(e.to_string()))?;
    let config = SimConfig::from_value(value).map_err(|e| RunError::Config(format!("{}: {e}", device.describe())))?;
    Ok(LoadedConfig { config, sha256: sha256_hex(canonical.as_bytes()) })
}

/// Mismatches between a scenario and the device it is asked to run on.
pub fn scenario_diagnostics(scenario: Scenario, cfg: &SimConfig) -> Vec<Diagnostic> {
    let mode = cfg.device.mode;
    let mut out = Vec::new();
    let qubit = matches!(mode, Mode::Phi | Mode::Psi);
    match scenario {
        Scenario::FringeScan if mode != Mode::Phi => {
            out.push(Diagnostic::new("scenario-mode", "fringe_scan needs a PHI-mode device"));
        }
        Scenario::BellScan | Scenario::Tomography | Scenario::PowerScan if !qubit => {
            out.push(Diagnostic::new("scenario-mode", format!("{} needs a two-ring qubit device", scenario.name())));
        }
        Scenario::QuditZbasis | Scenario::QuditBell if mode != Mode::Qudit => {
            out.push(Diagnostic::new("scenario-mode", format!("{} needs a qudit-mode device", scenario.name())));
        }
        _ => {}
    }
    if scenario == Scenario::QuditBell && mode == Mode::Qudit {
        let [l, m] = cfg.qudit.bell_pair;
        if l.abs_diff(m) != 1 || l.max(m) >= cfg.device.rings.len() {
            out.push(Diagnostic::new("qudit-bell-pair", format!("bins ({l}, {m}) are not a neighbouring pair")));
        }
    }
    out
}

/// All diagnostics for a device (and optionally a scenario); empty means `run` will proceed.
pub fn validate(device: &DeviceSource, edits: &[String], scenario: Option<Scenario>) -> RunResult<Vec<Diagnostic>> {
    let loaded = load_config(device, edits)?;
    let mut out = loaded.config.check();
    if let Some(s) = scenario {
        out.extend(scenario_diagnostics(s, &loaded.config));
    }
    Ok(out)
}

/// Provenance lines carried by every artifact.
pub fn provenance(plan: &str, scenario: &str, seed: u64, config_sha256: &str) -> Vec<(String, String)> {
    vec![
        ("tool".into(), "fbsim".into()),
        ("version".into(), TOOL_VERSION.into()),
        ("plan".into(), plan.into()),
        ("scenario".into(), scenario.into()),
        ("seed".into(), seed.to_string()),
        ("config_sha256".into(), config_sha256.into()),
    ]
}

fn diagnostics_error(diags: &[Diagnostic]) -> RunError {
    let list: Vec<String> = diags.iter().map(ToString::to_string).collect();
    RunError::Scenario(list.join("; "))
}

/// Produce a plan's artifacts without touching the filesystem (beyond
/// reading a device file).
pub fn execute(plan: &ExperimentPlan) -> RunResult<Vec<Artifact>> {
    let loaded = load_config(&plan.device, &plan.overrides)?;
    let mut diags = loaded.config.check();
    diags.extend(scenario_diagnostics(plan.scenario, &loaded.config));
    if !diags.is_empty() {
        return Err(diagnostics_error(&diags));
    }
    let meta = provenance(&plan.name, plan.scenario.name(), plan.seed, &loaded.sha256);
    let ctx = scenarios::Context { cfg: &loaded.config, seed: plan.seed, meta };
    scenarios::run(plan.scenario, &ctx)
}

pub fn write_artifacts(dir: &std::path::Path, artifacts: &[Artifact]) -> RunResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Config(format!("{}: {e}", dir.display())))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.file);
            std::fs::write(&path, &a.contents).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

pub fn run(plan: &ExperimentPlan) -> RunResult<ArtifactManifest> {
    let artifacts = execute(plan)?;
    let files = write_artifacts(&plan.out_dir, &artifacts)?;
    Ok(ArtifactManifest { plan: plan.name.clone(), files })
}

/// Run plans on up to `jobs` threads; results keep the input order.
pub fn run_all(plans: &[ExperimentPlan], jobs: usize) -> Vec<RunResult<ArtifactManifest>> {
    let jobs = jobs.clamp(1, plans.len().max(1));
    if jobs == 1 {
        return plans.iter().map(run).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RunResult<ArtifactManifest>>>> = Mutex::new((0..plans.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(plan) = plans.get(k) else { break };
                let r = run(plan);
                results.lock().expect("result lock")[k] = Some(r);
            });
        }
    });
    results.into_inner().expect("result lock").into_iter().map(|r| r.expect("every plan ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn overrides_change_the_hash() {
        let dev = DeviceSource::Builtin("qubit_phi");
        let a = load_config(&dev, &[]).unwrap().sha256;
        let b = load_config(&dev, &["pump.power_uw=20.0".into()]).unwrap().sha256;
        assert_ne!(a, b);
        assert_eq!(a, load_config(&dev, &[]).unwrap().sha256);
    }

    #[test]
    fn scenario_mode_mismatch_is_diagnosed() {
        let d = validate(&DeviceSource::Builtin("qudit"), &[], Some(Scenario::Tomography)).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "scenario-mode");
    }
}
