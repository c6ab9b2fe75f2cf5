//! Experiment plans: which device, which scenario, which seed, where to.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fbsim_core::state::{Bell, NamedState};
use serde::Deserialize;

use crate::error::{RunError, RunResult};

pub const QUBIT_PHI: &str = include_str!("../configs/qubit_phi.toml");
pub const QUBIT_PSI: &str = include_str!("../configs/qubit_psi.toml");
pub const QUDIT: &str = include_str!("../configs/qudit.toml");

const PI: &str = "3.141592653589793";
const QUARTER_PI: &str = "0.7853981633974483";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    PowerScan,
    FringeScan,
    BellScan,
    Tomography,
    QuditZbasis,
    QuditBell,
    Spectrum,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::PowerScan,
        Scenario::FringeScan,
        Scenario::BellScan,
        Scenario::Tomography,
        Scenario::QuditZbasis,
        Scenario::QuditBell,
        Scenario::Spectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::PowerScan => "power_scan",
            Scenario::FringeScan => "fringe_scan",
            Scenario::BellScan => "bell_scan",
            Scenario::Tomography => "tomography",
            Scenario::QuditZbasis => "qudit_zbasis",
            Scenario::QuditBell => "qudit_bell",
            Scenario::Spectrum => "spectrum",
        }
    }
}

impl FromStr for Scenario {
    type Err = RunError;

    fn from_str(s: &str) -> RunResult<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown scenario `{s}`")))
    }
}

/// Where a device config comes from: one of the shipped files or a path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeviceSource {
    Builtin(&'static str),
    Path(PathBuf),
}

impl DeviceSource {
    /// `qubit_phi`, `qubit_psi` and `qudit` name the shipped configs;
    /// anything else is a file path.
    pub fn parse(s: &str) -> Self {
        match s {
            "qubit_phi" => DeviceSource::Builtin("qubit_phi"),
            "qubit_psi" => DeviceSource::Builtin("qubit_psi"),
            "qudit" => DeviceSource::Builtin("qudit"),
            path => DeviceSource::Path(PathBuf::from(path)),
        }
    }

    pub fn text(&self) -> RunResult<String> {
        match self {
            DeviceSource::Builtin("qubit_phi") => Ok(QUBIT_PHI.to_string()),
            DeviceSource::Builtin("qubit_psi") => Ok(QUBIT_PSI.to_string()),
            DeviceSource::Builtin(_) => Ok(QUDIT.to_string()),
            DeviceSource::Path(p) => {
                std::fs::read_to_string(p).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DeviceSource::Builtin(name) => format!("builtin:{name}"),
            DeviceSource::Path(p) => p.display().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub name: String,
    pub device: DeviceSource,
    pub scenario: Scenario,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// `key.path=value` edits applied to the device config before parsing.
    pub overrides: Vec<String>,
}

pub const DEFAULT_SEED: u64 = 1;

/// Device and config edits that make the qubit source emit `state`.
pub fn state_recipe(state: NamedState) -> (DeviceSource, Vec<String>) {
    let phi = DeviceSource::Builtin("qubit_phi");
    let psi = DeviceSource::Builtin("qubit_psi");
    let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    // ring A hosts |11> in PHI and |01> in PSI
    match state {
        NamedState::Basis(0, 0) => (phi, own(&["pump.split=[0.0, 1.0]"])),
        NamedState::Basis(1, 1) => (phi, own(&["pump.split=[1.0, 0.0]"])),
        NamedState::Bell(Bell::PhiPlus) => (phi, vec![]),
        NamedState::Bell(Bell::PhiMinus) => (phi, vec![format!("pump.pair_phase=[{PI}, 0.0]")]),
        NamedState::Basis(0, 1) => (psi, own(&["pump.scheme=\"split\"", "pump.split=[1.0, 0.0]"])),
        NamedState::Basis(1, 0) => (psi, own(&["pump.scheme=\"split\"", "pump.split=[0.0, 1.0]"])),
        NamedState::Bell(Bell::PsiPlus) => (psi, vec![]),
        NamedState::Bell(Bell::PsiMinus) => (psi, vec![format!("pump.drive_phase={QUARTER_PI}")]),
        NamedState::Basis(..) => unreachable!("qubit basis labels are 0 or 1"),
    }
}

fn file_tag(state: NamedState) -> String {
    state.to_string().replace('+', "_plus").replace('-', "_minus")
}

/// The reproduction plans shipped with the tool, in a fixed order.
pub fn named_plans() -> Vec<(String, DeviceSource, Scenario, Vec<String>)> {
    let phi = || DeviceSource::Builtin("qubit_phi");
    let qudit = || DeviceSource::Builtin("qudit");
    let mut out = vec![
        ("fig1_spectrum".to_string(), phi(), Scenario::Spectrum, vec![]),
        ("fig2_power_scan".to_string(), phi(), Scenario::PowerScan, vec![]),
        ("fig4_fringe".to_string(), phi(), Scenario::FringeScan, vec![]),
    ];
    for state in [NamedState::Bell(Bell::PhiPlus), NamedState::Bell(Bell::PhiMinus)] {
        let (dev, ov) = state_recipe(state);
        out.push((format!("fig4_bell_{}", file_tag(state)), dev, Scenario::BellScan, ov));
    }
    for state in NamedState::ALL {
        let (dev, ov) = state_recipe(state);
        let fig = if matches!(dev, DeviceSource::Builtin("qubit_phi")) { 5 } else { 6 };
        out.push((format!("fig{fig}_{}", file_tag(state)), dev, Scenario::Tomography, ov));
    }
    out.push(("fig7_spectrum".to_string(), qudit(), Scenario::Spectrum, vec![]));
    out.push(("fig7_zbasis".to_string(), qudit(), Scenario::QuditZbasis, vec![]));
    for (l, m) in [(0, 1), (1, 2), (2, 3)] {
        out.push((format!("fig7_bell_{l}{m}"), qudit(), Scenario::QuditBell, vec![format!("qudit.bell_pair=[{l}, {m}]")]));
    }
    out
}

pub fn named_plan(name: &str, out_root: &Path, seed: Option<u64>) -> RunResult<ExperimentPlan> {
    let (name, device, scenario, overrides) = named_plans()
        .into_iter()
        .find(|p| p.0 == name)
        .ok_or_else(|| RunError::Config(format!("unknown plan `{name}` (see `fbsim list`)")))?;
    Ok(ExperimentPlan {
        out_dir: out_root.join(&name),
        name,
        device,
        scenario,
        seed: seed.unwrap_or(DEFAULT_SEED),
        overrides,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    plan: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    name: String,
    device: String,
    scenario: Scenario,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    overrides: Vec<String>,
}

/// Plans from a manifest file. Relative device paths resolve against the
/// manifest's directory; outputs default to `<out_root>/<name>`.
pub fn load_manifest(path: &Path, out_root: &Path, seed: Option<u64>) -> RunResult<Vec<ExperimentPlan>> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    parse_manifest(&text, path.parent().unwrap_or(Path::new(".")), out_root, seed)
}

pub fn parse_manifest(text: &str, base: &Path, out_root: &Path, seed: Option<u64>) -> RunResult<Vec<ExperimentPlan>> {
    let file: ManifestFile = toml::from_str(text).map_err(|e| RunError::Config(format!("manifest: {e}")))?;
    let mut seen = BTreeSet::new();
    file.plan
        .into_iter()
        .map(|e| {
            if !seen.insert(e.name.clone()) {
                return Err(RunError::Config(format!("manifest: plan name `{}` is not unique", e.name)));
            }
            let device = match DeviceSource::parse(&e.device) {
                DeviceSource::Path(p) if p.is_relative() => DeviceSource::Path(base.join(p)),
                d => d,
            };
            Ok(ExperimentPlan {
                out_dir: e.out.unwrap_or_else(|| out_root.join(&e.name)),
                name: e.name,
                device,
                scenario: e.scenario,
                seed: seed.or(e.seed).unwrap_or(DEFAULT_SEED),
                overrides: e.overrides,
            })
        })
        .collect()
}
