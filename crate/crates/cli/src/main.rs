use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fbsim::error::{RunError, RunResult};
use fbsim::plan::{self, DeviceSource, ExperimentPlan, Scenario};
use fbsim::runner::{self, Artifact};
use fbsim_core::io;
use fbsim_core::state::NamedState;
use fbsim_core::tomo::{
    entanglement_of_formation, fidelity, ideal_settings, mle_reconstruct, purity, settings_with_index, MleOptions,
};

/// Frequency-bin entangled-photon source simulator.
///
/// Exit status: 0 on success, 2 for unreadable or malformed input,
/// 3 when the configured physics cannot be simulated.
#[derive(Parser)]
#[command(name = "fbsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Seed for every random stream; recorded in each output file.
    #[arg(long)]
    seed: Option<u64>,
    /// Device config: a TOML path, or one of qubit_phi, qubit_psi, qudit.
    #[arg(long)]
    device: Option<String>,
    /// Output root directory.
    #[arg(long, env = "FBSIM_OUT", default_value = "fbsim-out")]
    out: PathBuf,
    /// Config edit `key.path=value`, applied after loading (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run named plans and/or the plans of a manifest file.
    Run {
        /// Plan names (see `fbsim list`).
        plans: Vec<String>,
        /// TOML manifest with [[plan]] entries (name, device, scenario, seed, out, overrides).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Run every named plan.
        #[arg(long)]
        all: bool,
        /// Number of plans run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Report all invariant violations of a device config without running.
    Validate {
        /// Also check that the device suits this scenario.
        #[arg(long)]
        scenario: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Bell or modulation-frequency fringe scan of a programmed state.
    Scan {
        #[arg(long, value_enum)]
        axis: Axis,
        /// State to program: 00, 01, 10, 11, phi+, phi-, psi+, psi-.
        #[arg(long, default_value = "phi+")]
        state: String,
        /// Number of scan points.
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct a density matrix from a count-record CSV.
    Tomo {
        /// Count records (setting_id, proj_s, proj_i, ..., coinc, accidental, t_acq_s).
        #[arg(long)]
        counts: PathBuf,
        /// State the fidelity is computed against.
        #[arg(long)]
        target: String,
        /// Treat projectors as ideal with equal throughput instead of the
        /// modulator settings of the device.
        #[arg(long)]
        ideal_projectors: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Four-bin source: Z-basis matrix for ring A..D or all, or a Bell scan of a bin pair.
    Qudit {
        /// A, B, C, D, all, or `pair l,m`.
        #[arg(long, default_value = "all")]
        pump: String,
        #[command(flatten)]
        common: Common,
    },
    /// List the named plans.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Fm,
    Phase,
}

fn report(results: Vec<RunResult<runner::ArtifactManifest>>) -> ExitCode {
    let mut code = 0;
    for r in results {
        match r {
            Ok(m) => {
                for f in &m.files {
                    println!("{}\t{}", m.plan, f.display());
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                code = code.max(e.exit_code());
            }
        }
    }
    ExitCode::from(code as u8)
}

fn fail(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn adhoc(name: &str, device: DeviceSource, scenario: Scenario, mut overrides: Vec<String>, c: &Common) -> ExperimentPlan {
    overrides.extend(c.overrides.iter().cloned());
    ExperimentPlan {
        name: name.to_string(),
        device: c.device.as_deref().map_or(device, DeviceSource::parse),
        scenario,
        seed: c.seed.unwrap_or(plan::DEFAULT_SEED),
        out_dir: c.out.join(name),
        overrides,
    }
}

fn run_cmd(names: &[String], manifest: Option<&Path>, all: bool, c: &Common) -> RunResult<Vec<ExperimentPlan>> {
    let mut plans = Vec::new();
    let mut names = names.to_vec();
    if all {
        names.extend(plan::named_plans().into_iter().map(|p| p.0));
    }
    for n in &names {
        let mut p = plan::named_plan(n, &c.out, c.seed)?;
        if let Some(d) = &c.device {
            p.device = DeviceSource::parse(d);
        }
        p.overrides.extend(c.overrides.iter().cloned());
        plans.push(p);
    }
    if let Some(m) = manifest {
        for mut p in plan::load_manifest(m, &c.out, c.seed)? {
            p.overrides.extend(c.overrides.iter().cloned());
            plans.push(p);
        }
    }
    if plans.is_empty() {
        return Err(RunError::Config("nothing to run: name a plan, pass --manifest or --all".into()));
    }
    Ok(plans)
}

fn scan_plan(axis: Axis, state: &str, points: Option<usize>, c: &Common) -> RunResult<ExperimentPlan> {
    let named: NamedState = state.parse().map_err(|e: fbsim_core::Error| RunError::Config(e.to_string()))?;
    let (device, mut ov) = plan::state_recipe(named);
    let (scenario, key) = match axis {
        Axis::Fm => (Scenario::FringeScan, "interference.fm_points"),
        Axis::Phase => (Scenario::BellScan, "interference.phase_points"),
    };
    if let Some(n) = points {
        ov.push(format!("{key}={n}"));
    }
    let tag = match axis {
        Axis::Fm => "scan_fm",
        Axis::Phase => "scan_phase",
    };
    Ok(adhoc(tag, device, scenario, ov, c))
}

fn qudit_plan(pump: &str, c: &Common) -> RunResult<ExperimentPlan> {
    let dev = DeviceSource::Builtin("qudit");
    let p = pump.trim().to_ascii_lowercase();
    if let Some(rest) = p.strip_prefix("pair").map(|r| r.trim_start_matches([' ', ':', '='])) {
        let bins: Vec<usize> = rest
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| RunError::Config(format!("--pump `{pump}`: expected `pair l,m`")))?;
        let [l, m] = bins[..] else {
            return Err(RunError::Config(format!("--pump `{pump}`: expected two bins")));
        };
        return Ok(adhoc(&format!("qudit_bell_{l}{m}"), dev, Scenario::QuditBell, vec![format!("qudit.bell_pair=[{l}, {m}]")], c));
    }
    let split = match p.as_str() {
        "all" => "[0.25, 0.25, 0.25, 0.25]",
        "a" => "[1.0, 0.0, 0.0, 0.0]",
        "b" => "[0.0, 1.0, 0.0, 0.0]",
        "c" => "[0.0, 0.0, 1.0, 0.0]",
        "d" => "[0.0, 0.0, 0.0, 1.0]",
        _ => return Err(RunError::Config(format!("--pump `{pump}`: expected A, B, C, D, all or `pair l,m`"))),
    };
    Ok(adhoc(&format!("qudit_zbasis_{p}"), dev, Scenario::QuditZbasis, vec![format!("pump.split={split}")], c))
}

fn tomo_cmd(counts: &Path, target: &str, ideal: bool, c: &Common) -> RunResult<Vec<std::path::PathBuf>> {
    let named: NamedState = target.parse().map_err(|e: fbsim_core::Error| RunError::Config(e.to_string()))?;
    let text = std::fs::read_to_string(counts).map_err(|e| RunError::Config(format!("{}: {e}", counts.display())))?;
    let rows = io::read_counts(&text)?;
    let device = c.device.as_deref().map_or(DeviceSource::Builtin("qubit_phi"), DeviceSource::parse);
    let loaded = runner::load_config(&device, &c.overrides)?;
    let settings = if ideal {
        ideal_settings()
    } else {
        let grid = fbsim_core::spectra::configure(&loaded.config.device)?;
        settings_with_index(&grid, loaded.config.modulators.beta)?
    };
    let seed = c.seed.unwrap_or(0);
    let records = rows
        .iter()
        .map(|r| {
            let s = settings
                .settings
                .iter()
                .find(|s| s.signal.name == r.proj_s && s.idler.name == r.proj_i)
                .ok_or_else(|| RunError::Config(format!("row {}: unknown projector pair ({}, {})", r.setting_id, r.proj_s, r.proj_i)))?;
            let mut rec = r.record(loaded.config.channels.window_ps * 1e-12, seed);
            rec.setting_id = s.id;
            Ok(rec)
        })
        .collect::<RunResult<Vec<_>>>()?;
    let est = mle_reconstruct(&records, &settings, &MleOptions::default())?;
    let psi = named.state();
    let target_vec = psi.amplitudes().expect("named states are pure");
    let metrics = vec![
        ("target_state".to_string(), named.to_string()),
        ("fidelity".to_string(), fidelity(&est.rho, target_vec)?.to_string()),
        ("purity".to_string(), purity(&est.rho).to_string()),
        ("entanglement_of_formation".to_string(), entanglement_of_formation(&est.rho)?.to_string()),
        ("converged".to_string(), est.converged.to_string()),
        ("iterations".to_string(), est.iterations.to_string()),
        ("log_likelihood".to_string(), est.log_likelihood.to_string()),
    ];
    let meta = vec![
        ("tool".to_string(), "fbsim".to_string()),
        ("version".to_string(), runner::TOOL_VERSION.to_string()),
        ("plan".to_string(), "tomo".to_string()),
        ("seed".to_string(), seed.to_string()),
        ("config_sha256".to_string(), loaded.sha256.clone()),
        ("counts_sha256".to_string(), runner::sha256_hex(text.as_bytes())),
    ];
    let art = Artifact { file: "density_matrix.txt".into(), contents: io::write_density_matrix(&est.rho, &metrics, &meta) };
    runner::write_artifacts(&c.out.join("tomo"), &[art])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { plans, manifest, all, jobs, common } => match run_cmd(&plans, manifest.as_deref(), all, &common) {
            Ok(p) => report(runner::run_all(&p, jobs)),
            Err(e) => fail(e),
        },
        Command::Validate { scenario, common } => {
            let scenario = match scenario.as_deref().map(str::parse::<Scenario>).transpose() {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let device = common.device.as_deref().map_or(DeviceSource::Builtin("qubit_phi"), DeviceSource::parse);
            match runner::validate(&device, &common.overrides, scenario) {
                Ok(d) if d.is_empty() => {
                    println!("ok: {}", device.describe());
                    ExitCode::SUCCESS
                }
                Ok(d) => {
                    for x in &d {
                        println!("{x}");
                    }
                    ExitCode::from(3)
                }
                Err(e) => fail(e),
            }
        }
        Command::Scan { axis, state, points, common } => match scan_plan(axis, &state, points, &common) {
            Ok(p) => report(vec![runner::run(&p)]),
            Err(e) => fail(e),
        },
        Command::Qudit { pump, common } => match qudit_plan(&pump, &common) {
            Ok(p) => report(vec![runner::run(&p)]),
            Err(e) => fail(e),
        },
        Command::Tomo { counts, target, ideal_projectors, common } => match tomo_cmd(&counts, &target, ideal_projectors, &common) {
            Ok(files) => {
                for f in files {
                    println!("tomo\t{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::List => {
            for (name, dev, scenario, _) in plan::named_plans() {
                println!("{name}\t{}\t{}", scenario.name(), dev.describe());
            }
            ExitCode::SUCCESS
        }
    }
}
