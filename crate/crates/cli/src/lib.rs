//! Orchestration for the frequency-bin source simulator: device configs,
//! named reproduction plans, scenario execution and artifact output.

pub mod error;
pub mod overrides;
pub mod plan;
pub mod runner;
pub mod scenarios;

pub use error::{RunError, RunResult};
pub use plan::{DeviceSource, ExperimentPlan, Scenario};
pub use runner::{execute, run, run_all, validate, Artifact, ArtifactManifest};
