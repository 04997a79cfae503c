//! Run configuration. Values are layered: built-in defaults, then the preset
//! named on the command line, then an optional TOML file, then flags.
//!
//! ```toml
//! [scenario]
//! name = "random"
//! n = 8
//! seed = 3
//!
//! [sim]
//! dt = 0.001
//! t_max = 50.0
//!
//! [control]
//! gain = 1.0
//!
//! [output]
//! dir = "runs/random"
//! stride = 10
//! snapshots = [0.0, 0.2, 0.8, 1.0]
//! ```

use std::path::{Path, PathBuf};

use ftmp_core::sim::SimConfig;
use ftmp_core::world::{preset_time_step, ScenarioParams};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const OUT_DIR_ENV: &str = "FTMP_OUT_DIR";
pub const DEFAULT_RANDOM_COUNT: usize = 8;
pub const DEFAULT_SNAPSHOTS: [f64; 4] = [0.0, 0.2, 0.8, 1.0];

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub world: WorldSection,
    #[serde(default)]
    pub barrier: BarrierSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub conv_tol: Option<f64>,
    pub abort_on_collision: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSection {
    pub arena_radius: Option<f64>,
    pub agent_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    pub clearance: Option<f64>,
    pub epsilon: Option<f64>,
    pub x0_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub gain: Option<f64>,
    pub alpha: Option<f64>,
    pub dot_guard_tol: Option<f64>,
    pub grad_zero_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub stride: Option<usize>,
    pub snapshots: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Usage(format!("{}: {message}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Flag values from the `run` subcommand. `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFlags {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub out: Option<PathBuf>,
    pub stride: Option<usize>,
    pub snapshots: Option<Vec<f64>>,
}

/// Fully resolved settings of one run; recorded verbatim in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub scenario: String,
    pub n: usize,
    pub seed: u64,
    pub sim: SimConfig,
    pub arena_radius: f64,
    pub agent_radius: f64,
    pub barrier: ftmp_core::BarrierParams,
    pub control: ftmp_core::ControlParams,
    pub out_dir: PathBuf,
    /// Every `stride`-th sample goes to the CSV files; the last sample always
    /// does.
    pub stride: usize,
    /// Snapshot times as fractions of the run length.
    pub snapshots: Vec<f64>,
}

impl RunSettings {
    pub fn resolve(file: &FileConfig, flags: &RunFlags, env_out: Option<PathBuf>) -> Result<Self> {
        let scenario = flags
            .scenario
            .clone()
            .or_else(|| file.scenario.name.clone())
            .ok_or_else(|| CliError::Usage("no scenario given (use --scenario or [scenario] name)".into()))?;
        let preset_dt = match scenario.as_str() {
            "example1" | "example2" => Some(preset_time_step(&scenario)?),
            "random" => None,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown scenario `{other}` (expected example1, example2 or random)"
                )))
            }
        };
        let n = match scenario.as_str() {
            "example1" => 4,
            "example2" => 20,
            _ => flags.n.or(file.scenario.n).unwrap_or(DEFAULT_RANDOM_COUNT),
        };
        if scenario != "random" && flags.n.or(file.scenario.n).is_some_and(|given| given != n) {
            return Err(CliError::Usage(format!(
                "scenario {scenario} has a fixed agent count of {n}"
            )));
        }
        let seed = flags.seed.or(file.scenario.seed).unwrap_or(1);

        let defaults = SimConfig::default();
        let sim = SimConfig {
            dt: flags.dt.or(file.sim.dt).or(preset_dt).unwrap_or(defaults.dt),
            t_max: flags.t_max.or(file.sim.t_max).unwrap_or(defaults.t_max),
            conv_tol: file.sim.conv_tol.unwrap_or(defaults.conv_tol),
            abort_on_collision: file.sim.abort_on_collision.unwrap_or(defaults.abort_on_collision),
        };
        if !(sim.dt > 0.0 && sim.t_max > 0.0 && sim.dt <= sim.t_max && sim.conv_tol > 0.0) {
            return Err(CliError::Usage(format!(
                "need 0 < dt <= t_max and conv_tol > 0, got dt = {}, t_max = {}, conv_tol = {}",
                sim.dt, sim.t_max, sim.conv_tol
            )));
        }

        let base = ScenarioParams::default();
        let mut barrier = base.barrier;
        barrier.clearance = file.barrier.clearance.unwrap_or(barrier.clearance);
        barrier.epsilon = file.barrier.epsilon.unwrap_or(barrier.epsilon);
        barrier.x0_floor = file.barrier.x0_floor.unwrap_or(barrier.x0_floor);
        let mut control = base.control;
        control.gain = file.control.gain.unwrap_or(control.gain);
        control.alpha = file.control.alpha.unwrap_or(control.alpha);
        control.dot_guard_tol = file.control.dot_guard_tol.unwrap_or(control.dot_guard_tol);
        control.grad_zero_tol = file.control.grad_zero_tol.unwrap_or(control.grad_zero_tol);

        let out_dir = flags
            .out
            .clone()
            .or_else(|| file.output.dir.clone())
            .unwrap_or_else(|| {
                env_out
                    .unwrap_or_else(|| PathBuf::from("runs"))
                    .join(format!("{scenario}_seed{seed}"))
            });
        let stride = flags.stride.or(file.output.stride).unwrap_or(1);
        if stride == 0 {
            return Err(CliError::Usage("stride must be at least 1".into()));
        }
        let snapshots = flags
            .snapshots
            .clone()
            .or_else(|| file.output.snapshots.clone())
            .unwrap_or_else(|| DEFAULT_SNAPSHOTS.to_vec());
        if snapshots.is_empty() || snapshots.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(CliError::Usage("snapshot fractions must lie in [0, 1]".into()));
        }

        Ok(RunSettings {
            scenario,
            n,
            seed,
            sim,
            arena_radius: file.world.arena_radius.unwrap_or(base.arena_radius),
            agent_radius: file.world.agent_radius.unwrap_or(base.agent_radius),
            barrier,
            control,
            out_dir,
            stride,
            snapshots,
        })
    }

    pub fn scenario_params(&self) -> ScenarioParams {
        ScenarioParams {
            arena_radius: self.arena_radius,
            agent_radius: self.agent_radius,
            barrier: self.barrier,
            control: self.control,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(scenario: &str) -> RunFlags {
        RunFlags {
            scenario: Some(scenario.into()),
            ..RunFlags::default()
        }
    }

    #[test]
    fn preset_defaults() {
        let s = RunSettings::resolve(&FileConfig::default(), &flags("example2"), None).unwrap();
        assert_eq!(s.n, 20);
        assert_eq!(s.sim.dt, 2.0e-3);
        assert_eq!(s.seed, 1);
        assert_eq!(s.out_dir, PathBuf::from("runs/example2_seed1"));
        assert_eq!(s.snapshots, DEFAULT_SNAPSHOTS.to_vec());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file = FileConfig::parse(
            r#"
            [scenario]
            name = "random"
            n = 6
            seed = 9
            [sim]
            dt = 0.01
            t_max = 3.0
            [control]
            gain = 2.5
            [output]
            stride = 4
            "#,
        )
        .unwrap();
        let mut f = RunFlags {
            dt: Some(0.005),
            ..RunFlags::default()
        };
        let s = RunSettings::resolve(&file, &f, Some(PathBuf::from("/tmp/root"))).unwrap();
        assert_eq!((s.scenario.as_str(), s.n, s.seed), ("random", 6, 9));
        assert_eq!(s.sim.dt, 0.005);
        assert_eq!(s.sim.t_max, 3.0);
        assert_eq!(s.control.gain, 2.5);
        assert_eq!(s.stride, 4);
        assert_eq!(s.out_dir, PathBuf::from("/tmp/root/random_seed9"));
        f.out = Some(PathBuf::from("here"));
        f.n = Some(2);
        let s = RunSettings::resolve(&file, &f, None).unwrap();
        assert_eq!(s.out_dir, PathBuf::from("here"));
        assert_eq!(s.n, 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FileConfig::parse("[sim]\nstep = 1").is_err());
        assert!(matches!(
            RunSettings::resolve(&FileConfig::default(), &flags("example9"), None),
            Err(CliError::Usage(_))
        ));
        let mut f = flags("example1");
        f.n = Some(7);
        assert!(RunSettings::resolve(&FileConfig::default(), &f, None).is_err());
        let mut f = flags("random");
        f.dt = Some(-1.0);
        assert!(RunSettings::resolve(&FileConfig::default(), &f, None).is_err());
        let mut f = flags("random");
        f.snapshots = Some(vec![1.5]);
        assert!(RunSettings::resolve(&FileConfig::default(), &f, None).is_err());
        assert!(RunSettings::resolve(&FileConfig::default(), &RunFlags::default(), None).is_err());
    }
}
