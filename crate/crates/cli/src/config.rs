//! The run configuration shared by every subcommand.
//!
//! Each subcommand reads its own table; absent tables take their defaults.

use std::path::{Path, PathBuf};

use pudsim_casestudies::{Kernel, ThroughputModel};
use pudsim_core::{Command, DeviceProfile};
use pudsim_harness::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Directory searched for `<name>.toml` when a profile is neither a preset
/// nor an existing path.
pub const PROFILE_DIR_ENV: &str = "PUDSIM_PROFILE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every subcommand; replaces `experiment.seed` when set.
    pub seed: Option<u64>,
    pub experiment: ExperimentConfig,
    pub simulate: SimulateConfig,
    pub bench: BenchConfig,
    pub destroy: DestroyConfig,
    pub discover: DiscoverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub profile: String,
    pub columns: Option<usize>,
    /// Empty means one APA on rows 0 and 7 with t1 = t2 = 3 ns.
    pub commands: Vec<Command>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            profile: "demo-8".into(),
            columns: None,
            commands: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub profile: String,
    pub width: usize,
    /// Empty means every kernel.
    pub kernels: Vec<Kernel>,
    /// Widest enabled MAJ of each variant.
    pub variants: Vec<usize>,
    /// A harness `summary.csv`; the built-in reference rates when absent.
    pub rates: Option<PathBuf>,
    pub mode: ThroughputModel,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            profile: "mfrH-512".into(),
            width: 32,
            kernels: Vec::new(),
            variants: vec![3, 5, 7, 9],
            rates: None,
            mode: ThroughputModel::UsableColumns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DestroyConfig {
    pub profile: String,
    /// Multi-RowCopy activation counts to price.
    pub n: Vec<u32>,
}

impl Default for DestroyConfig {
    fn default() -> Self {
        Self {
            profile: "mfrH-512".into(),
            n: vec![2, 4, 8, 16, 32],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoverConfig {
    pub profile: String,
    /// Probe width; fewer columns make discovery faster.
    pub columns: Option<usize>,
}

impl Default for DiscoverConfig {
    fn default() -> Self {
        Self {
            profile: "mfrH-512".into(),
            columns: Some(64),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// The seed every subcommand runs with.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.experiment.seed)
    }

    /// Apply a seed override and resolve profile names against the
    /// profile directory.
    pub fn finalize(&mut self, seed: Option<u64>, profile_dir: Option<&Path>) {
        if let Some(s) = seed {
            self.seed = Some(s);
        }
        self.experiment.seed = self.effective_seed();
        self.seed = Some(self.experiment.seed);
        for name in [
            &mut self.experiment.profile,
            &mut self.simulate.profile,
            &mut self.bench.profile,
            &mut self.destroy.profile,
            &mut self.discover.profile,
        ] {
            *name = locate_profile(name, profile_dir);
        }
    }
}

fn locate_profile(name: &str, dir: Option<&Path>) -> String {
    if DeviceProfile::preset(name).is_ok() || Path::new(name).exists() {
        return name.to_string();
    }
    if let Some(dir) = dir {
        let candidate = dir.join(format!("{name}.toml"));
        if candidate.exists() {
            return candidate.to_string_lossy().into_owned();
        }
    }
    name.to_string()
}

pub fn load_profile(name: &str, columns: Option<usize>) -> Result<DeviceProfile, CliError> {
    let mut p = DeviceProfile::resolve(name).map_err(|e| CliError::validation(e.to_string()))?;
    if let Some(c) = columns {
        p.columns = c;
    }
    p.validate().map_err(|e| CliError::validation(e.to_string()))?;
    Ok(p)
}

#[cfg(test)]
#[allow(clippy::field_reassign_with_default)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.bench.variants, [3, 5, 7, 9]);
    }

    #[test]
    fn round_trip_and_unknown_keys() {
        let mut c = RunConfig::default();
        c.seed = Some(9);
        c.bench.kernels = vec![Kernel::Add, Kernel::Div];
        c.simulate.commands = vec![Command::act(0, 3.0), Command::pre(3.0), Command::act(7, 36.0)];
        let back: RunConfig = toml::from_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        assert!(toml::from_str::<RunConfig>("colour = 1").is_err());
    }

    #[test]
    fn seed_override_wins() {
        let mut c = RunConfig::default();
        c.experiment.seed = 3;
        c.finalize(None, None);
        assert_eq!(c.effective_seed(), 3);
        c.finalize(Some(5), None);
        assert_eq!((c.effective_seed(), c.experiment.seed), (5, 5));
    }

    #[test]
    fn profile_directory_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let text = DeviceProfile::preset("demo-8").unwrap().to_toml_string();
        std::fs::write(dir.path().join("mine.toml"), text).unwrap();
        let mut c = RunConfig::default();
        c.simulate.profile = "mine".into();
        c.finalize(None, Some(dir.path()));
        assert!(load_profile(&c.simulate.profile, None).is_ok());
        assert_eq!(c.bench.profile, "mfrH-512");
    }
}
