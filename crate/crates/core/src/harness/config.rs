use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::build_qcnn;
use crate::ddqn::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::pseudo_chip_widths;

/// Chip counts used in the multi-chip comparison; any `k ≥ 2` is accepted.
pub const CHIP_PRESETS: [usize; 4] = [2, 10, 50, 100];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Classical,
    SingleChip,
    MultiChip,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Classical => "classical",
            AgentKind::SingleChip => "single_chip",
            AgentKind::MultiChip => "multi_chip",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(AgentKind::Classical),
            "single_chip" => Ok(AgentKind::SingleChip),
            "multi_chip" => Ok(AgentKind::MultiChip),
            other => Err(Error::Config(format!(
                "unknown agent `{other}` (expected classical, single_chip or multi_chip)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agent: AgentKind,
    /// Chips `k` (pseudo-chips for the classical agent).
    pub chips: usize,
    /// Qubits per chip `l`.
    pub qubits: usize,
    /// Conv/pool layers per chip `L`.
    pub layers: usize,
    /// Tile map; the bundled world when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub world: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Episode step limit.
    pub max_steps: usize,
    /// Write a checkpoint every this many episodes; 0 keeps only the final one.
    pub checkpoint_every: usize,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            agent: AgentKind::MultiChip,
            chips: CHIP_PRESETS[0],
            qubits: 8,
            layers: 2,
            world: None,
            out_dir: PathBuf::from("runs/default"),
            max_steps: 1000,
            checkpoint_every: 0,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        text.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Chip count actually built: a single-chip agent always has one.
    pub fn effective_chips(&self) -> usize {
        match self.agent {
            AgentKind::SingleChip => 1,
            _ => self.chips,
        }
    }

    /// The config with derived values filled in, as recorded in run snapshots.
    pub fn normalized(&self) -> Self {
        Self {
            chips: self.effective_chips(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let k = self.effective_chips();
        match self.agent {
            AgentKind::MultiChip if k < 2 => {
                return Err(Error::Config(format!("multi_chip needs at least 2 chips, got {k}")));
            }
            AgentKind::Classical if k == 0 => {
                return Err(Error::Config(
                    "classical baseline needs at least one pseudo-chip".into(),
                ));
            }
            _ => {}
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        let shape = match self.agent {
            AgentKind::Classical => pseudo_chip_widths(self.qubits, self.layers).map(drop),
            _ => build_qcnn(self.qubits, self.layers).map(drop),
        };
        shape.map_err(|e| Error::Config(format!("invalid chip shape l={}, L={}: {e}", self.qubits, self.layers)))
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.to_toml().parse::<ExperimentConfig>().unwrap(), c);
    }

    #[test]
    fn chip_rules() {
        let mut c = ExperimentConfig {
            chips: 1,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.agent = AgentKind::SingleChip;
        c.chips = 7;
        c.validate().unwrap();
        assert_eq!(c.normalized().chips, 1);
        for k in CHIP_PRESETS {
            ExperimentConfig {
                chips: k,
                ..Default::default()
            }
            .validate()
            .unwrap();
        }
    }

    #[test]
    fn rejects_bad_values() {
        assert!("agent = \"quantum\"".parse::<ExperimentConfig>().is_err());
        assert!("chipz = 3".parse::<ExperimentConfig>().is_err());
        let bad_shape = ExperimentConfig {
            qubits: 6,
            ..Default::default()
        };
        assert!(bad_shape.validate().is_err());
        let mut bad_gamma = ExperimentConfig::default();
        bad_gamma.train.gamma = 1.0;
        assert!(bad_gamma.validate().is_err());
    }

    #[test]
    fn partial_files_take_defaults() {
        let c: ExperimentConfig = "agent = \"classical\"\n[train]\nseed = 9\n".parse().unwrap();
        assert_eq!(c.agent, AgentKind::Classical);
        assert_eq!(c.train.seed, 9);
        assert_eq!(c.train.gamma, 0.9);
    }
}
