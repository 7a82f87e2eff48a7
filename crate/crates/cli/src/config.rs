//! Scenario configuration: TOML file, presets and flag overrides.
//!
//! Precedence: built-in defaults, then the preset if given, then the config
//! file section by section, then individual command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pingpong_core::adversary::AttackModel;
use pingpong_core::protocol::ProtocolConfig;
use serde::{Deserialize, Serialize};

use crate::calibrate::CalibrationTargets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Key transmission with block decoding and category statistics.
    Transmit,
    /// Translation-stage interference scan of both coincidence channels.
    Homscan,
    /// Control-mode runs with the exactly-one-click check.
    Control,
    /// Eavesdropping-strategy simulation.
    Attack,
    /// One-time-pad demonstration over a transmitted key.
    Otp,
    /// Parameter fit against the operating-point table.
    Calibrate,
}

/// Standard parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 2500 pulses per bit, one coincidence per block on average.
    Mode1,
    /// 20,000 pulses per bit, about seven coincidences per block.
    Mode2,
}

impl Preset {
    pub fn protocol(self, seed: u64) -> ProtocolConfig {
        match self {
            Preset::Mode1 => ProtocolConfig::mode1(seed),
            Preset::Mode2 => ProtocolConfig::mode2(seed),
        }
    }
}

/// Translation-stage sweep for the interference scan, micrometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HomscanRange {
    pub start_um: f64,
    pub stop_um: f64,
    pub step_um: f64,
}

impl Default for HomscanRange {
    fn default() -> Self {
        HomscanRange {
            start_um: -60.0,
            stop_um: 60.0,
            step_um: 2.0,
        }
    }
}

impl HomscanRange {
    pub fn positions(&self) -> Result<Vec<f64>> {
        if !self.step_um.is_finite() || self.step_um <= 0.0 {
            anyhow::bail!("homscan step must be positive");
        }
        if self.stop_um < self.start_um {
            anyhow::bail!("homscan stop below start");
        }
        let n = ((self.stop_um - self.start_um) / self.step_um).round() as usize;
        Ok((0..=n).map(|i| self.start_um + i as f64 * self.step_um).collect())
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    /// Master seed; propagated into the protocol config.
    pub seed: u64,
    /// Worker threads for block-level parallelism; 0 picks the default.
    /// Results are identical for every value.
    pub workers: usize,
    pub out_dir: PathBuf,
    /// Key length for transmit/otp scenarios.
    pub n_bits: u64,
    /// Run count for control/attack scenarios.
    pub n_runs: u64,
    /// Transmit in confirmation mode: keep pulsing until this many
    /// coincidences confirm each bit.
    pub confirmation_target: Option<u64>,
    pub protocol: ProtocolConfig,
    pub attack: AttackModel,
    pub homscan: HomscanRange,
    pub targets: CalibrationTargets,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Transmit,
            seed: 42,
            workers: 0,
            out_dir: PathBuf::from("out"),
            n_bits: 10_000,
            n_runs: 10_000,
            confirmation_target: None,
            protocol: ProtocolConfig::mode1(42),
            attack: AttackModel::NoAttack,
            homscan: HomscanRange::default(),
            targets: CalibrationTargets::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text).context("parsing config")?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("serializing config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    /// Push the scenario seed into the protocol and validate everything.
    pub fn normalize(&mut self) -> Result<()> {
        self.protocol.seed = self.seed;
        self.protocol.validate()?;
        self.attack.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_roundtrip_is_identity() {
        let mut config = ScenarioConfig {
            scenario: Scenario::Attack,
            seed: 7,
            n_bits: 123,
            attack: AttackModel::TrojanHorse {
                probe_pass_prob: 0.25,
                photons_per_probe: 2,
            },
            ..Default::default()
        };
        config.protocol = ProtocolConfig::mode2(7);
        let text = config.to_toml().unwrap();
        let back = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let config = ScenarioConfig::from_toml(
            "scenario = \"homscan\"\nseed = 9\n[homscan]\nstep_um = 1.0\n",
        )
        .unwrap();
        assert_eq!(config.scenario, Scenario::Homscan);
        assert_eq!(config.seed, 9);
        assert_eq!(config.homscan.step_um, 1.0);
        assert_eq!(config.homscan.start_um, -60.0);
    }

    #[test]
    fn homscan_positions_counted() {
        let range = HomscanRange {
            start_um: -60.0,
            stop_um: 60.0,
            step_um: 2.0,
        };
        let positions = range.positions().unwrap();
        assert_eq!(positions.len(), 61);
        assert_eq!(positions[0], -60.0);
        assert_eq!(*positions.last().unwrap(), 60.0);
        assert!(HomscanRange { step_um: 0.0, ..range }.positions().is_err());
    }
}
