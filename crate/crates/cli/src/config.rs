//! Run configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hybrid_teleport::channels::Strategy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Resources,
    Threshold,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Resources => "resources",
            Command::Threshold => "threshold",
        }
    }
}

/// Fields left out of the file take per-command defaults in [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_steps: Option<usize>,
    pub eta_min: Option<f64>,
    pub eta_max: Option<f64>,
    pub strategy: Option<StrategyChoice>,
    pub trials: Option<u64>,
    pub min_trials: Option<u64>,
    pub replicas: Option<u32>,
    pub levels: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` win.
    pub fn merge(self, over: ConfigFile) -> Self {
        Self {
            alpha_min: over.alpha_min.or(self.alpha_min),
            alpha_max: over.alpha_max.or(self.alpha_max),
            alpha_steps: over.alpha_steps.or(self.alpha_steps),
            eta_min: over.eta_min.or(self.eta_min),
            eta_max: over.eta_max.or(self.eta_max),
            strategy: over.strategy.or(self.strategy),
            trials: over.trials.or(self.trials),
            min_trials: over.min_trials.or(self.min_trials),
            replicas: over.replicas.or(self.replicas),
            levels: over.levels.or(self.levels),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyChoice {
    Gi,
    Galpha,
    Both,
}

impl StrategyChoice {
    pub fn strategies(self) -> Vec<Strategy> {
        match self {
            StrategyChoice::Gi => vec![Strategy::GI],
            StrategyChoice::Galpha => vec![Strategy::GAlpha],
            StrategyChoice::Both => vec![Strategy::GI, Strategy::GAlpha],
        }
    }
}

/// Fully specified run; this is what gets hashed and embedded in outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_steps: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub strategy: StrategyChoice,
    pub trials: u64,
    pub min_trials: u64,
    pub replicas: u32,
    pub levels: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: Command, f: ConfigFile) -> anyhow::Result<Self> {
        let (a, eta, trials) = match command {
            Command::Verify => ((0.8, 1.4, 4), (0.01, 0.3), 1_000_000),
            Command::Resources => ((0.1, 3.0, 30), (0.0, 0.0), 100_000),
            Command::Threshold => ((0.7, 1.7, 6), (1e-5, 0.05), 100_000),
        };
        let c = Self {
            command,
            alpha_min: f.alpha_min.unwrap_or(a.0),
            alpha_max: f.alpha_max.unwrap_or(a.1),
            alpha_steps: f.alpha_steps.unwrap_or(a.2),
            eta_min: f.eta_min.unwrap_or(eta.0),
            eta_max: f.eta_max.unwrap_or(eta.1),
            strategy: f.strategy.unwrap_or(StrategyChoice::Both),
            trials: f.trials.unwrap_or(trials),
            min_trials: f.min_trials.unwrap_or(1_000),
            replicas: f.replicas.unwrap_or(3),
            levels: f.levels.unwrap_or(4),
            seed: f.seed.unwrap_or(0x5eed),
            out: f.out,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max && self.alpha_max.is_finite()) {
            bail!("alpha range [{}, {}] must be positive and ordered", self.alpha_min, self.alpha_max);
        }
        if self.alpha_steps == 0 || (self.alpha_steps == 1) != (self.alpha_min == self.alpha_max) {
            bail!("alpha_steps = {} does not fit the range [{}, {}]", self.alpha_steps, self.alpha_min, self.alpha_max);
        }
        if self.command != Command::Resources && !(0.0 < self.eta_min && self.eta_min < self.eta_max && self.eta_max < 1.0) {
            bail!("eta range [{}, {}] must satisfy 0 < min < max < 1", self.eta_min, self.eta_max);
        }
        if self.trials < self.min_trials {
            bail!("trials = {} is below the minimum {}", self.trials, self.min_trials);
        }
        if self.replicas == 0 || self.levels == 0 {
            bail!("replicas and levels must be positive");
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        linspace(self.alpha_min, self.alpha_max, self.alpha_steps)
    }

    /// Four log-spaced loss rates for the verification grid.
    pub fn etas(&self) -> Vec<f64> {
        let (lo, hi) = (self.eta_min.ln(), self.eta_max.ln());
        (0..4).map(|i| (lo + (hi - lo) * i as f64 / 3.0).exp()).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::resolve(Command::Threshold, ConfigFile { seed: Some(9), ..Default::default() }).unwrap();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile { trials: Some(5_000), seed: Some(1), ..Default::default() };
        let flags = ConfigFile { seed: Some(2), ..Default::default() };
        let c = RunConfig::resolve(Command::Threshold, file.merge(flags)).unwrap();
        assert_eq!((c.trials, c.seed), (5_000, 2));
    }

    #[test]
    fn bad_ranges_are_rejected() {
        let bad = [
            ConfigFile { alpha_min: Some(2.0), alpha_max: Some(1.0), ..Default::default() },
            ConfigFile { eta_min: Some(0.1), eta_max: Some(0.01), ..Default::default() },
            ConfigFile { trials: Some(10), ..Default::default() },
            ConfigFile { alpha_steps: Some(0), ..Default::default() },
        ];
        for f in bad {
            assert!(RunConfig::resolve(Command::Threshold, f.clone()).is_err(), "{f:?}");
        }
    }

    #[test]
    fn grid() {
        assert_eq!(linspace(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
        let c = RunConfig::resolve(Command::Verify, ConfigFile::default()).unwrap();
        let e = c.etas();
        assert!((e[0] - 0.01).abs() < 1e-12 && (e[3] - 0.3).abs() < 1e-12);
    }
}
