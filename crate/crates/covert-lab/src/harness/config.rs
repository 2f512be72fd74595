//! Declarative experiment configuration.
//!
//! One TOML file describes one sweep: the channel law, strategy and
//! detector parameters, the parameter grid, the master seed, and output
//! paths. The schema is versioned and unknown keys are rejected, so a typo
//! fails loudly instead of silently running the wrong experiment.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::renewal::IpdDistribution;

/// Schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// The reproduction experiments the harness can drive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Poisson-channel insertion at the covert budget vs the count LRT.
    PoissonAchievability,
    /// Count-threshold detection of `(lambda T)^gamma` insertions.
    PoissonConverse,
    /// Slowdown backlog concentration and the sqrt(N) scaling law.
    Buffering,
    /// Two-phase buffer-and-replace runs and IPD reconstruction.
    TwoPhase,
    /// The one-phase negative control.
    OnePhase,
    /// Scaled-density KL against its second-order expansion.
    KlExpansion,
    /// Fisher constants, closed form vs quadrature.
    Fisher,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::PoissonAchievability => "poisson-achievability",
            ExperimentKind::PoissonConverse => "poisson-converse",
            ExperimentKind::Buffering => "buffering",
            ExperimentKind::TwoPhase => "two-phase",
            ExperimentKind::OnePhase => "one-phase",
            ExperimentKind::KlExpansion => "kl-expansion",
            ExperimentKind::Fisher => "fisher",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyParams {
    /// Covertness budget.
    pub epsilon: Option<f64>,
    /// Phase-1 fraction of the two-phase scheme.
    pub psi: Option<f64>,
}

/// Which detector `detect` runs on a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorChoice {
    CountThreshold,
    MeanIpdBuffering,
    MeanIpdInsertion,
    Lrt,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Target false-alarm bound; defaults to 0.05.
    pub alpha: Option<f64>,
    pub kind: Option<DetectorChoice>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    /// Packet-count grid (buffering, two-phase, one-phase).
    pub n: Option<Vec<u64>>,
    /// Horizon grid in seconds (poisson experiments).
    pub t: Option<Vec<f64>>,
    /// Scaling-perturbation grid (kl-expansion), largest first.
    pub rho: Option<Vec<f64>>,
    /// Insertion exponents (poisson-converse).
    pub gamma: Option<Vec<f64>>,
    /// Extra channel laws (kl-expansion, fisher); defaults to the channel.
    pub families: Option<Vec<IpdDistribution>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    /// Horizon-mode generation over `[0, horizon]` seconds.
    pub horizon: Option<f64>,
    /// Count-mode generation of exactly this many packets.
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputParams {
    /// Result CSV filename, relative to the output directory.
    pub csv: String,
    /// Optional SVG plot filename.
    pub svg: Option<String>,
}

impl Default for OutputParams {
    fn default() -> Self {
        OutputParams {
            csv: "result.csv".into(),
            svg: None,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    /// Master seed; all randomness flows from it, never from the clock.
    pub seed: u64,
    /// Monte Carlo trials per grid point.
    pub trials: usize,
    pub channel: IpdDistribution,
    #[serde(default)]
    pub strategy: StrategyParams,
    #[serde(default)]
    pub detector: DetectorParams,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default)]
    pub simulate: SimulateParams,
    #[serde(default)]
    pub output: OutputParams,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses and validates a TOML config string.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| cfg_err(format!("parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical serialization; identifies the effective
    /// config (after CLI overrides) in run metadata.
    pub fn content_hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    pub fn epsilon(&self) -> Result<f64> {
        self.strategy
            .epsilon
            .ok_or_else(|| cfg_err("strategy.epsilon is required for this experiment"))
    }

    pub fn psi(&self) -> Result<f64> {
        self.strategy
            .psi
            .ok_or_else(|| cfg_err("strategy.psi is required for this experiment"))
    }

    pub fn alpha(&self) -> f64 {
        self.detector.alpha.unwrap_or(0.05)
    }

    pub fn n_grid(&self) -> Result<&[u64]> {
        match self.grid.n.as_deref() {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(cfg_err("grid.n must be a nonempty list")),
        }
    }

    pub fn t_grid(&self) -> Result<&[f64]> {
        match self.grid.t.as_deref() {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(cfg_err("grid.t must be a nonempty list")),
        }
    }

    pub fn rho_grid(&self) -> Result<&[f64]> {
        match self.grid.rho.as_deref() {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(cfg_err("grid.rho must be a nonempty list")),
        }
    }

    pub fn gamma_grid(&self) -> Result<&[f64]> {
        match self.grid.gamma.as_deref() {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(cfg_err("grid.gamma must be a nonempty list")),
        }
    }

    /// Families to analyze: `grid.families` when given, else the channel.
    pub fn families(&self) -> Vec<IpdDistribution> {
        match &self.grid.families {
            Some(f) if !f.is_empty() => f.clone(),
            _ => vec![self.channel],
        }
    }

    /// The channel's Poisson rate; the Poisson experiments require an
    /// exponential channel law.
    pub fn poisson_rate(&self) -> Result<f64> {
        match self.channel {
            IpdDistribution::Exponential { rate } => Ok(rate),
            _ => Err(cfg_err(format!(
                "{} experiments need an exponential channel, got {}",
                self.kind.name(),
                self.channel.family()
            ))),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(format!(
                "schema_version {} unsupported, this build reads {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        self.channel
            .validate()
            .map_err(|e| cfg_err(format!("channel: {e}")))?;
        if let Some(fams) = &self.grid.families {
            for f in fams {
                f.validate().map_err(|e| cfg_err(format!("grid.families: {e}")))?;
            }
        }
        if let Some(a) = self.detector.alpha {
            if !(a.is_finite() && 0.0 < a && a < 1.0) {
                return Err(cfg_err(format!("detector.alpha must lie in (0, 1), got {a}")));
            }
        }
        if self.trials == 0 {
            return Err(cfg_err("trials must be positive"));
        }
        // Sweep checks reason about "the largest grid point" and about
        // trends along the grid, so grid order is pinned: n and t ascend,
        // rho descends (a halving sweep).
        if let Some(n) = &self.grid.n {
            if n.windows(2).any(|w| w[1] <= w[0]) {
                return Err(cfg_err("grid.n must be strictly increasing"));
            }
        }
        if let Some(t) = &self.grid.t {
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(cfg_err("grid.t must be strictly increasing"));
            }
        }
        if let Some(rho) = &self.grid.rho {
            if rho.windows(2).any(|w| w[1] >= w[0]) {
                return Err(cfg_err("grid.rho must be strictly decreasing"));
            }
        }
        match self.kind {
            ExperimentKind::PoissonAchievability => {
                self.poisson_rate()?;
                self.epsilon()?;
                self.t_grid()?;
            }
            ExperimentKind::PoissonConverse => {
                self.poisson_rate()?;
                self.t_grid()?;
                self.gamma_grid()?;
            }
            ExperimentKind::Buffering => {
                self.epsilon()?;
                self.n_grid()?;
            }
            ExperimentKind::TwoPhase => {
                self.epsilon()?;
                self.psi()?;
                self.n_grid()?;
            }
            ExperimentKind::OnePhase => {
                self.epsilon()?;
                self.n_grid()?;
            }
            ExperimentKind::KlExpansion => {
                let grid = self.rho_grid()?;
                if grid.iter().any(|&r| !(0.0 < r && r < 1.0)) {
                    return Err(cfg_err("grid.rho entries must lie in (0, 1)"));
                }
            }
            ExperimentKind::Fisher => {}
        }
        if self.output.csv.is_empty() {
            return Err(cfg_err("output.csv must be a filename"));
        }
        Ok(())
    }
}
