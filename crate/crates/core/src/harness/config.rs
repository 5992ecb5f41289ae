use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::MechanismKind;

pub const DEFAULT_ITERATIONS: usize = 250;
pub const FAST_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Truthful versus top-capacity payoff of the first agent, exact
    /// mechanisms side by side.
    CompareFirstAgent,
    /// Mean maximal percentage utility gain as a function of `m`.
    MpugCurve,
    /// Share of manipulative agents and of manipulable instances.
    PmaPmi,
    /// Manipulable-instance share of the breadth-first mechanism with and
    /// without the agent-order lottery.
    RandomizedVsDeterministic,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::CompareFirstAgent,
        ExperimentKind::MpugCurve,
        ExperimentKind::PmaPmi,
        ExperimentKind::RandomizedVsDeterministic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CompareFirstAgent => "compare-first-agent",
            ExperimentKind::MpugCurve => "mpug-curve",
            ExperimentKind::PmaPmi => "pma-pmi",
            ExperimentKind::RandomizedVsDeterministic => "randomized-vs-deterministic",
        }
    }

    /// The grid used when a configuration does not give one.
    pub fn default_grid(self) -> Grid {
        let m_sweep: Vec<usize> = (100..=200).step_by(25).collect();
        match self {
            ExperimentKind::CompareFirstAgent => Grid {
                n: vec![20, 40, 60, 80],
                m: vec![30, 50, 70],
                p: vec![0.4, 0.6, 0.8],
                capacity: vec![(3, 3)],
            },
            ExperimentKind::MpugCurve => Grid {
                n: vec![10, 15, 20],
                m: m_sweep,
                p: vec![0.2],
                capacity: vec![(3, 7)],
            },
            ExperimentKind::PmaPmi => Grid {
                n: vec![10, 15, 20],
                m: m_sweep,
                p: vec![0.1, 0.2, 0.4],
                capacity: vec![(3, 7)],
            },
            ExperimentKind::RandomizedVsDeterministic => Grid {
                n: vec![20],
                m: vec![25],
                p: vec![0.2],
                capacity: vec![(3, 3)],
            },
        }
    }

    fn default_iterations(self) -> usize {
        match self {
            ExperimentKind::RandomizedVsDeterministic => 100,
            _ => DEFAULT_ITERATIONS,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

/// Parameter lists whose Cartesian product gives the cells of an
/// experiment, iterated with `n` outermost and `capacity` innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub p: Vec<f64>,
    /// Inclusive `(low, high)` capacity ranges.
    pub capacity: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub b_low: usize,
    pub b_high: usize,
}

impl Grid {
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &m in &self.m {
                for &p in &self.p {
                    for &(b_low, b_high) in &self.capacity {
                        out.push(Cell {
                            n,
                            m,
                            p,
                            b_low,
                            b_high,
                        });
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.m.is_empty() || self.p.is_empty() || self.capacity.is_empty() {
            return Err(Error::InvalidConfig(
                "every grid list must be non-empty".into(),
            ));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidConfig(format!("p = {p} outside [0, 1]")));
        }
        if let Some((lo, hi)) = self.capacity.iter().find(|(lo, hi)| *lo == 0 || lo > hi) {
            return Err(Error::InvalidConfig(format!(
                "capacity range [{lo}, {hi}] is not a positive ordered range"
            )));
        }
        Ok(())
    }
}

fn default_thresholds() -> Vec<f64> {
    vec![1.5, 2.0, 2.5, 3.0]
}

fn default_orders() -> Vec<usize> {
    vec![2, 3, 4]
}

fn default_mc_trials() -> usize {
    250
}

fn default_mean() -> f64 {
    3.0
}

fn default_sigma() -> f64 {
    0.77
}

fn default_mechanisms() -> Vec<MechanismKind> {
    vec![MechanismKind::Bfs]
}

/// Everything needed to rerun an experiment. Omitted fields take the
/// defaults for the experiment kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Use the short iteration count when `iterations` is not given.
    #[serde(default)]
    pub fast: bool,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_mc_trials")]
    pub mc_trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mean")]
    pub value_mean: f64,
    #[serde(default = "default_sigma")]
    pub value_sigma: f64,
    /// Mechanisms measured by `mpug-curve` and `pma-pmi`.
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<MechanismKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            grid: None,
            iterations: None,
            fast: false,
            thresholds: default_thresholds(),
            orders: default_orders(),
            mc_trials: default_mc_trials(),
            seed: 0,
            value_mean: default_mean(),
            value_sigma: default_sigma(),
            mechanisms: default_mechanisms(),
            csv: None,
            json: None,
            svg: None,
        }
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = Some(iterations);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_grid(&self) -> Grid {
        self.grid
            .clone()
            .unwrap_or_else(|| self.kind.default_grid())
    }

    pub fn resolved_iterations(&self) -> usize {
        match (self.iterations, self.fast) {
            (Some(k), _) => k,
            (None, true) => FAST_ITERATIONS,
            (None, false) => self.kind.default_iterations(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_grid().validate()?;
        if self.resolved_iterations() == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        match self.kind {
            ExperimentKind::MpugCurve | ExperimentKind::PmaPmi => {
                if self.thresholds.is_empty() {
                    return Err(Error::InvalidConfig("threshold list is empty".into()));
                }
                if self.mechanisms.is_empty() {
                    return Err(Error::InvalidConfig("mechanism list is empty".into()));
                }
                if let Some(k) = self.mechanisms.iter().find(|k| !k.is_deterministic()) {
                    return Err(Error::UnsupportedMechanism(k.name()));
                }
            }
            ExperimentKind::RandomizedVsDeterministic => {
                if self.orders.is_empty() {
                    return Err(Error::InvalidConfig("order list is empty".into()));
                }
                if self.mc_trials < 2 {
                    return Err(Error::InvalidConfig("mc_trials must be at least 2".into()));
                }
            }
            ExperimentKind::CompareFirstAgent => {}
        }
        if !(self.value_sigma >= 0.0 && self.value_sigma.is_finite() && self.value_mean.is_finite())
        {
            return Err(Error::InvalidConfig("value distribution parameters".into()));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::from_json(&std::fs::read_to_string(path)?)
    }
}
