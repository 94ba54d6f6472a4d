//! Scenario files (TOML). Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub torus: TorusConfig,
    pub bundle: BundleConfig,
    #[serde(default)]
    pub extension: Option<ExtensionConfig>,
    #[serde(default)]
    pub metric: MetricConfig,
    /// Second initial metric for the σ monitor.
    #[serde(default)]
    pub paired: Option<MetricConfig>,
    #[serde(default)]
    pub flow: FlowConfig,
    /// Companion connection flow whose snapshots feed the Cauchy monitor.
    #[serde(default)]
    pub connection_flow: Option<ConnectionFlowConfig>,
    /// Expected HN type of the limit; defaults to the block slopes.
    #[serde(default)]
    pub expected_type: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    /// Complex dimension, 1 or 2.
    pub n: usize,
    /// Points per real direction: one value for all, or one per direction.
    pub grid: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockConfig {
    #[serde(default = "one")]
    pub rank: usize,
    pub charges: Vec<i64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleConfig {
    pub blocks: Vec<BlockConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionKind {
    /// Constant strictly upper entries (closed when the charges agree).
    Constant,
    /// Smooth random trial form projected onto the closed forms.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionConfig {
    pub kind: ExtensionKind,
    /// L² size of β after normalization.
    pub strength: f64,
    /// Only the first `factors` complex factors vary.
    #[serde(default)]
    pub factors: Option<usize>,
    #[serde(default = "default_projection_tol")]
    pub tol: f64,
}

fn default_projection_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Identity,
    /// Scalar conformal factor `exp(a·b)` with a smooth periodic bump `b`.
    Bump,
    /// `exp(s)` with `s` smooth, random, hermitian and traceless.
    Random,
    /// Constant diagonal metric.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: MetricKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub factors: Option<usize>,
    #[serde(default)]
    pub diag: Option<Vec<f64>>,
    /// Seed offset so paired metrics can differ.
    #[serde(default)]
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { kind: MetricKind::Identity, amplitude: 0.0, factors: None, diag: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_shifts")]
    pub shifts: Vec<f64>,
    #[serde(default = "yes")]
    pub abort_on_violation: bool,
}

fn default_cfl() -> f64 {
    1.0
}
fn default_t_max() -> f64 {
    10.0
}
fn default_grad_tol() -> f64 {
    1e-5
}
fn default_sample_every() -> usize {
    10
}
fn default_alphas() -> Vec<f64> {
    vec![1.0, 1.5, 2.0, 3.0]
}
fn default_shifts() -> Vec<f64> {
    vec![0.0, 10.0]
}
fn yes() -> bool {
    true
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            cfl: default_cfl(),
            t_max: default_t_max(),
            grad_tol: default_grad_tol(),
            sample_every: default_sample_every(),
            alphas: default_alphas(),
            shifts: default_shifts(),
            abort_on_violation: true,
        }
    }
}

impl FlowConfig {
    pub fn options(&self, floor: Option<f64>) -> FlowOptions {
        let alpha_n = self.shifts.iter().flat_map(|&n| self.alphas.iter().map(move |&a| (a, n))).collect();
        FlowOptions {
            cfl: self.cfl,
            t_max: self.t_max,
            grad_tol: self.grad_tol,
            sample_every: self.sample_every,
            alpha_n,
            floor,
            abort_on_violation: self.abort_on_violation,
            max_halvings: 20,
            psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionFlowConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub snapshots: Vec<f64>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn grid(&self) -> Vec<usize> {
        if self.torus.grid.len() == 1 {
            vec![self.torus.grid[0]; 2 * self.torus.n]
        } else {
            self.torus.grid.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.torus.n;
        if self.bundle.blocks.is_empty() {
            return Err(Error::Config("at least one block is required".into()));
        }
        for b in &self.bundle.blocks {
            if b.charges.len() != n || b.rank == 0 {
                return Err(Error::Config(format!("block {b:?} needs rank >= 1 and {n} charges")));
            }
        }
        let rank: usize = self.bundle.blocks.iter().map(|b| b.rank).sum();
        if let Some(t) = &self.expected_type {
            if t.len() != rank {
                return Err(Error::Config(format!("expected_type has {} entries, rank is {rank}", t.len())));
            }
        }
        for m in std::iter::once(&self.metric).chain(self.paired.as_ref()) {
            if m.kind == MetricKind::Diagonal && m.diag.as_ref().map(Vec::len) != Some(rank) {
                return Err(Error::Config(format!("diagonal metric needs {rank} entries")));
            }
        }
        let f = &self.flow;
        if !(f.cfl > 0.0 && f.t_max > 0.0 && f.grad_tol > 0.0) {
            return Err(Error::Config("flow parameters must be positive".into()));
        }
        if f.alphas.iter().any(|a| !(*a >= 1.0)) {
            return Err(Error::Config("every alpha must be >= 1".into()));
        }
        Ok(())
    }
}
