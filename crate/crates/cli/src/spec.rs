use std::path::PathBuf;

use itx::measures::CostKind;
use itx::neural_it::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolveDiscrete,
    Train,
    Eval,
    CostCurve,
    Plot,
    /// Write scene samples as a point-cloud CSV.
    Sample,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    /// Scene pair name (`wifi`, `swiss2ball`, ...), or a single scene for `sample`.
    #[serde(default)]
    pub scene: Option<String>,
    #[serde(default)]
    pub p: Option<PathBuf>,
    #[serde(default)]
    pub q: Option<PathBuf>,
    #[serde(default)]
    pub cost: CostKind,
    /// Weight grid; a single entry for single-weight modes.
    #[serde(default = "default_ws")]
    pub ws: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Atoms per side when clouds are sampled from a scene.
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    /// Held-out source samples for evaluation.
    #[serde(default = "default_test")]
    pub test_samples: usize,
    #[serde(default)]
    pub train: TrainConfig,
    /// Map network (eval, plot).
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Potential network (eval).
    #[serde(default)]
    pub potential: Option<PathBuf>,
    /// Coupling CSV (plot).
    #[serde(default)]
    pub coupling: Option<PathBuf>,
    pub out: PathBuf,
}

fn default_ws() -> Vec<f64> {
    vec![1.0]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_atoms() -> usize {
    2000
}

fn default_test() -> usize {
    4000
}

impl ExperimentSpec {
    pub fn new(mode: Mode, out: PathBuf) -> Self {
        ExperimentSpec {
            mode,
            scene: None,
            p: None,
            q: None,
            cost: CostKind::default(),
            ws: default_ws(),
            seeds: default_seeds(),
            atoms: default_atoms(),
            test_samples: default_test(),
            train: TrainConfig::default(),
            checkpoint: None,
            potential: None,
            coupling: None,
            out,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.ws.is_empty() {
            return Err(CliError::config("ws", "at least one weight is required"));
        }
        if let Some(&w) = self.ws.iter().find(|w| !(**w >= 1.0 && w.is_finite())) {
            return Err(CliError::config("ws", format!("weights must be finite and >= 1, got {w}")));
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("seeds", "at least one seed is required"));
        }
        if self.atoms == 0 {
            return Err(CliError::config("atoms", "must be positive"));
        }
        if self.test_samples == 0 {
            return Err(CliError::config("test_samples", "must be positive"));
        }
        let has_files = self.p.is_some() || self.q.is_some();
        if has_files && (self.p.is_none() || self.q.is_none()) {
            return Err(CliError::config("p/q", "both --p and --q are required together"));
        }
        if has_files && self.scene.is_some() {
            return Err(CliError::config("scene", "give either --scene or --p/--q, not both"));
        }
        match self.mode {
            Mode::SolveDiscrete | Mode::CostCurve => {
                if !has_files && self.scene.is_none() {
                    return Err(CliError::config("scene", "a scene or --p/--q files are required"));
                }
            }
            Mode::Train | Mode::Eval | Mode::Sample => {
                if self.scene.is_none() && !(self.mode == Mode::Train && has_files) {
                    return Err(CliError::config("scene", "a scene is required"));
                }
            }
            Mode::Plot => {
                if self.coupling.is_none() && self.checkpoint.is_none() {
                    return Err(CliError::config("coupling", "plot needs --coupling or --checkpoint"));
                }
            }
        }
        if self.mode == Mode::Eval && self.checkpoint.is_none() {
            return Err(CliError::config("checkpoint", "eval needs a map checkpoint"));
        }
        if matches!(self.mode, Mode::SolveDiscrete | Mode::Eval) && self.ws.len() != 1 {
            return Err(CliError::config("ws", "this mode takes a single weight"));
        }
        if self.mode == Mode::CostCurve && self.ws.windows(2).any(|p| p[0] >= p[1]) {
            return Err(CliError::config("ws", "weights must be strictly increasing"));
        }
        self.train.validate().map_err(|e| CliError::config("train", e.to_string()))?;
        Ok(())
    }
}
