//! JSON experiment configurations.

use std::path::Path;

use lqproj_core::{Engine, PrimalVector, SpaceConfig, StopRule, Subspace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AlternateBregman,
    AlternateResidual,
    CyclicResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub n: usize,
    pub q: f64,
    /// Defaults to `q`.
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSubspace {
    pub name: String,
    /// Basis vectors as rows.
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub tol_step: f64,
    pub max_iter: usize,
}

impl Default for StopSpec {
    fn default() -> Self {
        let d = StopRule::default();
        Self {
            tol_step: d.tol_step,
            max_iter: d.max_iter,
        }
    }
}

fn default_engine() -> Engine {
    Engine::Direct
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    pub subspaces: Vec<NamedSubspace>,
    /// Names of the subspaces to iterate over, in order; all of them when absent.
    #[serde(default)]
    pub apply: Option<Vec<String>>,
    /// Seeded standard normal start when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub algorithm: Algorithm,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub seed: u64,
    pub output: String,
    /// Sample count for the regularity estimate in the summary; 0 skips it.
    #[serde(default = "default_kappa_samples")]
    pub kappa_samples: usize,
}

fn default_kappa_samples() -> usize {
    1000
}

/// A validated configuration with its geometry built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub space: SpaceConfig,
    pub subspaces: Vec<Subspace>,
    pub x0: PrimalVector,
    pub stop: StopRule,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Resolves names, checks shapes and builds the subspaces to iterate over.
    pub fn prepare(&self) -> CliResult<Prepared> {
        let bad = |msg: String| CliError::ConfigParse(msg);
        let n = self.space.n;
        let space =
            SpaceConfig::new(n, self.space.q, self.space.p.unwrap_or(self.space.q)).map_err(|e| bad(e.to_string()))?;

        let mut built = Vec::with_capacity(self.subspaces.len());
        for s in &self.subspaces {
            if built.iter().any(|(name, _): &(String, Subspace)| *name == s.name) {
                return Err(bad(format!("duplicate subspace name `{}`", s.name)));
            }
            if let Some(row) = s.basis.iter().find(|r| r.len() != n) {
                return Err(bad(format!(
                    "subspace `{}` has a basis row of length {}, expected {n}",
                    s.name,
                    row.len()
                )));
            }
            let sub = Subspace::from_basis(n, &s.basis).map_err(|e| bad(format!("subspace `{}`: {e}", s.name)))?;
            built.push((s.name.clone(), sub));
        }

        let subspaces: Vec<Subspace> = match &self.apply {
            Some(names) => names
                .iter()
                .map(|name| {
                    built
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, s)| s.clone())
                        .ok_or_else(|| bad(format!("unknown subspace name `{name}`")))
                })
                .collect::<CliResult<_>>()?,
            None => built.into_iter().map(|(_, s)| s).collect(),
        };
        let needed = match self.algorithm {
            Algorithm::AlternateBregman | Algorithm::AlternateResidual => subspaces.len() == 2,
            Algorithm::CyclicResidual => subspaces.len() >= 2,
        };
        if !needed {
            return Err(bad(format!(
                "{:?} cannot run on {} subspaces",
                self.algorithm,
                subspaces.len()
            )));
        }

        let x0 = match &self.x0 {
            Some(c) if c.len() != n => return Err(bad(format!("x0 has length {}, expected {n}", c.len()))),
            Some(c) => PrimalVector::from_slice(c),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                PrimalVector::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            }
        };
        if self.stop.tol_step.is_nan() || self.stop.tol_step <= 0.0 || self.stop.max_iter == 0 {
            return Err(bad("stop.tol_step must be positive and stop.max_iter at least 1".into()));
        }
        Ok(Prepared {
            space,
            subspaces,
            x0,
            stop: StopRule {
                tol_step: self.stop.tol_step,
                max_iter: self.stop.max_iter,
            },
        })
    }
}
