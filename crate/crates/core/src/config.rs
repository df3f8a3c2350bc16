//! Experiment descriptions (JSON) and the built-in regret grid.

use crate::generate::{
    generate_lower_bound, generate_synthetic, GeneratorError, GeneratorSpec, LowerBoundVariant,
};
use crate::harness::{run_batch, AggregateSummary, HarnessError};
use crate::mnl::Instance;
use crate::policy::PolicyConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
}

/// Where a run's instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    Synthetic {
        #[serde(default)]
        spec: GeneratorSpec,
    },
    LowerBoundP0,
    LowerBoundP1,
    File {
        path: PathBuf,
    },
}

impl Default for Generator {
    fn default() -> Self {
        Self::Synthetic {
            spec: GeneratorSpec::default(),
        }
    }
}

impl Generator {
    /// Builds an instance. `horizon` parameterises the lower-bound pair.
    pub fn instance(
        &self,
        n: usize,
        horizon: u64,
        seed: u64,
    ) -> Result<Instance<f64>, ConfigError> {
        match self {
            Self::Synthetic { spec } => Ok(generate_synthetic(n, spec, seed)?),
            Self::LowerBoundP0 => Ok(generate_lower_bound(LowerBoundVariant::P0, n, horizon)?),
            Self::LowerBoundP1 => Ok(generate_lower_bound(LowerBoundVariant::P1, n, horizon)?),
            Self::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                let inst =
                    Instance::from_json(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                if inst.len() != n {
                    return Err(ConfigError::Invalid(format!(
                        "{} holds {} items but N = {n}",
                        path.display(),
                        inst.len()
                    )));
                }
                Ok(inst)
            }
        }
    }
}

/// One cell: a policy on one generator at one `(N, T)`, replicated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub generator: Generator,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub policy: PolicyConfig,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Draw a fresh instance per replication instead of one per cell.
    #[serde(default)]
    pub redraw_instance: bool,
    /// Report realised-reward regret instead of expected regret.
    #[serde(default)]
    pub realized_regret: bool,
}

fn default_replications() -> usize {
    20
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::Invalid("N must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("T must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(ConfigError::Invalid("replications must be >= 1".into()));
        }
        match &self.generator {
            Generator::Synthetic { spec } => spec.validate()?,
            Generator::LowerBoundP0 | Generator::LowerBoundP1 if self.n < 2 => {
                return Err(GeneratorError::TooFewItems(self.n).into())
            }
            _ => {}
        }
        Ok(())
    }

    pub fn build_instance(&self, seed: u64) -> Result<Instance<f64>, HarnessError> {
        self.generator
            .instance(self.n, self.horizon, seed)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
}

/// A grid of cells times policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub generator: Generator,
    pub cells: Vec<Cell>,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub redraw_instance: bool,
}

/// `(N, T)` pairs of the reference regret grid.
pub const TABLE2_CELLS: [(usize, u64); 8] = [
    (100, 500),
    (250, 500),
    (500, 500),
    (1000, 500),
    (100, 1000),
    (250, 1000),
    (500, 1000),
    (1000, 1000),
];

impl BenchConfig {
    /// The regret table grid with all five learning policies; the adaptive
    /// variant uses the empirical radius scale.
    pub fn table2() -> Self {
        Self {
            generator: Generator::default(),
            cells: TABLE2_CELLS
                .iter()
                .map(|&(n, horizon)| Cell { n, horizon })
                .collect(),
            policies: vec![
                PolicyConfig::ucb(),
                PolicyConfig::Thompson,
                PolicyConfig::grs(),
                PolicyConfig::trisection(),
                PolicyConfig::adaptive_trisection(crate::concentration::CiScheme::EMPIRICAL_SCALE),
            ],
            replications: 20,
            master_seed: 2019,
            redraw_instance: false,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        (name == "table2").then(Self::table2)
    }

    pub fn runs(&self) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for cell in &self.cells {
            for policy in &self.policies {
                out.push(RunConfig {
                    generator: self.generator.clone(),
                    n: cell.n,
                    horizon: cell.horizon,
                    policy: policy.clone(),
                    replications: self.replications,
                    master_seed: self.master_seed,
                    redraw_instance: self.redraw_instance,
                    realized_regret: false,
                });
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cells.is_empty() || self.policies.is_empty() {
            return Err(ConfigError::Invalid(
                "bench config needs at least one cell and one policy".into(),
            ));
        }
        self.runs().iter().try_for_each(RunConfig::validate)
    }
}

/// Key used for bench results: `policy|N=..|T=..`.
pub fn summary_key(summary: &AggregateSummary) -> String {
    format!(
        "{}|N={}|T={}",
        summary.policy_name, summary.n, summary.horizon
    )
}

/// Runs every cell of the grid; results keyed by [`summary_key`].
pub fn run_bench(
    config: &BenchConfig,
    workers: usize,
) -> Result<BTreeMap<String, AggregateSummary>, HarnessError> {
    config
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut out = BTreeMap::new();
    for run in config.runs() {
        let summary = run_batch(&run, workers)?;
        out.insert(summary_key(&summary), summary);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig {
            generator: Generator::default(),
            n: 10,
            horizon: 100,
            policy: PolicyConfig::adaptive_trisection(0.1),
            replications: 3,
            master_seed: 5,
            redraw_instance: false,
            realized_regret: false,
        }
    }

    #[test]
    fn run_config_round_trip() {
        let c = sample();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"N":5,"T":10,"policy":{"name":"grs"}}"#).unwrap();
        assert_eq!(c.replications, 20);
        assert_eq!(c.generator, Generator::default());
        assert!(serde_json::from_str::<RunConfig>(
            r#"{"N":5,"T":10,"policy":{"name":"grs"},"bogus":1}"#
        )
        .is_err());
    }

    #[test]
    fn validation() {
        let mut c = sample();
        c.n = 0;
        assert!(c.validate().is_err());
        let mut c = sample();
        c.replications = 0;
        assert!(c.validate().is_err());
        let mut c = sample();
        c.generator = Generator::LowerBoundP0;
        c.n = 1;
        assert!(c.validate().is_err());
        c.n = 2;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn table2_grid() {
        let t = BenchConfig::table2();
        assert_eq!(t.cells.len(), 8);
        assert_eq!(t.runs().len(), 40);
        assert!(BenchConfig::builtin("table2").is_some());
        assert!(BenchConfig::builtin("table3").is_none());
        let text = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<BenchConfig>(&text).unwrap(), t);
    }

    #[test]
    fn file_generator_checks_size() {
        let dir = std::env::temp_dir().join(format!("assort-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("inst.json");
        std::fs::write(&path, r#"{"revenues":[0.5,0.2],"utilities":[1.0,2.0]}"#).unwrap();
        let g = Generator::File { path: path.clone() };
        assert_eq!(g.instance(2, 10, 0).unwrap().len(), 2);
        assert!(g.instance(3, 10, 0).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
