//! Episode runner, replication batches, and regret-scaling fits.
//!
//! Regret is expected regret: each period contributes `R(S*) - R(S_t)`
//! evaluated on the true instance, independent of the sampled purchase.

use crate::config::{Generator, RunConfig};
use crate::mnl::{
    expected_revenue, oracle_optimal, sample_purchase, Assortment, Instance, MnlError,
};
use crate::policy::{Catalog, Policy, PolicyConfig, PolicyError};
use crate::seeds;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Per-period regret below this is treated as rounding noise.
pub const REGRET_FLOOR: f64 = -1e-12;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("horizon must be >= 1")]
    ZeroHorizon,
    #[error("policy {policy} failed at period {period}: {source}")]
    Policy {
        policy: String,
        period: u64,
        #[source]
        source: PolicyError,
    },
    #[error("period {period}: offered assortment beats the oracle by {excess:e}")]
    NegativeRegret { period: u64, excess: f64 },
    #[error("replication with seed {seed} failed: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<HarnessError>,
    },
    #[error(transparent)]
    Model(#[from] MnlError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub t: u64,
    pub assortment_size: usize,
    pub expected_revenue: f64,
    pub inst_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub policy_name: String,
    pub seed: u64,
    pub optimal_revenue: f64,
    pub steps: Vec<EpisodeStep>,
    pub cumulative_regret: f64,
    /// Sum of sampled purchase revenues (realised, not expected).
    pub realized_revenue: f64,
    /// Offered assortments, when requested.
    pub assortments: Option<Vec<Assortment>>,
}

impl EpisodeLog {
    pub fn horizon(&self) -> u64 {
        self.steps.len() as u64
    }

    /// Realised-reward regret `T R(S*) - sum of sampled revenues`.
    pub fn realized_regret(&self) -> f64 {
        self.horizon() as f64 * self.optimal_revenue - self.realized_revenue
    }

    /// Writes `t,assortment_size,expected_revenue,inst_regret,cum_regret`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "t,assortment_size,expected_revenue,inst_regret,cum_regret"
        )?;
        let mut cum = 0.0;
        for s in &self.steps {
            cum += s.inst_regret;
            writeln!(
                out,
                "{},{},{:?},{:?},{:?}",
                s.t, s.assortment_size, s.expected_revenue, s.inst_regret, cum
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    pub record_assortments: bool,
}

/// Drives an already-built policy for `horizon` periods.
pub fn run_policy<R: Rng + ?Sized>(
    instance: &Instance<f64>,
    policy: &mut dyn Policy,
    horizon: u64,
    customers: &mut R,
    options: EpisodeOptions,
) -> Result<EpisodeLog, HarnessError> {
    if horizon == 0 {
        return Err(HarnessError::ZeroHorizon);
    }
    let (_, optimal) = oracle_optimal(instance);
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut assortments = options.record_assortments.then(Vec::new);
    let mut cumulative = 0.0;
    let mut realized = 0.0;
    let mut cached: Option<(Assortment, f64)> = None;
    let label = policy.name().to_string();
    let fail = |period, source| HarnessError::Policy {
        policy: label.clone(),
        period,
        source,
    };
    for t in 1..=horizon {
        let offer = policy.next_assortment().map_err(|e| fail(t, e))?;
        let revenue = match &cached {
            Some((s, r)) if *s == offer => *r,
            _ => {
                let r = expected_revenue(instance, &offer).map_err(|e| fail(t, e.into()))?;
                cached = Some((offer.clone(), r));
                r
            }
        };
        let regret = optimal - revenue;
        if regret < REGRET_FLOOR {
            return Err(HarnessError::NegativeRegret {
                period: t,
                excess: -regret,
            });
        }
        let outcome = sample_purchase(instance, &offer, customers)?;
        realized += outcome.revenue;
        policy.observe(&outcome).map_err(|e| fail(t, e))?;
        cumulative += regret;
        steps.push(EpisodeStep {
            t,
            assortment_size: offer.len(),
            expected_revenue: revenue,
            inst_regret: regret,
        });
        if let Some(list) = assortments.as_mut() {
            list.push(offer);
        }
    }
    Ok(EpisodeLog {
        policy_name: policy.name().to_string(),
        seed: 0,
        optimal_revenue: optimal,
        steps,
        cumulative_regret: cumulative,
        realized_revenue: realized,
        assortments,
    })
}

/// Builds `config` against `instance` and runs one seeded episode.
pub fn run_episode(
    instance: &Instance<f64>,
    config: &PolicyConfig,
    horizon: u64,
    seed: u64,
) -> Result<EpisodeLog, HarnessError> {
    run_episode_with(instance, config, horizon, seed, EpisodeOptions::default())
}

pub fn run_episode_with(
    instance: &Instance<f64>,
    config: &PolicyConfig,
    horizon: u64,
    seed: u64,
    options: EpisodeOptions,
) -> Result<EpisodeLog, HarnessError> {
    if horizon == 0 {
        return Err(HarnessError::ZeroHorizon);
    }
    let (oracle_set, _) = oracle_optimal(instance);
    let catalog = Catalog::new(instance.revenues().to_vec());
    let mut policy = config
        .build(
            catalog,
            horizon,
            seeds::policy_seed(seed),
            Some(&oracle_set),
        )
        .map_err(|e| HarnessError::Policy {
            policy: config.label(),
            period: 0,
            source: e,
        })?;
    let mut customers = seeds::customer_rng(seed);
    let mut log = run_policy(instance, policy.as_mut(), horizon, &mut customers, options)?;
    log.seed = seed;
    log.policy_name = config.label();
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub policy_name: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub replications: usize,
    pub mean_regret: f64,
    pub max_regret: f64,
    pub std_regret: f64,
    pub optimal_revenue: f64,
    pub regrets: Vec<f64>,
}

impl AggregateSummary {
    pub fn from_regrets(
        policy_name: String,
        n: usize,
        horizon: u64,
        optimal_revenue: f64,
        regrets: Vec<f64>,
    ) -> Self {
        let k = regrets.len();
        let mean = regrets.iter().sum::<f64>() / k as f64;
        let max = regrets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let std = if k > 1 {
            (regrets.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (k - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            policy_name,
            n,
            horizon,
            replications: k,
            mean_regret: mean,
            max_regret: max,
            std_regret: std,
            optimal_revenue,
            regrets,
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Runs all replications of `config` on `workers` threads. The result does
/// not depend on `workers`.
pub fn run_batch(config: &RunConfig, workers: usize) -> Result<AggregateSummary, HarnessError> {
    config
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let fixed = if config.redraw_instance {
        None
    } else {
        Some(config.build_instance(seeds::instance_seed(config.master_seed))?)
    };
    let reps: Vec<u64> = (0..config.replications as u64).collect();
    let run_one = |k: u64| -> Result<(f64, f64), HarnessError> {
        let seed = seeds::replication_seed(config.master_seed, k);
        let drawn;
        let instance = match &fixed {
            Some(inst) => inst,
            None => {
                drawn = config
                    .build_instance(seeds::replication_instance_seed(config.master_seed, k))?;
                &drawn
            }
        };
        let log = run_episode(instance, &config.policy, config.horizon, seed).map_err(|e| {
            HarnessError::Replication {
                seed,
                source: Box::new(e),
            }
        })?;
        let regret = if config.realized_regret {
            log.realized_regret()
        } else {
            log.cumulative_regret
        };
        Ok((regret, log.optimal_revenue))
    };
    let results: Vec<(f64, f64)> = pool(workers)?.install(|| {
        reps.par_iter()
            .map(|&k| run_one(k))
            .collect::<Result<_, _>>()
    })?;
    let optimal = results.first().map(|r| r.1).unwrap_or(0.0);
    let regrets = results.into_iter().map(|r| r.0).collect();
    Ok(AggregateSummary::from_regrets(
        config.policy.label(),
        config.n,
        config.horizon,
        optimal,
        regrets,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub mean_regret: f64,
    pub max_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub policy_name: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub rows: Vec<ScalingRow>,
    /// Slope of `ln(mean regret)` on `ln T`; `None` when any mean regret is
    /// not strictly positive.
    pub exponent: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean regret at each horizon on the same instance, plus the fitted
/// exponent `alpha` in `regret ~ c T^alpha`.
pub fn regret_scaling_study(
    policy: &PolicyConfig,
    generator: &Generator,
    n: usize,
    horizons: &[u64],
    replications: usize,
    master_seed: u64,
    workers: usize,
) -> Result<ScalingReport, HarnessError> {
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config(
            "horizons must be strictly increasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let config = RunConfig {
            generator: generator.clone(),
            n,
            horizon,
            policy: policy.clone(),
            replications,
            master_seed,
            redraw_instance: false,
            realized_regret: false,
        };
        let summary = run_batch(&config, workers)?;
        rows.push(ScalingRow {
            horizon,
            mean_regret: summary.mean_regret,
            max_regret: summary.max_regret,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.horizon as f64, r.mean_regret))
        .collect();
    Ok(ScalingReport {
        policy_name: policy.label(),
        n,
        exponent: fit_log_log_slope(&points),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::StaticChoice;

    fn small() -> Instance<f64> {
        Instance::new(vec![0.9, 0.5, 0.45, 0.2], vec![0.3, 1.0, 0.8, 2.0]).unwrap()
    }

    #[test]
    fn oracle_static_has_zero_regret() {
        let log = run_episode(&small(), &PolicyConfig::static_oracle(), 200, 1).unwrap();
        assert_eq!(log.cumulative_regret, 0.0);
        assert_eq!(log.steps.len(), 200);
    }

    #[test]
    fn empty_static_regret_is_t_f_star() {
        let inst = small();
        let (_, f_star) = oracle_optimal(&inst);
        let cfg = PolicyConfig::Static {
            assortment: StaticChoice::Empty,
        };
        let log = run_episode(&inst, &cfg, 50, 1).unwrap();
        assert!((log.cumulative_regret - 50.0 * f_star).abs() < 1e-9);
        assert_eq!(log.realized_revenue, 0.0);
    }

    #[test]
    fn accounting_identity_and_nonnegativity() {
        let inst = small();
        for cfg in [
            PolicyConfig::trisection(),
            PolicyConfig::ucb(),
            PolicyConfig::Thompson,
            PolicyConfig::grs(),
        ] {
            let log = run_episode(&inst, &cfg, 300, 9).unwrap();
            let identity = 300.0 * log.optimal_revenue
                - log.steps.iter().map(|s| s.expected_revenue).sum::<f64>();
            assert!((identity - log.cumulative_regret).abs() < 1e-9);
            assert!(log.steps.iter().all(|s| s.inst_regret >= REGRET_FLOOR));
            assert!(log.cumulative_regret >= -1e-9);
        }
    }

    #[test]
    fn csv_columns() {
        let log = run_episode(&small(), &PolicyConfig::static_oracle(), 3, 1).unwrap();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "t,assortment_size,expected_revenue,inst_regret,cum_regret"
        );
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("3,"));
    }

    #[test]
    fn zero_horizon_rejected() {
        assert!(matches!(
            run_episode(&small(), &PolicyConfig::trisection(), 0, 1),
            Err(HarnessError::ZeroHorizon)
        ));
    }

    #[test]
    fn summary_statistics() {
        let s = AggregateSummary::from_regrets("x".into(), 1, 1, 0.5, vec![2.0]);
        assert_eq!(s.mean_regret, s.max_regret);
        assert_eq!(s.std_regret, 0.0);
        let s = AggregateSummary::from_regrets("x".into(), 1, 1, 0.5, vec![1.0, 3.0]);
        assert_eq!(s.mean_regret, 2.0);
        assert_eq!(s.max_regret, 3.0);
        assert!((s.std_regret - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&t: &f64| (t, 3.0 * t.sqrt()))
            .collect();
        assert!((fit_log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(fit_log_log_slope(&[(10.0, 0.0), (100.0, 0.0)]), None);
        assert_eq!(fit_log_log_slope(&[(10.0, 1.0)]), None);
    }
}
