//! Diagnostics on the two-point lower-bound pair.

use assortment::generate::{generate_lower_bound, lower_bound_tester, LowerBoundVariant};
use assortment::harness::{run_episode_with, EpisodeOptions, HarnessError};
use assortment::mnl::{kl_bracket, kl_purchase_distributions, oracle_optimal, Instance};
use assortment::policy::PolicyConfig;
use assortment::{seeds, Assortment};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct KlRow {
    pub assortment: Vec<usize>,
    pub kl: f64,
    pub kl_upper: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantReport {
    pub variant: String,
    pub optimal_assortment: Vec<usize>,
    pub optimal_revenue: f64,
    /// Tester outputs, one per seeded run.
    pub tester_outputs: Vec<u8>,
    pub fraction_zero: f64,
    pub mean_regret: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub policy_name: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub kl: Vec<KlRow>,
    pub variants: Vec<VariantReport>,
}

fn variant_name(v: LowerBoundVariant) -> &'static str {
    match v {
        LowerBoundVariant::P0 => "P0",
        LowerBoundVariant::P1 => "P1",
    }
}

pub fn run_variant(
    variant: LowerBoundVariant,
    policy: &PolicyConfig,
    n: usize,
    horizon: u64,
    runs: usize,
    master_seed: u64,
) -> Result<VariantReport, HarnessError> {
    let inst: Instance<f64> = generate_lower_bound(variant, n, horizon)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let (opt, value) = oracle_optimal(&inst);
    let mut outputs = Vec::with_capacity(runs);
    let mut regret = 0.0;
    for k in 0..runs as u64 {
        let seed = seeds::replication_seed(master_seed, k);
        let log = run_episode_with(
            &inst,
            policy,
            horizon,
            seed,
            EpisodeOptions {
                record_assortments: true,
            },
        )?;
        regret += log.cumulative_regret;
        outputs.push(lower_bound_tester(
            log.assortments.as_deref().unwrap_or(&[]),
        ));
    }
    let zeros = outputs.iter().filter(|&&o| o == 0).count();
    Ok(VariantReport {
        variant: variant_name(variant).into(),
        optimal_assortment: opt.items().to_vec(),
        optimal_revenue: value,
        fraction_zero: zeros as f64 / runs.max(1) as f64,
        mean_regret: regret / runs.max(1) as f64,
        tester_outputs: outputs,
    })
}

pub fn kl_rows(n: usize, horizon: u64) -> Result<Vec<KlRow>, HarnessError> {
    let cfg = |e: assortment::generate::GeneratorError| HarnessError::Config(e.to_string());
    let p0: Instance<f64> = generate_lower_bound(LowerBoundVariant::P0, n, horizon).map_err(cfg)?;
    let p1: Instance<f64> = generate_lower_bound(LowerBoundVariant::P1, n, horizon).map_err(cfg)?;
    let mut rows = Vec::new();
    for items in [vec![1], vec![1, 2]] {
        let s = Assortment::new(items)?;
        rows.push(KlRow {
            kl: kl_purchase_distributions(&p0, &p1, &s)?,
            kl_upper: kl_bracket(&p0, &p1, &s)?.1,
            limit: 1.0 / (18.0 * horizon as f64),
            assortment: s.items().to_vec(),
        });
    }
    Ok(rows)
}

pub fn lower_bound_report(
    policy: &PolicyConfig,
    n: usize,
    horizon: u64,
    runs: usize,
    master_seed: u64,
) -> Result<LowerBoundReport, HarnessError> {
    let variants = [LowerBoundVariant::P0, LowerBoundVariant::P1]
        .into_iter()
        .map(|v| run_variant(v, policy, n, horizon, runs, master_seed))
        .collect::<Result<_, _>>()?;
    Ok(LowerBoundReport {
        policy_name: policy.label(),
        n,
        horizon,
        kl: kl_rows(n, horizon)?,
        variants,
    })
}
