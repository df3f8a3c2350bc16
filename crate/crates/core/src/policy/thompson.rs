//! Epoch-based Thompson sampling for the uncapacitated MNL model.
//!
//! At the start of each epoch every item's utility is resampled: with `n_i`
//! closed epochs and `V_i` purchases, draw `B ~ Beta(n_i, V_i + 1)` and use
//! `1/B - 1`; items never offered get utility 1. The epoch then offers the
//! best level set of the sampled instance.

use super::{Catalog, EpochEstimator, Policy, PolicyError, Turns};
use crate::mnl::{oracle_optimal, Assortment, Instance, PurchaseOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

#[derive(Debug, Clone)]
pub struct ThompsonSampling {
    catalog: Catalog,
    turns: Turns,
    estimator: EpochEstimator,
    rng: ChaCha8Rng,
}

impl ThompsonSampling {
    pub fn new(catalog: Catalog, horizon: u64, seed: u64) -> Self {
        let n = catalog.len();
        Self {
            catalog,
            turns: Turns::new(horizon),
            estimator: EpochEstimator::new(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One posterior draw of item `item`'s utility.
    pub fn sample_utility(&mut self, item: usize) -> f64 {
        let n = self.estimator.epochs_offered(item);
        if n == 0 {
            return 1.0;
        }
        let v = self.estimator.total_purchases(item);
        let beta = Beta::new(n as f64, v as f64 + 1.0).expect("positive shape parameters");
        let b: f64 = beta.sample(&mut self.rng);
        1.0 / b.max(f64::MIN_POSITIVE) - 1.0
    }

    pub fn estimator(&self) -> &EpochEstimator {
        &self.estimator
    }

    fn plan(&mut self) -> Result<Assortment, PolicyError> {
        let utilities: Vec<f64> = (1..=self.catalog.len())
            .map(|i| self.sample_utility(i).min(f64::MAX))
            .collect();
        let sampled = Instance::new(self.catalog.revenues().to_vec(), utilities)?;
        Ok(oracle_optimal(&sampled).0)
    }
}

impl Policy for ThompsonSampling {
    fn name(&self) -> &'static str {
        "thompson"
    }

    fn next_assortment(&mut self) -> Result<Assortment, PolicyError> {
        self.turns.begin()?;
        if !self.estimator.is_open() {
            let plan = self.plan()?;
            self.estimator.open(plan);
        }
        let set = self.estimator.current().expect("epoch open").clone();
        Ok(self.turns.issue(set))
    }

    fn observe(&mut self, outcome: &PurchaseOutcome<f64>) -> Result<(), PolicyError> {
        self.turns.settle(outcome)?;
        self.estimator.record(outcome);
        Ok(())
    }

    fn periods_used(&self) -> u64 {
        self.turns.used()
    }
}
