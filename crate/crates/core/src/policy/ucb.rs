//! Epoch-based optimistic MNL policy, run without a capacity constraint.
//!
//! Per item `i` with `T_i` closed epochs and mean per-epoch purchases `v̄_i`:
//!
//! ```text
//! v_i^UCB = v̄_i + c1 sqrt(v̄_i ln(sqrt(N) l + 1) / T_i) + c2 ln(sqrt(N) l + 1) / T_i
//! ```
//!
//! where `l` is the index of the epoch being planned. Items never offered are
//! always included. The rest of the assortment is the best level set of the
//! optimistic instance.

use super::{Catalog, EpochEstimator, Policy, PolicyError, Turns};
use crate::mnl::{oracle_optimal, Assortment, Instance, PurchaseOutcome};

#[derive(Debug, Clone)]
pub struct MnlUcb {
    catalog: Catalog,
    turns: Turns,
    estimator: EpochEstimator,
    c1: f64,
    c2: f64,
}

impl MnlUcb {
    pub fn new(catalog: Catalog, horizon: u64, c1: f64, c2: f64) -> Result<Self, PolicyError> {
        if !(c1 >= 0.0 && c2 >= 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(PolicyError::Config(format!(
                "ucb constants must be finite and >= 0 (c1={c1}, c2={c2})"
            )));
        }
        let n = catalog.len();
        Ok(Self {
            catalog,
            turns: Turns::new(horizon),
            estimator: EpochEstimator::new(n),
            c1,
            c2,
        })
    }

    /// Optimistic utility for `item` while planning epoch `epoch` (1-based);
    /// `None` means the item has never been offered (treated as +inf).
    pub fn optimistic_utility(&self, item: usize, epoch: u64) -> Option<f64> {
        let mean = self.estimator.mean_utility(item)?;
        let t_i = self.estimator.epochs_offered(item) as f64;
        let log = ((self.catalog.len() as f64).sqrt() * epoch as f64 + 1.0).ln();
        Some(mean + self.c1 * (mean * log / t_i).sqrt() + self.c2 * log / t_i)
    }

    pub fn estimator(&self) -> &EpochEstimator {
        &self.estimator
    }

    fn plan(&self) -> Result<Assortment, PolicyError> {
        let epoch = self.estimator.closed_epochs() + 1;
        let n = self.catalog.len();
        let mut unexplored = Vec::new();
        let mut utilities = Vec::with_capacity(n);
        for item in 1..=n {
            match self.optimistic_utility(item, epoch) {
                Some(v) => utilities.push(v),
                None => {
                    unexplored.push(item);
                    utilities.push(0.0);
                }
            }
        }
        let optimistic = Instance::new(self.catalog.revenues().to_vec(), utilities)?;
        let (best, _) = oracle_optimal(&optimistic);
        let mut items: Vec<usize> = best.items().to_vec();
        items.extend(unexplored);
        Ok(Assortment::new(items)?)
    }
}

impl Policy for MnlUcb {
    fn name(&self) -> &'static str {
        "ucb"
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
