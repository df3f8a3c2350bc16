use super::{Policy, PolicyError, Turns};
use crate::mnl::{Assortment, PurchaseOutcome};

/// Offers the same assortment every period.
#[derive(Debug, Clone)]
pub struct StaticPolicy {
    assortment: Assortment,
    turns: Turns,
}

impl StaticPolicy {
    pub fn new(assortment: Assortment, horizon: u64) -> Self {
        Self {
            assortment,
            turns: Turns::new(horizon),
        }
    }
}

impl Policy for StaticPolicy {
    fn name(&self) -> &'static str {
        "static"
    }

    fn next_assortment(&mut self) -> Result<Assortment, PolicyError> {
        self.turns.begin()?;
        Ok(self.turns.issue(self.assortment.clone()))
    }

    fn observe(&mut self, outcome: &PurchaseOutcome<f64>) -> Result<(), PolicyError> {
        self.turns.settle(outcome).map(|_| ())
    }

    fn periods_used(&self) -> u64 {
        self.turns.used()
    }
}
