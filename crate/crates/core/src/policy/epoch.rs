//! Epoch bookkeeping shared by the utility-estimating baselines.
//!
//! An epoch offers one assortment repeatedly until a customer walks away.
//! The number of purchases of item `i` within an epoch is geometric with
//! mean `v_i`, so per-epoch counts are unbiased utility estimates.

use crate::mnl::{Assortment, PurchaseOutcome};

#[derive(Debug, Clone)]
pub struct EpochEstimator {
    /// Epochs in which each item was offered (`T_i`).
    epochs_offered: Vec<u64>,
    /// Purchases of each item summed over those epochs.
    purchases: Vec<u64>,
    in_epoch: Vec<u64>,
    current: Option<Assortment>,
    closed_epochs: u64,
}

impl EpochEstimator {
    pub fn new(n: usize) -> Self {
        Self {
            epochs_offered: vec![0; n],
            purchases: vec![0; n],
            in_epoch: vec![0; n],
            current: None,
            closed_epochs: 0,
        }
    }

    pub fn is_open(&self) -> bool {
        self.current.is_some()
    }

    pub fn current(&self) -> Option<&Assortment> {
        self.current.as_ref()
    }

    pub fn open(&mut self, assortment: Assortment) {
        debug_assert!(self.current.is_none());
        self.current = Some(assortment);
    }

    /// Records one outcome; a no-purchase closes the epoch.
    pub fn record(&mut self, outcome: &PurchaseOutcome<f64>) {
        if outcome.is_purchase() {
            self.in_epoch[outcome.item - 1] += 1;
            return;
        }
        if let Some(set) = self.current.take() {
            for &i in set.items() {
                self.epochs_offered[i - 1] += 1;
                self.purchases[i - 1] += std::mem::take(&mut self.in_epoch[i - 1]);
            }
            self.closed_epochs += 1;
        }
    }

    pub fn closed_epochs(&self) -> u64 {
        self.closed_epochs
    }

    /// `T_i` for 1-based item `item`.
    pub fn epochs_offered(&self, item: usize) -> u64 {
        self.epochs_offered[item - 1]
    }

    pub fn total_purchases(&self, item: usize) -> u64 {
        self.purchases[item - 1]
    }

    /// Mean purchases per epoch, or `None` if never offered.
    pub fn mean_utility(&self, item: usize) -> Option<f64> {
        let n = self.epochs_offered(item);
        (n > 0).then(|| self.purchases[item - 1] as f64 / n as f64)
    }
}
