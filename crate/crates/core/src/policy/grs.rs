//! Golden-section search on the potential function followed by exploitation.
//!
//! Each probe threshold is explored for a fixed number of periods (by default
//! `ceil(sqrt(T))`); the bracket endpoint on the side of the worse probe is
//! dropped. Once the bracket is narrower than `1/sqrt(T)` the best probe seen
//! so far is offered for the rest of the horizon.

use super::{Catalog, Policy, PolicyError, Turns};
use crate::mnl::{Assortment, PurchaseOutcome};

/// `(sqrt(5) - 1) / 2`
pub const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy)]
struct Probe {
    theta: f64,
    sum: f64,
    count: u64,
}

impl Probe {
    fn at(theta: f64) -> Self {
        Self {
            theta,
            sum: 0.0,
            count: 0,
        }
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    /// Exploring the left (0) or right (1) probe.
    Explore(usize),
    Exploit,
}

#[derive(Debug, Clone)]
pub struct GoldenRatioSearch {
    catalog: Catalog,
    turns: Turns,
    per_probe: u64,
    min_width: f64,
    lo: f64,
    hi: f64,
    probes: [Probe; 2],
    stage: Stage,
    best: Option<(f64, f64)>,
    exploit_set: Option<Assortment>,
}

impl GoldenRatioSearch {
    pub fn new(
        catalog: Catalog,
        horizon: u64,
        per_probe: Option<u64>,
    ) -> Result<Self, PolicyError> {
        let root = (horizon as f64).sqrt();
        let per_probe = per_probe.unwrap_or(root.ceil() as u64);
        if per_probe == 0 {
            return Err(PolicyError::Config(
                "grs needs at least one exploration per probe".into(),
            ));
        }
        let (lo, hi) = (0.0, 1.0);
        Ok(Self {
            catalog,
            turns: Turns::new(horizon),
            per_probe,
            min_width: 1.0 / root,
            lo,
            hi,
            probes: [
                Probe::at(hi - GOLDEN_RATIO * (hi - lo)),
                Probe::at(lo + GOLDEN_RATIO * (hi - lo)),
            ],
            stage: Stage::Explore(0),
            best: None,
            exploit_set: None,
        })
    }

    pub fn probe_thresholds(&self) -> (f64, f64) {
        (self.probes[0].theta, self.probes[1].theta)
    }

    pub fn explorations_per_probe(&self) -> u64 {
        self.per_probe
    }

    pub fn bracket(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn is_exploiting(&self) -> bool {
        self.stage == Stage::Exploit
    }

    /// The threshold exploited after the search, once chosen.
    pub fn incumbent(&self) -> Option<f64> {
        self.best.map(|(theta, _)| theta)
    }

    fn note_best(&mut self, probe: Probe) {
        let better = match self.best {
            None => true,
            Some((_, mean)) => probe.mean() > mean,
        };
        if better {
            self.best = Some((probe.theta, probe.mean()));
        }
    }

    fn next_stage(&mut self) {
        let pending = self.probes.iter().position(|p| p.count < self.per_probe);
        if let Some(k) = pending {
            self.stage = Stage::Explore(k);
            return;
        }
        let [left, right] = self.probes;
        self.note_best(left);
        self.note_best(right);
        if left.mean() >= right.mean() {
            self.hi = right.theta;
            self.probes = [
                Probe::at(self.hi - GOLDEN_RATIO * (self.hi - self.lo)),
                left,
            ];
        } else {
            self.lo = left.theta;
            self.probes = [
                right,
                Probe::at(self.lo + GOLDEN_RATIO * (self.hi - self.lo)),
            ];
        }
        if self.hi - self.lo < self.min_width {
            let theta = self.best.expect("both probes scored").0;
            self.exploit_set = Some(self.catalog.level_set(theta));
            self.stage = Stage::Exploit;
        } else {
            self.next_stage();
        }
    }
}

impl Policy for GoldenRatioSearch {
    fn name(&self) -> &'static str {
        "grs"
    }

    fn next_assortment(&mut self) -> Result<Assortment, PolicyError> {
        self.turns.begin()?;
        let set = match self.stage {
            Stage::Explore(k) => self.catalog.level_set(self.probes[k].theta),
            Stage::Exploit => self.exploit_set.clone().expect("set when exploiting"),
        };
        Ok(self.turns.issue(set))
    }

    fn observe(&mut self, outcome: &PurchaseOutcome<f64>) -> Result<(), PolicyError> {
        self.turns.settle(outcome)?;
        if let Stage::Explore(k) = self.stage {
            let probe = &mut self.probes[k];
            probe.sum += self.catalog.revenue(outcome.item);
            probe.count += 1;
            if probe.count >= self.per_probe {
                self.next_stage();
            }
        }
        Ok(())
    }

    fn periods_used(&self) -> u64 {
        self.turns.used()
    }
}
