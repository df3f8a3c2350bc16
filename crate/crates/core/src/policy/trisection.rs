//! Trisection search over revenue thresholds.
//!
//! Each epoch keeps a bracket `[a, b]` believed to contain the fixed point
//! `theta*` of the potential function. Every inner iteration probes the level
//! set at the right trisection point `y` (while its confidence interval still
//! straddles `y`) and then exploits the level set at `a`. At the end of the
//! epoch, `u(y) < y` moves `b` to `y`; otherwise `a` moves to `x`.

use super::{Catalog, Policy, PolicyError, Turns};
use crate::concentration::{CiScheme, ConfidenceInterval};
use crate::mnl::{Assortment, PurchaseOutcome};
use crate::scalar::{ratio, Scalar};
use serde::{Deserialize, Serialize};

/// `[a, b]` with its trisection points. Generic so the shrink arithmetic can
/// be checked exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket<S> {
    pub a: S,
    pub b: S,
}

impl<S: Scalar> Bracket<S> {
    pub fn unit() -> Self {
        Self {
            a: S::zero(),
            b: S::one(),
        }
    }

    /// `(2a + b) / 3`
    pub fn x(&self) -> S {
        ratio::<S>(2, 3) * self.a.clone() + ratio::<S>(1, 3) * self.b.clone()
    }

    /// `(a + 2b) / 3`
    pub fn y(&self) -> S {
        ratio::<S>(1, 3) * self.a.clone() + ratio::<S>(2, 3) * self.b.clone()
    }

    pub fn width(&self) -> S {
        self.b.clone() - self.a.clone()
    }

    /// `b <- y`
    pub fn keep_left(&mut self) {
        self.b = self.y();
    }

    /// `a <- x`
    pub fn keep_right(&mut self) {
        self.a = self.x();
    }

    pub fn contains(&self, theta: &S) -> bool {
        self.a <= *theta && *theta <= self.b
    }
}

/// How many inner iterations the fixed-level variant spends per epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerBudgetRule {
    /// `16 ceil(eps^-2 ln(T^2))`
    #[default]
    LogTSquared,
    /// `16 ceil(eps^-2 ln T)`
    LogT,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrisectionVariant {
    /// Hoeffding intervals at level `1/T^2`.
    Fixed(InnerBudgetRule),
    /// Adaptive-level intervals at base level `1/T` with the given radius scale.
    Adaptive { scale: f64 },
}

pub fn fixed_inner_budget(eps: f64, horizon: u64, rule: InnerBudgetRule) -> u64 {
    let t = horizon as f64;
    let log = match rule {
        InnerBudgetRule::LogTSquared => (t * t).ln(),
        InnerBudgetRule::LogT => t.ln(),
    };
    16 * ((log / (eps * eps)).ceil().max(1.0) as u64)
}

pub fn adaptive_inner_budget(eps: f64, horizon: u64) -> u64 {
    let t = horizon as f64;
    let inner = ((8.0 * t * eps * eps).ln() / (eps * eps)).ceil();
    8 * (inner.max(1.0) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    ExploreY,
    ExploitA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Offer {
    Explore,
    Exploit,
}

/// One epoch as it started, and how it ended (if it did).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub a: f64,
    pub b: f64,
    pub n_inner: u64,
    pub explorations: u64,
    /// `Some(true)` if the epoch ended by moving `b` to `y`.
    pub moved_right_end: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct TrisectionPolicy {
    catalog: Catalog,
    variant: TrisectionVariant,
    scheme: CiScheme,
    turns: Turns,
    bracket: Bracket<f64>,
    x: f64,
    y: f64,
    explore_set: Assortment,
    exploit_set: Assortment,
    epoch: u64,
    inner_t: u64,
    n_inner: u64,
    explore_sum: f64,
    ci: ConfidenceInterval<f64>,
    phase: Phase,
    last_offer: Option<Offer>,
    exploit_tail: bool,
    in_tail: bool,
    history: Vec<EpochRecord>,
}

impl TrisectionPolicy {
    pub fn new(
        catalog: Catalog,
        horizon: u64,
        variant: TrisectionVariant,
    ) -> Result<Self, PolicyError> {
        let scheme = match variant {
            TrisectionVariant::Fixed(_) => CiScheme::fixed_for_horizon(horizon),
            TrisectionVariant::Adaptive { scale } => CiScheme::adaptive_for_horizon(horizon, scale),
        };
        scheme
            .validate()
            .map_err(|e| PolicyError::Config(e.to_string()))?;
        let mut policy = Self {
            catalog,
            variant,
            scheme,
            turns: Turns::new(horizon),
            bracket: Bracket::unit(),
            x: 0.0,
            y: 0.0,
            explore_set: Assortment::empty(),
            exploit_set: Assortment::empty(),
            epoch: 0,
            inner_t: 0,
            n_inner: 0,
            explore_sum: 0.0,
            ci: ConfidenceInterval::unit(),
            phase: Phase::ExploreY,
            last_offer: None,
            exploit_tail: false,
            in_tail: false,
            history: Vec::new(),
        };
        policy.start_epoch();
        Ok(policy)
    }

    /// When set, an epoch whose inner budget exceeds the remaining periods
    /// is replaced by pure exploitation of `a`.
    pub fn with_exploit_tail(mut self, on: bool) -> Self {
        self.exploit_tail = on;
        self.check_tail();
        self
    }

    fn start_epoch(&mut self) {
        self.x = self.bracket.x();
        self.y = self.bracket.y();
        let eps = self.y - self.x;
        self.n_inner = match self.variant {
            TrisectionVariant::Fixed(rule) => fixed_inner_budget(eps, self.turns.horizon(), rule),
            TrisectionVariant::Adaptive { .. } => adaptive_inner_budget(eps, self.turns.horizon()),
        };
        self.inner_t = 0;
        self.explore_sum = 0.0;
        self.ci = ConfidenceInterval::unit();
        self.phase = Phase::ExploreY;
        self.explore_set = self.catalog.level_set(self.y);
        self.exploit_set = self.catalog.level_set(self.bracket.a);
        self.history.push(EpochRecord {
            a: self.bracket.a,
            b: self.bracket.b,
            n_inner: self.n_inner,
            explorations: 0,
            moved_right_end: None,
        });
        self.check_tail();
    }

    fn check_tail(&mut self) {
        if self.exploit_tail && self.n_inner > self.turns.remaining() {
            self.in_tail = true;
        }
    }

    fn end_epoch(&mut self) {
        let move_b = self.ci.upper < self.y;
        if let Some(rec) = self.history.last_mut() {
            rec.moved_right_end = Some(move_b);
        }
        if move_b {
            self.bracket.keep_left();
        } else {
            self.bracket.keep_right();
        }
        self.epoch += 1;
        self.start_epoch();
    }

    fn y_undecided(&self) -> bool {
        self.ci.lower <= self.y && self.y <= self.ci.upper
    }

    pub fn bracket(&self) -> &Bracket<f64> {
        &self.bracket
    }

    pub fn trisection_points(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn inner_iteration(&self) -> u64 {
        self.inner_t
    }

    pub fn inner_budget(&self) -> u64 {
        self.n_inner
    }

    pub fn confidence_interval(&self) -> &ConfidenceInterval<f64> {
        &self.ci
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn history(&self) -> &[EpochRecord] {
        &self.history
    }
}

impl Policy for TrisectionPolicy {
    fn name(&self) -> &'static str {
        match self.variant {
            TrisectionVariant::Fixed(_) => "trisection",
            TrisectionVariant::Adaptive { .. } => "adaptive-trisection",
        }
    }

    fn next_assortment(&mut self) -> Result<Assortment, PolicyError> {
        self.turns.begin()?;
        let offer = if !self.in_tail && self.phase == Phase::ExploreY && self.y_undecided() {
            Offer::Explore
        } else {
            // A decided y is skipped; the inner iteration is just the exploit step.
            self.phase = Phase::ExploitA;
            Offer::Exploit
        };
        self.last_offer = Some(offer);
        let set = match offer {
            Offer::Explore => self.explore_set.clone(),
            Offer::Exploit => self.exploit_set.clone(),
        };
        Ok(self.turns.issue(set))
    }

    fn observe(&mut self, outcome: &PurchaseOutcome<f64>) -> Result<(), PolicyError> {
        self.turns.settle(outcome)?;
        let offer = self
            .last_offer
            .take()
            .ok_or(PolicyError::Protocol("no outstanding offer"))?;
        if self.in_tail {
            return Ok(());
        }
        match offer {
            Offer::Explore => {
                self.explore_sum += self.catalog.revenue(outcome.item);
                let count = self.ci.count + 1;
                self.ci = self
                    .scheme
                    .interval(self.explore_sum, count)
                    .map_err(|e| PolicyError::Config(e.to_string()))?;
                if let Some(rec) = self.history.last_mut() {
                    rec.explorations = count;
                }
                self.phase = Phase::ExploitA;
            }
            Offer::Exploit => {
                self.inner_t += 1;
                self.phase = Phase::ExploreY;
                if self.inner_t >= self.n_inner {
                    self.end_epoch();
                }
            }
        }
        Ok(())
    }

    fn periods_used(&self) -> u64 {
        self.turns.used()
    }
}
