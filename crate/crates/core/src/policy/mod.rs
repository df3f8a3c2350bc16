//! Assortment policies.
//!
//! A policy sees only the revenue vector (through [`Catalog`]) and the
//! purchase outcomes it is fed; utilities never cross this boundary.

mod epoch;
mod fixed;
mod grs;
mod thompson;
mod trisection;
mod ucb;

pub use epoch::EpochEstimator;
pub use fixed::StaticPolicy;
pub use grs::{GoldenRatioSearch, GOLDEN_RATIO};
pub use thompson::ThompsonSampling;
pub use trisection::{
    adaptive_inner_budget, fixed_inner_budget, Bracket, EpochRecord, InnerBudgetRule, Phase,
    TrisectionPolicy, TrisectionVariant,
};
pub use ucb::MnlUcb;

use crate::mnl::{level_set_of, Assortment, MnlError, PurchaseOutcome};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("horizon of {0} periods exhausted")]
    HorizonExhausted(u64),
    #[error("protocol violation: {0}")]
    Protocol(&'static str),
    #[error("outcome item {item} was not offered")]
    UnofferedItem { item: usize },
    #[error("invalid policy configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] MnlError),
}

/// The revenue side of an instance: everything a policy may know up front.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    revenues: Vec<f64>,
}

impl Catalog {
    pub fn new(revenues: Vec<f64>) -> Self {
        Self { revenues }
    }

    pub fn len(&self) -> usize {
        self.revenues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revenues.is_empty()
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenues
    }

    pub fn revenue(&self, item: usize) -> f64 {
        if item == 0 {
            0.0
        } else {
            self.revenues[item - 1]
        }
    }

    pub fn level_set(&self, theta: f64) -> Assortment {
        level_set_of(&self.revenues, &theta)
    }
}

/// A sequential assortment policy.
///
/// Calls must alternate `next_assortment`, `observe`, `next_assortment`, ...
/// and at most `horizon` assortments are ever issued.
pub trait Policy: Send {
    fn name(&self) -> &'static str;

    fn next_assortment(&mut self) -> Result<Assortment, PolicyError>;

    fn observe(&mut self, outcome: &PurchaseOutcome<f64>) -> Result<(), PolicyError>;

    /// Periods consumed so far.
    fn periods_used(&self) -> u64;
}

/// Shared alternation and horizon bookkeeping.
#[derive(Debug, Clone)]
pub(crate) struct Turns {
    horizon: u64,
    used: u64,
    pending: Option<Assortment>,
}

impl Turns {
    pub(crate) fn new(horizon: u64) -> Self {
        Self {
            horizon,
            used: 0,
            pending: None,
        }
    }

    pub(crate) fn begin(&mut self) -> Result<(), PolicyError> {
        if self.pending.is_some() {
            return Err(PolicyError::Protocol(
                "next_assortment called twice without observe",
            ));
        }
        if self.used >= self.horizon {
            return Err(PolicyError::HorizonExhausted(self.horizon));
        }
        Ok(())
    }

    pub(crate) fn issue(&mut self, assortment: Assortment) -> Assortment {
        self.used += 1;
        self.pending = Some(assortment.clone());
        assortment
    }

    pub(crate) fn settle(
        &mut self,
        outcome: &PurchaseOutcome<f64>,
    ) -> Result<Assortment, PolicyError> {
        let offered = self.pending.take().ok_or(PolicyError::Protocol(
            "observe called without an outstanding assortment",
        ))?;
        if outcome.item != 0 && !offered.contains(outcome.item) {
            self.pending = Some(offered);
            return Err(PolicyError::UnofferedItem { item: outcome.item });
        }
        Ok(offered)
    }

    pub(crate) fn used(&self) -> u64 {
        self.used
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.horizon - self.used
    }

    pub(crate) fn horizon(&self) -> u64 {
        self.horizon
    }
}

fn default_ci_scale() -> f64 {
    crate::concentration::CiScheme::THEORETICAL_SCALE
}

fn default_c1() -> f64 {
    48f64.sqrt()
}

fn default_c2() -> f64 {
    48.0
}

/// Which fixed assortment a `static` policy offers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticChoice {
    /// The true optimum; resolved by the harness from the instance.
    Oracle,
    Empty,
    Full,
    Items(Vec<usize>),
}

/// Policy name plus parameters, as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyConfig {
    Trisection {
        #[serde(default)]
        inner_budget: InnerBudgetRule,
        #[serde(default)]
        exploit_tail: bool,
    },
    AdaptiveTrisection {
        #[serde(default = "default_ci_scale")]
        ci_scale: f64,
        #[serde(default)]
        exploit_tail: bool,
    },
    Ucb {
        #[serde(default = "default_c1")]
        c1: f64,
        #[serde(default = "default_c2")]
        c2: f64,
    },
    Thompson,
    Grs {
        /// Periods per probe; `ceil(sqrt(T))` when absent.
        #[serde(default)]
        explore_per_probe: Option<u64>,
    },
    Static {
        assortment: StaticChoice,
    },
}

impl PolicyConfig {
    pub fn trisection() -> Self {
        Self::Trisection {
            inner_budget: InnerBudgetRule::default(),
            exploit_tail: false,
        }
    }

    pub fn adaptive_trisection(ci_scale: f64) -> Self {
        Self::AdaptiveTrisection {
            ci_scale,
            exploit_tail: false,
        }
    }

    pub fn ucb() -> Self {
        Self::Ucb {
            c1: default_c1(),
            c2: default_c2(),
        }
    }

    pub fn grs() -> Self {
        Self::Grs {
            explore_per_probe: None,
        }
    }

    pub fn static_oracle() -> Self {
        Self::Static {
            assortment: StaticChoice::Oracle,
        }
    }

    /// Parses one of the CLI names with default parameters.
    pub fn from_name(name: &str) -> Result<Self, PolicyError> {
        Ok(match name {
            "trisection" => Self::trisection(),
            "adaptive-trisection" => Self::adaptive_trisection(default_ci_scale()),
            "ucb" => Self::ucb(),
            "thompson" => Self::Thompson,
            "grs" => Self::grs(),
            "static" => Self::static_oracle(),
            other => return Err(PolicyError::Config(format!("unknown policy '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Trisection { .. } => "trisection",
            Self::AdaptiveTrisection { .. } => "adaptive-trisection",
            Self::Ucb { .. } => "ucb",
            Self::Thompson => "thompson",
            Self::Grs { .. } => "grs",
            Self::Static { .. } => "static",
        }
    }

    /// Label that distinguishes parameterisations in reports.
    pub fn label(&self) -> String {
        match self {
            Self::AdaptiveTrisection { ci_scale, .. } if *ci_scale != default_ci_scale() => {
                format!("adaptive-trisection(scale={ci_scale})")
            }
            Self::Static { assortment } => match assortment {
                StaticChoice::Oracle => "static(oracle)".into(),
                StaticChoice::Empty => "static(empty)".into(),
                StaticChoice::Full => "static(full)".into(),
                StaticChoice::Items(items) => format!("static({items:?})"),
            },
            other => other.name().to_string(),
        }
    }

    /// Instantiates the policy. `oracle` supplies the optimal assortment for
    /// `static` with [`StaticChoice::Oracle`]; `seed` feeds any internal
    /// randomness.
    pub fn build(
        &self,
        catalog: Catalog,
        horizon: u64,
        seed: u64,
        oracle: Option<&Assortment>,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        if horizon == 0 {
            return Err(PolicyError::Config("horizon must be >= 1".into()));
        }
        if catalog.is_empty() {
            return Err(PolicyError::Config("catalog has no items".into()));
        }
        Ok(match self {
            Self::Trisection {
                inner_budget,
                exploit_tail,
            } => Box::new(
                TrisectionPolicy::new(catalog, horizon, TrisectionVariant::Fixed(*inner_budget))?
                    .with_exploit_tail(*exploit_tail),
            ),
            Self::AdaptiveTrisection {
                ci_scale,
                exploit_tail,
            } => Box::new(
                TrisectionPolicy::new(
                    catalog,
                    horizon,
                    TrisectionVariant::Adaptive { scale: *ci_scale },
                )?
                .with_exploit_tail(*exploit_tail),
            ),
            Self::Ucb { c1, c2 } => Box::new(MnlUcb::new(catalog, horizon, *c1, *c2)?),
            Self::Thompson => Box::new(ThompsonSampling::new(catalog, horizon, seed)),
            Self::Grs { explore_per_probe } => Box::new(GoldenRatioSearch::new(
                catalog,
                horizon,
                *explore_per_probe,
            )?),
            Self::Static { assortment } => {
                let n = catalog.len();
                let set = match assortment {
                    StaticChoice::Oracle => oracle.cloned().ok_or_else(|| {
                        PolicyError::Config(
                            "static oracle policy needs the optimal assortment".into(),
                        )
                    })?,
                    StaticChoice::Empty => Assortment::empty(),
                    StaticChoice::Full => Assortment::full(n),
                    StaticChoice::Items(items) => Assortment::new(items.clone())?,
                };
                if set.items().last().is_some_and(|&i| i > n) {
                    return Err(PolicyError::Config(format!(
                        "static assortment exceeds {n} items"
                    )));
                }
                Box::new(StaticPolicy::new(set, horizon))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in [
            "trisection",
            "adaptive-trisection",
            "ucb",
            "thompson",
            "grs",
            "static",
        ] {
            assert_eq!(PolicyConfig::from_name(name).unwrap().name(), name);
        }
        assert!(PolicyConfig::from_name("epsilon-greedy").is_err());
    }

    #[test]
    fn config_json_defaults() {
        let c: PolicyConfig = serde_json::from_str(r#"{"name":"adaptive-trisection"}"#).unwrap();
        assert_eq!(c, PolicyConfig::adaptive_trisection(2.0));
        let c: PolicyConfig = serde_json::from_str(r#"{"name":"ucb"}"#).unwrap();
        assert_eq!(c, PolicyConfig::ucb());
        let c: PolicyConfig =
            serde_json::from_str(r#"{"name":"static","assortment":{"items":[2,1]}}"#).unwrap();
        assert_eq!(
            c,
            PolicyConfig::Static {
                assortment: StaticChoice::Items(vec![2, 1])
            }
        );
        assert!(serde_json::from_str::<PolicyConfig>(r#"{"name":"ucb","c3":1}"#).is_err());
    }

    #[test]
    fn build_rejects_bad_inputs() {
        let cat = Catalog::new(vec![0.5, 0.4]);
        assert!(PolicyConfig::trisection()
            .build(cat.clone(), 0, 0, None)
            .is_err());
        assert!(PolicyConfig::static_oracle()
            .build(cat.clone(), 10, 0, None)
            .is_err());
        let bad = PolicyConfig::Static {
            assortment: StaticChoice::Items(vec![3]),
        };
        assert!(bad.build(cat.clone(), 10, 0, None).is_err());
        assert!(PolicyConfig::trisection()
            .build(Catalog::new(vec![]), 10, 0, None)
            .is_err());
    }

    #[test]
    fn turns_enforce_alternation_and_horizon() {
        let mut turns = Turns::new(1);
        turns.begin().unwrap();
        let s = turns.issue(Assortment::full(2));
        assert_eq!(
            turns.begin(),
            Err(PolicyError::Protocol(
                "next_assortment called twice without observe"
            ))
        );
        assert!(matches!(
            turns.settle(&PurchaseOutcome {
                item: 3,
                revenue: 0.1
            }),
            Err(PolicyError::UnofferedItem { item: 3 })
        ));
        assert_eq!(turns.settle(&PurchaseOutcome::no_purchase()).unwrap(), s);
        assert!(turns.settle(&PurchaseOutcome::no_purchase()).is_err());
        assert_eq!(turns.begin(), Err(PolicyError::HorizonExhausted(1)));
        assert_eq!(turns.remaining(), 0);
    }
}
