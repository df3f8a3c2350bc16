//! Dynamic assortment planning under the uncapacitated multinomial-logit
//! choice model.
//!
//! * [`mnl`]: instances, purchase sampling, expected revenue, level sets and
//!   the revenue potential function with its exact profile and oracles;
//! * [`concentration`]: fixed- and adaptive-level confidence intervals and
//!   Monte Carlo checks of the inequalities behind them;
//! * [`policy`]: trisection, adaptive trisection, UCB, Thompson sampling,
//!   golden-ratio search and a static reference policy;
//! * [`harness`]: seeded episodes, replication batches and regret scaling;
//! * [`generate`] and [`config`]: instance generators and run descriptions.
//!
//! The model code is generic over [`Scalar`]; the aliases below fix the
//! common instantiations.

pub mod concentration;
pub mod config;
pub mod generate;
pub mod harness;
pub mod mnl;
pub mod policy;
pub mod scalar;
pub mod seeds;

pub use mnl::{Assortment, PurchaseOutcome};
pub use scalar::{Exact, Scalar};

pub type Instance = mnl::Instance<f64>;
pub type Instance32 = mnl::Instance<f32>;
pub type ExactInstance = mnl::Instance<Exact>;

pub type PotentialProfile = mnl::PotentialProfile<f64>;
pub type ExactPotentialProfile = mnl::PotentialProfile<Exact>;

pub type ConfidenceInterval = concentration::ConfidenceInterval<f64>;
