//! Instance generators: the uniform synthetic family used for the regret
//! tables and the two-point lower-bound pair.

use crate::mnl::{Assortment, Instance, MnlError};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("lower-bound instances need N >= 2, got {0}")]
    TooFewItems(usize),
    #[error("horizon must be >= 1")]
    ZeroHorizon,
    #[error("sqrt({0}) is not representable in this scalar type")]
    InexactRoot(u64),
    #[error(transparent)]
    Model(#[from] MnlError),
}

/// Ranges of the synthetic family. Utility bounds are multiplied by `1/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub revenue_low: f64,
    pub revenue_high: f64,
    pub utility_low_scale: f64,
    pub utility_high_scale: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            revenue_low: 0.4,
            revenue_high: 0.5,
            utility_low_scale: 10.0,
            utility_high_scale: 20.0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let r_ok = 0.0 <= self.revenue_low
            && self.revenue_low <= self.revenue_high
            && self.revenue_high <= 1.0;
        if !r_ok {
            return Err(GeneratorError::Spec(format!(
                "revenue range [{}, {}] must satisfy 0 <= low <= high <= 1",
                self.revenue_low, self.revenue_high
            )));
        }
        let v_ok = 0.0 <= self.utility_low_scale
            && self.utility_low_scale <= self.utility_high_scale
            && self.utility_high_scale.is_finite();
        if !v_ok {
            return Err(GeneratorError::Spec(format!(
                "utility scale [{}, {}] must satisfy 0 <= low <= high < inf",
                self.utility_low_scale, self.utility_high_scale
            )));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, low: f64, high: f64) -> f64 {
    low + (high - low) * rng.random::<f64>()
}

/// `r_i ~ U[revenue_low, revenue_high]`, `v_i ~ U[low/N, high/N]`, i.i.d.
pub fn generate_synthetic(
    n: usize,
    spec: &GeneratorSpec,
    seed: u64,
) -> Result<Instance<f64>, GeneratorError> {
    spec.validate()?;
    if n == 0 {
        return Err(GeneratorError::Spec("N must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let mut revenues = Vec::with_capacity(n);
    let mut utilities = Vec::with_capacity(n);
    for _ in 0..n {
        revenues.push(uniform(&mut rng, spec.revenue_low, spec.revenue_high));
        utilities.push(uniform(
            &mut rng,
            spec.utility_low_scale / nf,
            spec.utility_high_scale / nf,
        ));
    }
    Ok(Instance::new(revenues, utilities)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerBoundVariant {
    P0,
    P1,
}

/// Revenues `(1, 1/2, 0, ..., 0)`; `v_1 = 1 -/+ 1/(4 sqrt(T))` for P0/P1,
/// `v_2 = 1`, the rest 0.
pub fn generate_lower_bound<S: Scalar>(
    variant: LowerBoundVariant,
    n: usize,
    horizon: u64,
) -> Result<Instance<S>, GeneratorError> {
    if n < 2 {
        return Err(GeneratorError::TooFewItems(n));
    }
    if horizon == 0 {
        return Err(GeneratorError::ZeroHorizon);
    }
    let root = S::sqrt_of(horizon).ok_or(GeneratorError::InexactRoot(horizon))?;
    let four = S::from_u8(4).expect("small integer");
    let shift = S::one() / (four * root);
    let v1 = match variant {
        LowerBoundVariant::P0 => S::one() - shift,
        LowerBoundVariant::P1 => S::one() + shift,
    };
    let two = S::from_u8(2).expect("small integer");
    let mut revenues = vec![S::zero(); n];
    let mut utilities = vec![S::zero(); n];
    revenues[0] = S::one();
    revenues[1] = S::one() / two;
    utilities[0] = v1;
    utilities[1] = S::one();
    Ok(Instance::new(revenues, utilities)?)
}

/// Two-point tester: `0` if item 1 is offered without item 2 in at least
/// half of the periods, `1` otherwise.
pub fn lower_bound_tester(assortments: &[Assortment]) -> u8 {
    let alone = assortments
        .iter()
        .filter(|s| s.contains(1) && !s.contains(2))
        .count();
    if assortments.is_empty() || 2 * alone < assortments.len() {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnl::{kl_purchase_distributions, oracle_optimal, purchase_probabilities};
    use crate::scalar::{exact, Exact};

    #[test]
    fn synthetic_ranges_and_determinism() {
        let spec = GeneratorSpec::default();
        let n = 250;
        let a = generate_synthetic(n, &spec, 7).unwrap();
        for (&r, &v) in a.revenues().iter().zip(a.utilities()) {
            assert!((0.4..=0.5).contains(&r));
            assert!((10.0 / n as f64..=20.0 / n as f64).contains(&v));
        }
        assert_eq!(a, generate_synthetic(n, &spec, 7).unwrap());
        assert_ne!(a, generate_synthetic(n, &spec, 8).unwrap());
    }

    #[test]
    fn synthetic_law_of_large_numbers() {
        let inst = generate_synthetic(1000, &GeneratorSpec::default(), 1).unwrap();
        let total: f64 = inst.utilities().iter().sum();
        let mean_r: f64 = inst.revenues().iter().sum::<f64>() / 1000.0;
        assert!((total - 15.0).abs() < 0.05 * 15.0, "{total}");
        assert!((mean_r - 0.45).abs() < 0.05 * 0.45, "{mean_r}");
    }

    #[test]
    fn spec_validation() {
        let bad = GeneratorSpec {
            revenue_low: 0.6,
            revenue_high: 0.5,
            ..Default::default()
        };
        assert!(generate_synthetic(10, &bad, 0).is_err());
        let bad = GeneratorSpec {
            revenue_high: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = GeneratorSpec {
            utility_low_scale: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(generate_synthetic(0, &GeneratorSpec::default(), 0).is_err());
    }

    #[test]
    fn lower_bound_construction() {
        let p1: Instance<f64> = generate_lower_bound(LowerBoundVariant::P1, 5, 100).unwrap();
        assert_eq!(p1.utilities()[0], 1.025);
        assert_eq!(p1.revenues(), &[1.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(p1.utilities()[2..], [0.0, 0.0, 0.0]);
        assert_eq!(
            generate_lower_bound::<f64>(LowerBoundVariant::P0, 1, 100),
            Err(GeneratorError::TooFewItems(1))
        );
        assert_eq!(
            generate_lower_bound::<Exact>(LowerBoundVariant::P0, 3, 10),
            Err(GeneratorError::InexactRoot(10))
        );
        let exact_p0: Instance<Exact> =
            generate_lower_bound(LowerBoundVariant::P0, 3, 100).unwrap();
        assert_eq!(exact_p0.utilities()[0], exact(39, 40));
    }

    #[test]
    fn p0_pair_purchase_probability() {
        // T = 100, S = {1, 2}: Pr[item 2] = 1 / (1 + (1 - 1/40) + 1) = 40/119
        let p0: Instance<Exact> = generate_lower_bound(LowerBoundVariant::P0, 4, 100).unwrap();
        let probs = purchase_probabilities(&p0, &Assortment::new(vec![1, 2]).unwrap()).unwrap();
        assert_eq!(probs[2], (2, exact(40, 119)));
        assert!((40.0_f64 / 119.0 - 0.336_134).abs() < 1e-6);
    }

    #[test]
    fn optimal_assortments_of_the_pair() {
        // {1} beats {1,2} exactly when v_1 > 1.
        let p1: Instance<Exact> = generate_lower_bound(LowerBoundVariant::P1, 4, 100).unwrap();
        assert_eq!(oracle_optimal(&p1).0.items(), &[1]);
        let p0: Instance<Exact> = generate_lower_bound(LowerBoundVariant::P0, 4, 100).unwrap();
        assert_eq!(oracle_optimal(&p0).0.items(), &[1, 2]);
    }

    #[test]
    fn kl_zero_without_item_one() {
        let p0: Instance<f64> = generate_lower_bound(LowerBoundVariant::P0, 4, 100).unwrap();
        let p1: Instance<f64> = generate_lower_bound(LowerBoundVariant::P1, 4, 100).unwrap();
        for s in [vec![], vec![2], vec![2, 3, 4]] {
            let s = Assortment::new(s).unwrap();
            assert_eq!(kl_purchase_distributions(&p0, &p1, &s).unwrap(), 0.0);
        }
    }

    #[test]
    fn tester_on_constant_sequences() {
        let one = Assortment::new(vec![1]).unwrap();
        let pair = Assortment::new(vec![1, 2]).unwrap();
        assert_eq!(lower_bound_tester(&vec![one.clone(); 10]), 0);
        assert_eq!(lower_bound_tester(&vec![pair.clone(); 10]), 1);
        let mut half = vec![one; 5];
        half.extend(vec![pair; 5]);
        assert_eq!(lower_bound_tester(&half), 0);
    }
}
