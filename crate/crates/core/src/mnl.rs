//! Uncapacitated multinomial-logit (MNL) choice model.
//!
//! Items are numbered `1..=N`; item `0` is the no-purchase option, whose
//! utility is fixed at 1 and whose revenue is 0. Everything here is generic
//! over [`Scalar`] so the same code path runs in `f64` and in exact rationals.

use crate::scalar::Scalar;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Largest catalogue the exhaustive subset oracle accepts.
pub const BRUTE_FORCE_MAX_ITEMS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MnlError {
    #[error("instance needs at least one item")]
    Empty,
    #[error("revenues has {revenues} entries but utilities has {utilities}")]
    LengthMismatch { revenues: usize, utilities: usize },
    #[error("revenue of item {item} is {value}, expected a finite value in [0, 1]")]
    InvalidRevenue { item: usize, value: f64 },
    #[error("utility of item {item} is {value}, expected a finite value >= 0")]
    InvalidUtility { item: usize, value: f64 },
    #[error("invalid assortment: {0}")]
    InvalidAssortment(String),
    #[error("revenue threshold must be >= 0, got {0}")]
    NegativeThreshold(f64),
    #[error("instances disagree on the number of items ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error(
        "KL divergence undefined: outcome {0} has zero probability under the second distribution"
    )]
    DivergenceUndefined(usize),
    #[error("brute-force enumeration capped at {max} items, got {n}")]
    TooManyItems { n: usize, max: usize },
    #[error("instance JSON: {0}")]
    Json(String),
}

/// One MNL environment: item revenues and utilities (no-purchase utility 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance<S> {
    revenues: Vec<S>,
    utilities: Vec<S>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(revenues: Vec<S>, utilities: Vec<S>) -> Result<Self, MnlError> {
        if revenues.len() != utilities.len() {
            return Err(MnlError::LengthMismatch {
                revenues: revenues.len(),
                utilities: utilities.len(),
            });
        }
        if revenues.is_empty() {
            return Err(MnlError::Empty);
        }
        for (i, r) in revenues.iter().enumerate() {
            if !r.is_finite_value() || *r < S::zero() || *r > S::one() {
                return Err(MnlError::InvalidRevenue {
                    item: i + 1,
                    value: r.as_f64(),
                });
            }
        }
        for (i, v) in utilities.iter().enumerate() {
            if !v.is_finite_value() || *v < S::zero() {
                return Err(MnlError::InvalidUtility {
                    item: i + 1,
                    value: v.as_f64(),
                });
            }
        }
        Ok(Self {
            revenues,
            utilities,
        })
    }

    pub fn len(&self) -> usize {
        self.revenues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revenues.is_empty()
    }

    pub fn revenues(&self) -> &[S] {
        &self.revenues
    }

    pub fn utilities(&self) -> &[S] {
        &self.utilities
    }

    /// Revenue of item `item` (1-based); item 0 earns nothing.
    pub fn revenue(&self, item: usize) -> S {
        if item == 0 {
            S::zero()
        } else {
            self.revenues[item - 1].clone()
        }
    }

    pub fn utility(&self, item: usize) -> S {
        if item == 0 {
            S::one()
        } else {
            self.utilities[item - 1].clone()
        }
    }

    pub fn max_revenue(&self) -> S {
        self.revenues
            .iter()
            .cloned()
            .fold(S::zero(), |m, r| if r > m { r } else { m })
    }

    fn check(&self, assortment: &Assortment) -> Result<(), MnlError> {
        match assortment.items().last() {
            Some(&last) if last > self.len() => Err(MnlError::InvalidAssortment(format!(
                "item {last} out of range for {} items",
                self.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl Instance<f64> {
    pub fn from_json(text: &str) -> Result<Self, MnlError> {
        #[derive(Deserialize)]
        struct Raw {
            revenues: Vec<f64>,
            utilities: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| MnlError::Json(e.to_string()))?;
        Instance::new(raw.revenues, raw.utilities)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }
}

impl<'de> Deserialize<'de> for Instance<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            revenues: Vec<f64>,
            utilities: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        Instance::new(raw.revenues, raw.utilities).map_err(serde::de::Error::custom)
    }
}

/// A set of offered items, stored as strictly increasing 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Assortment(Vec<usize>);

impl Assortment {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Sorts and validates; rejects index 0 and duplicates.
    pub fn new(mut items: Vec<usize>) -> Result<Self, MnlError> {
        items.sort_unstable();
        if items.first() == Some(&0) {
            return Err(MnlError::InvalidAssortment(
                "item indices start at 1".into(),
            ));
        }
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(MnlError::InvalidAssortment("duplicate item".into()));
        }
        Ok(Self(items))
    }

    pub fn full(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub(crate) fn from_sorted_unchecked(items: Vec<usize>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Self(items)
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }
}

/// What a customer did: `item == 0` is no purchase.
#[derive(Debug, Clone, PartialEq)]
pub struct PurchaseOutcome<S> {
    pub item: usize,
    pub revenue: S,
}

impl<S: Scalar> PurchaseOutcome<S> {
    pub fn no_purchase() -> Self {
        Self {
            item: 0,
            revenue: S::zero(),
        }
    }

    pub fn is_purchase(&self) -> bool {
        self.item != 0
    }
}

fn utility_sum<S: Scalar>(instance: &Instance<S>, assortment: &Assortment) -> S {
    assortment
        .items()
        .iter()
        .fold(S::zero(), |acc, &i| acc + instance.utility(i))
}

/// Expected revenue `sum r_j v_j / (1 + sum v_j)` of offering `assortment`.
pub fn expected_revenue<S: Scalar>(
    instance: &Instance<S>,
    assortment: &Assortment,
) -> Result<S, MnlError> {
    instance.check(assortment)?;
    let mut weighted = S::zero();
    let mut total = S::one();
    for &i in assortment.items() {
        let v = instance.utility(i);
        weighted = weighted + instance.revenue(i) * v.clone();
        total = total + v;
    }
    Ok(weighted / total)
}

/// Choice probabilities over `{0} ∪ S`, no-purchase first, then items in
/// assortment order.
pub fn purchase_probabilities<S: Scalar>(
    instance: &Instance<S>,
    assortment: &Assortment,
) -> Result<Vec<(usize, S)>, MnlError> {
    instance.check(assortment)?;
    let denom = S::one() + utility_sum(instance, assortment);
    let mut out = Vec::with_capacity(assortment.len() + 1);
    out.push((0, S::one() / denom.clone()));
    for &i in assortment.items() {
        out.push((i, instance.utility(i) / denom.clone()));
    }
    Ok(out)
}

/// Draws one customer choice. Consumes exactly one uniform draw from `rng`.
pub fn sample_purchase<S: Scalar, R: Rng + ?Sized>(
    instance: &Instance<S>,
    assortment: &Assortment,
    rng: &mut R,
) -> Result<PurchaseOutcome<S>, MnlError> {
    instance.check(assortment)?;
    let u: f64 = rng.random();
    let weights: Vec<f64> = assortment
        .items()
        .iter()
        .map(|&i| instance.utility(i).as_f64())
        .collect();
    let total = 1.0 + weights.iter().sum::<f64>();
    let mut acc = 1.0 / total;
    if u < acc {
        return Ok(PurchaseOutcome::no_purchase());
    }
    let mut chosen = None;
    for (&item, w) in assortment.items().iter().zip(&weights) {
        if *w <= 0.0 {
            continue;
        }
        acc += w / total;
        chosen = Some(item);
        if u < acc {
            break;
        }
    }
    // Rounding can leave acc a hair below 1; the last positive-weight item absorbs it.
    Ok(match chosen {
        Some(item) => PurchaseOutcome {
            item,
            revenue: instance.revenue(item),
        },
        None => PurchaseOutcome::no_purchase(),
    })
}

/// `{ i : r_i >= theta }`.
pub fn level_set<S: Scalar>(instance: &Instance<S>, theta: &S) -> Result<Assortment, MnlError> {
    if *theta < S::zero() {
        return Err(MnlError::NegativeThreshold(theta.as_f64()));
    }
    Ok(level_set_of(instance.revenues(), theta))
}

/// Level set over a bare revenue vector (what a policy is allowed to see).
pub fn level_set_of<S: Scalar>(revenues: &[S], theta: &S) -> Assortment {
    let items = revenues
        .iter()
        .enumerate()
        .filter(|(_, r)| *r >= theta)
        .map(|(i, _)| i + 1)
        .collect();
    Assortment::from_sorted_unchecked(items)
}

/// Revenue potential `F(theta) = R(L_theta)`.
pub fn potential<S: Scalar>(instance: &Instance<S>, theta: &S) -> Result<S, MnlError> {
    let set = level_set(instance, theta)?;
    expected_revenue(instance, &set)
}

/// Exact piecewise-constant form of `F`.
///
/// `F(theta) = values[0]` for `theta <= jump_points[0]`,
/// `values[i]` for `jump_points[i-1] < theta <= jump_points[i]`, and
/// `values[m] = 0` beyond the last jump.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile<S> {
    pub jump_points: Vec<S>,
    pub values: Vec<S>,
    pub theta_star: S,
    pub f_star: S,
}

impl<S: Scalar> PotentialProfile<S> {
    /// Evaluates `F` from the profile without touching the instance.
    pub fn eval(&self, theta: &S) -> S {
        let idx = self.jump_points.partition_point(|s| s < theta);
        self.values[idx].clone()
    }

    /// Index `k` with `values[..=k]` non-decreasing and `values[k..]`
    /// non-increasing (within tolerance), if the sequence is unimodal.
    pub fn unimodal_peak(&self) -> Option<usize> {
        let tol = S::tolerance();
        let v = &self.values;
        let mut k = 0;
        while k + 1 < v.len() && v[k + 1].clone() + tol.clone() >= v[k] {
            k += 1;
        }
        let peak = k;
        let descending = v[peak..]
            .windows(2)
            .all(|w| w[1] <= w[0].clone() + tol.clone());
        descending.then_some(peak)
    }
}

/// Distinct revenues (descending) with the expected revenue of each
/// corresponding level set, computed with running sums.
fn level_values<S: Scalar>(instance: &Instance<S>) -> Vec<(S, S)> {
    let mut order: Vec<usize> = (0..instance.len()).collect();
    let revs = instance.revenues();
    order.sort_by(|&a, &b| revs[b].partial_cmp(&revs[a]).unwrap_or(Ordering::Equal));

    let mut out: Vec<(S, S)> = Vec::new();
    let mut weighted = S::zero();
    let mut total = S::one();
    let mut k = 0;
    while k < order.len() {
        let level = revs[order[k]].clone();
        while k < order.len() && revs[order[k]] == level {
            let v = instance.utilities()[order[k]].clone();
            weighted = weighted + level.clone() * v.clone();
            total = total + v;
            k += 1;
        }
        out.push((level, weighted.clone() / total.clone()));
    }
    out
}

/// Builds the piecewise-constant profile of `F` in `O(N log N)`.
pub fn build_potential_profile<S: Scalar>(instance: &Instance<S>) -> PotentialProfile<S> {
    // Ascending: (d_1, R(L_{d_1})), ..., (d_k, R(L_{d_k})).
    let mut levels = level_values(instance);
    levels.reverse();

    let mut jump_points: Vec<S> = Vec::with_capacity(levels.len());
    let mut values: Vec<S> = Vec::with_capacity(levels.len() + 1);
    let mut iter = levels.into_iter().peekable();
    if let Some((_, first)) = iter.peek() {
        values.push(first.clone());
    }
    while let Some((level, _)) = iter.next() {
        let right = iter.peek().map(|(_, v)| v.clone()).unwrap_or_else(S::zero);
        let left = values.last().expect("seeded above").clone();
        if left.approx_eq(&right) {
            // F does not change at this revenue; extend the plateau.
            continue;
        }
        jump_points.push(level);
        values.push(right);
    }
    // The tail beyond the top revenue is exactly zero even if the last
    // merged plateau was only zero within tolerance.
    if let Some(last) = values.last_mut() {
        *last = S::zero();
    }

    let f_star = values
        .iter()
        .cloned()
        .fold(S::zero(), |m, c| if c > m { c } else { m });
    PotentialProfile {
        jump_points,
        values,
        theta_star: f_star.clone(),
        f_star,
    }
}

/// Best level set and its value. Among maximisers the smallest level set
/// (largest threshold) wins.
pub fn oracle_optimal<S: Scalar>(instance: &Instance<S>) -> (Assortment, S) {
    let tol = S::tolerance();
    let mut best_value = S::zero();
    let mut best_level: Option<S> = None;
    for (level, value) in level_values(instance) {
        if value > best_value.clone() + tol.clone() {
            best_value = value;
            best_level = Some(level);
        }
    }
    let set = match best_level {
        Some(level) => level_set_of(instance.revenues(), &level),
        None => Assortment::empty(),
    };
    (set, best_value)
}

/// Maximum expected revenue over all `2^N` subsets. Independent of the
/// level-set machinery; used as an oracle.
pub fn brute_force_optimal<S: Scalar>(instance: &Instance<S>) -> Result<(Assortment, S), MnlError> {
    let n = instance.len();
    if n > BRUTE_FORCE_MAX_ITEMS {
        return Err(MnlError::TooManyItems {
            n,
            max: BRUTE_FORCE_MAX_ITEMS,
        });
    }
    let mut best = (Assortment::empty(), S::zero());
    for mask in 1u32..(1u32 << n) {
        let items: Vec<usize> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| i + 1)
            .collect();
        let set = Assortment::from_sorted_unchecked(items);
        let value = expected_revenue(instance, &set)?;
        if value > best.1 {
            best = (set, value);
        }
    }
    Ok(best)
}

fn paired_probabilities<S: Scalar>(
    p0: &Instance<S>,
    p1: &Instance<S>,
    assortment: &Assortment,
) -> Result<Vec<(usize, S, S)>, MnlError> {
    if p0.len() != p1.len() {
        return Err(MnlError::SizeMismatch(p0.len(), p1.len()));
    }
    let a = purchase_probabilities(p0, assortment)?;
    let b = purchase_probabilities(p1, assortment)?;
    Ok(a.into_iter()
        .zip(b)
        .map(|((i, p), (_, q))| (i, p, q))
        .collect())
}

/// Exact categorical `KL(P0(S) || P1(S))` in nats.
pub fn kl_purchase_distributions<S>(
    p0: &Instance<S>,
    p1: &Instance<S>,
    assortment: &Assortment,
) -> Result<S, MnlError>
where
    S: Scalar + num_traits::Float,
{
    let mut kl = S::zero();
    for (item, p, q) in paired_probabilities(p0, p1, assortment)? {
        if p <= S::zero() {
            continue;
        }
        if q <= S::zero() {
            return Err(MnlError::DivergenceUndefined(item));
        }
        kl = kl + p * (p / q).ln();
    }
    Ok(kl.max(S::zero()))
}

/// Chi-square upper bound `sum (p_j - q_j)^2 / q_j` on the same KL.
/// Works in exact arithmetic.
pub fn kl_chi_square_bound<S: Scalar>(
    p0: &Instance<S>,
    p1: &Instance<S>,
    assortment: &Assortment,
) -> Result<S, MnlError> {
    let mut bound = S::zero();
    for (item, p, q) in paired_probabilities(p0, p1, assortment)? {
        if q <= S::zero() {
            if p > S::zero() {
                return Err(MnlError::DivergenceUndefined(item));
            }
            continue;
        }
        let eps = p - q.clone();
        bound = bound + eps.clone() * eps / q;
    }
    Ok(bound)
}

/// Rational bracket `(lower, upper)` around the exact KL, from
/// `u - u^2/2 + u^3/3 - u^4/(4 m^4) <= ln(1 + u) <= u - u^2/2 + u^3/3`
/// with `m = min(1, 1 + u)`. Both ends are exact in rational arithmetic.
pub fn kl_bracket<S: Scalar>(
    p0: &Instance<S>,
    p1: &Instance<S>,
    assortment: &Assortment,
) -> Result<(S, S), MnlError> {
    let two = S::one() + S::one();
    let three = two.clone() + S::one();
    let four = two.clone() + two.clone();
    let mut lower = S::zero();
    let mut upper = S::zero();
    for (item, p, q) in paired_probabilities(p0, p1, assortment)? {
        if p <= S::zero() {
            continue;
        }
        if q <= S::zero() {
            return Err(MnlError::DivergenceUndefined(item));
        }
        let u = p.clone() / q - S::one();
        let u2 = u.clone() * u.clone();
        let u3 = u2.clone() * u.clone();
        let cubic = u.clone() - u2.clone() / two.clone() + u3 / three.clone();
        let m = if u < S::zero() {
            S::one() + u.clone()
        } else {
            S::one()
        };
        let m2 = m.clone() * m;
        let quartic = u2.clone() * u2 / (four.clone() * m2.clone() * m2);
        upper = upper + p.clone() * cubic.clone();
        lower = lower + p * (cubic - quartic);
    }
    Ok((lower, upper))
}
