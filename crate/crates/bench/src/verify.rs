//! Property suites behind `assort-bench verify`.

use assortment::concentration::{validate_uniform_concentration, Bernoulli};
use assortment::generate::{generate_lower_bound, LowerBoundVariant};
use assortment::mnl::{
    brute_force_optimal, build_potential_profile, kl_bracket, oracle_optimal, potential, Instance,
};
use assortment::seeds;
use assortment::{Assortment, Exact, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const TOLERANCE: f64 = 1e-12;
pub const GRID_POINTS: usize = 1000;
pub const KL_HORIZONS: [u64; 3] = [16, 100, 10_000];

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub instances: usize,
    pub max_items: usize,
    pub master_seed: u64,
    pub coverage_trials: usize,
    /// Slack allowed in the oracle and potential comparisons.
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            instances: 500,
            max_items: 12,
            master_seed: 0,
            coverage_trials: 10_000,
            tolerance: TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub checked: usize,
    pub passed: bool,
    /// Seed of the first instance that violated the property.
    pub failing_seed: Option<u64>,
    pub detail: String,
}

impl PropertyReport {
    fn from_failures(property: &str, checked: usize, failure: Option<(u64, String)>) -> Self {
        let passed = failure.is_none();
        let (failing_seed, detail) = match failure {
            Some((seed, d)) => (Some(seed), d),
            None => (None, String::new()),
        };
        Self {
            property: property.into(),
            checked,
            passed,
            failing_seed,
            detail,
        }
    }
}

/// Instance with `N ~ U{1..=max_items}` and all parameters `U[0, 1]`.
pub fn random_instance(seed: u64, max_items: usize) -> Instance<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_items);
    let revenues = (0..n).map(|_| rng.random::<f64>()).collect();
    let utilities = (0..n).map(|_| rng.random::<f64>()).collect();
    Instance::new(revenues, utilities).expect("unit-interval parameters are valid")
}

fn instance_seeds(opts: &VerifyOptions) -> impl Iterator<Item = u64> + '_ {
    (0..opts.instances as u64).map(|k| seeds::replication_seed(opts.master_seed, k))
}

/// Level-set oracle against exhaustive enumeration.
pub fn check_oracle(inst: &Instance<f64>, tol: f64) -> Result<(), String> {
    let (_, level) = oracle_optimal(inst);
    let (_, brute) = brute_force_optimal(inst).map_err(|e| e.to_string())?;
    if (level - brute).abs() > tol {
        return Err(format!(
            "level-set optimum {level} vs subset optimum {brute}"
        ));
    }
    Ok(())
}

/// Fixed point, the two-sided crossing of the diagonal on a grid, and
/// unimodality of the plateau values.
pub fn check_potential(inst: &Instance<f64>, tol: f64) -> Result<(), String> {
    let profile = build_potential_profile(inst);
    let f_star = profile.f_star;
    let at_star = potential(inst, &f_star).map_err(|e| e.to_string())?;
    if (at_star - f_star).abs() > tol {
        return Err(format!("F(F*) = {at_star} but F* = {f_star}"));
    }
    for k in 0..=GRID_POINTS {
        let theta = k as f64 / GRID_POINTS as f64;
        let f = potential(inst, &theta).map_err(|e| e.to_string())?;
        if theta <= f_star && f < theta - tol {
            return Err(format!(
                "F({theta}) = {f} below the diagonal left of theta* = {f_star}"
            ));
        }
        if theta >= f_star && f > theta + tol {
            return Err(format!(
                "F({theta}) = {f} above the diagonal right of theta* = {f_star}"
            ));
        }
    }
    if profile.unimodal_peak().is_none() {
        return Err(format!(
            "plateau values are not unimodal: {:?}",
            profile.values
        ));
    }
    Ok(())
}

fn run_instance_suite(
    property: &str,
    opts: &VerifyOptions,
    check: impl Fn(&Instance<f64>, f64) -> Result<(), String>,
) -> PropertyReport {
    let mut failure = None;
    let mut checked = 0;
    for seed in instance_seeds(opts) {
        checked += 1;
        if let Err(e) = check(&random_instance(seed, opts.max_items), opts.tolerance) {
            failure = Some((seed, e));
            break;
        }
    }
    PropertyReport::from_failures(property, checked, failure)
}

pub fn verify_oracle(opts: &VerifyOptions) -> PropertyReport {
    run_instance_suite("oracle-equals-brute-force", opts, check_oracle)
}

pub fn verify_potential(opts: &VerifyOptions) -> PropertyReport {
    run_instance_suite("potential-structure", opts, check_potential)
}

/// Uniform coverage of the anytime radius for Bernoulli(1/2) sample means.
pub fn verify_coverage(opts: &VerifyOptions) -> PropertyReport {
    let seed = seeds::mix64(opts.master_seed ^ seeds::fnv1a64(b"coverage"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = opts.coverage_trials.max(1000);
    let result = validate_uniform_concentration(&Bernoulli(0.5), 100, 1e-4, trials, &mut rng);
    let failure = match result {
        Ok(c) if c >= 0.99 => None,
        Ok(c) => Some((seed, format!("coverage {c} < 0.99"))),
        Err(e) => Some((seed, e.to_string())),
    };
    let mut report = PropertyReport::from_failures("concentration-coverage", trials, failure);
    if report.passed {
        report.detail = "coverage >= 0.99".into();
    }
    report
}

/// Upper end of the rational KL bracket, against `1/(18T)`, for both
/// assortments that contain item 1.
pub fn kl_certificate(horizon: u64) -> Result<Vec<(Assortment, Exact, Exact)>, String> {
    let p0: Instance<Exact> =
        generate_lower_bound(LowerBoundVariant::P0, 2, horizon).map_err(|e| e.to_string())?;
    let p1: Instance<Exact> =
        generate_lower_bound(LowerBoundVariant::P1, 2, horizon).map_err(|e| e.to_string())?;
    let limit = Exact::new(1.into(), (18 * horizon).into());
    let mut out = Vec::new();
    for items in [vec![1], vec![1, 2]] {
        let s = Assortment::new(items).expect("valid");
        let (_, upper) = kl_bracket(&p0, &p1, &s).map_err(|e| e.to_string())?;
        out.push((s, upper, limit.clone()));
    }
    Ok(out)
}

pub fn verify_kl() -> PropertyReport {
    let mut failure = None;
    let mut checked = 0;
    'outer: for &t in &KL_HORIZONS {
        match kl_certificate(t) {
            Ok(rows) => {
                for (s, upper, limit) in rows {
                    checked += 1;
                    if upper > limit {
                        failure = Some((
                            t,
                            format!(
                                "T={t}, S={:?}: KL <= {} exceeds 1/(18T)",
                                s.items(),
                                upper.as_f64()
                            ),
                        ));
                        break 'outer;
                    }
                }
            }
            Err(e) => {
                failure = Some((t, e));
                break;
            }
        }
    }
    // No seed involved; the detail names the horizon.
    let mut report = PropertyReport::from_failures("kl-bound", checked, failure);
    report.failing_seed = None;
    report
}

pub fn verify_all(opts: &VerifyOptions) -> Vec<PropertyReport> {
    vec![
        verify_oracle(opts),
        verify_potential(opts),
        verify_coverage(opts),
        verify_kl(),
    ]
}
