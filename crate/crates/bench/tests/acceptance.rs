//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use assortment::concentration::{validate_uniform_concentration, Bernoulli};
use assortment::config::{run_bench, BenchConfig, Generator};
use assortment::generate::{
    generate_lower_bound, generate_synthetic, GeneratorSpec, LowerBoundVariant,
};
use assortment::harness::{regret_scaling_study, run_policy, AggregateSummary, EpisodeOptions};
use assortment::mnl::{build_potential_profile, kl_bracket, oracle_optimal, potential, Instance};
use assortment::policy::{
    Catalog, InnerBudgetRule, PolicyConfig, TrisectionPolicy, TrisectionVariant,
};
use assortment::{seeds, Assortment, Exact, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Stdio};
use std::time::Instant;

type Outcome = Result<String, String>;
type Grid = BTreeMap<(String, usize, u64), AggregateSummary>;

fn check(ok: bool, pass: String, fail: String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn unit_instance(rng: &mut ChaCha8Rng, max_items: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(1..=max_items);
    let r = (0..n).map(|_| rng.random::<f64>()).collect();
    let v = (0..n).map(|_| rng.random::<f64>()).collect();
    (r, v)
}

/// Expected revenue of the subset encoded by `keep`, straight from the
/// choice probabilities.
fn direct_revenue(r: &[f64], v: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let (mut num, mut den) = (0.0, 1.0);
    for i in 0..r.len() {
        if keep(i) {
            num += r[i] * v[i];
            den += v[i];
        }
    }
    num / den
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let (r, v) = unit_instance(&mut rng, 12);
        let n = r.len();
        let brute = (0u32..1 << n)
            .map(|mask| direct_revenue(&r, &v, |i| mask & (1 << i) != 0))
            .fold(0.0, f64::max);
        let inst = Instance::new(r, v).unwrap();
        let (_, level) = oracle_optimal(&inst);
        let gap = (level - brute).abs();
        worst = worst.max(gap);
        if gap > 1e-12 {
            return Err(format!(
                "instance {k}: level-set optimum {level} vs subset optimum {brute}"
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 30.0,
        format!("500 instances, max gap {worst:e}, {secs:.2}s"),
        format!("took {secs:.1}s"),
    )
}

fn potential_structure() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..500 {
        let (r, v) = unit_instance(&mut rng, 12);
        // F* independently: the best level set by direct evaluation.
        let f_star = r
            .iter()
            .map(|&th| direct_revenue(&r, &v, |i| r[i] >= th))
            .fold(0.0, f64::max);
        let inst = Instance::new(r.clone(), v.clone()).unwrap();
        let at_star = potential(&inst, &f_star).unwrap();
        if (at_star - f_star).abs() > 1e-12 {
            return Err(format!("instance {k}: F(F*) = {at_star}, F* = {f_star}"));
        }
        for g in 0..=1000 {
            let theta = g as f64 / 1000.0;
            let f = direct_revenue(&r, &v, |i| r[i] >= theta);
            if theta <= f_star && f < theta - 1e-12 {
                return Err(format!(
                    "instance {k}: F({theta}) = {f} < theta left of theta*"
                ));
            }
            if theta >= f_star && f > theta + 1e-12 {
                return Err(format!(
                    "instance {k}: F({theta}) = {f} > theta right of theta*"
                ));
            }
        }
        // Values of F along increasing thresholds: rise then fall.
        let mut levels = r.clone();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        let seq: Vec<f64> = levels
            .iter()
            .map(|&th| direct_revenue(&r, &v, |i| r[i] >= th))
            .collect();
        let peak = seq
            .iter()
            .enumerate()
            .fold(0, |p, (i, &x)| if x > seq[p] { i } else { p });
        let rising = seq[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let falling = seq[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-12);
        if !(rising && falling) || build_potential_profile(&inst).unimodal_peak().is_none() {
            return Err(format!("instance {k}: potential values not unimodal"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 30.0,
        format!("500 instances, {secs:.2}s"),
        format!("took {secs:.1}s"),
    )
}

fn kl_bound() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for t in [16u64, 100, 10_000] {
        let p0: Instance<Exact> = generate_lower_bound(LowerBoundVariant::P0, 2, t).unwrap();
        let p1: Instance<Exact> = generate_lower_bound(LowerBoundVariant::P1, 2, t).unwrap();
        let limit = Exact::new(1.into(), (18 * t).into());
        for items in [vec![1], vec![1, 2]] {
            let s = Assortment::new(items.clone()).unwrap();
            let (lo, hi) = kl_bracket(&p0, &p1, &s).unwrap();
            // Cross-check the bracket against a float evaluation.
            let e = 1.0 / (4.0 * (t as f64).sqrt());
            let probs = |v1: f64| -> Vec<f64> {
                let den = 1.0 + v1 + if items.len() == 2 { 1.0 } else { 0.0 };
                let mut p = vec![1.0 / den, v1 / den];
                if items.len() == 2 {
                    p.push(1.0 / den);
                }
                p
            };
            let kl: f64 = probs(1.0 - e)
                .iter()
                .zip(probs(1.0 + e))
                .map(|(p, q)| p * (p / q).ln())
                .sum();
            if !(lo.as_f64() <= kl * (1.0 + 1e-9) && kl <= hi.as_f64() * (1.0 + 1e-9)) {
                return Err(format!(
                    "T={t} S={items:?}: float KL {kl} outside rational bracket"
                ));
            }
            if hi > limit {
                return Err(format!(
                    "T={t} S={items:?}: KL up to {} exceeds 1/(18T) = {}",
                    hi.as_f64(),
                    limit.as_f64()
                ));
            }
            worst = worst.max(hi.as_f64() * 18.0 * t as f64);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        secs < 1.0,
        format!("max KL * 18T = {worst:.4}, {secs:.3}s"),
        format!("took {secs:.2}s"),
    )
}

fn table2() -> Grid {
    let out = run_bench(&BenchConfig::table2(), 4).expect("table grid runs");
    out.into_values()
        .map(|s| ((s.policy_name.clone(), s.n, s.horizon), s))
        .collect()
}

const ADAP: &str = "adaptive-trisection(scale=0.1)";

fn table2_replication(results: &Grid, secs: f64) -> Outcome {
    let targets = [
        ("trisection", 100, 500, 7.68),
        (ADAP, 100, 500, 1.99),
        ("trisection", 1000, 1000, 9.77),
        (ADAP, 1000, 1000, 3.97),
        ("ucb", 1000, 1000, 160.8),
    ];
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    for (policy, n, t, reference) in targets {
        let mean = results[&(policy.to_string(), n, t)].mean_regret;
        let ratio = mean / reference;
        parts.push(format!("{policy}({n},{t})={mean:.2}/{reference}"));
        if !(1.0 / 3.0..=3.0).contains(&ratio) {
            bad.push(format!("{policy} ({n},{t}) mean {mean:.2} vs {reference}"));
        }
    }
    if secs >= 600.0 {
        bad.push(format!("grid took {secs:.0}s"));
    }
    check(
        bad.is_empty(),
        format!("{} [{secs:.1}s]", parts.join(" ")),
        bad.join("; "),
    )
}

fn n_independence(results: &Grid) -> Outcome {
    let adap: Vec<f64> = [100, 250, 500, 1000]
        .iter()
        .map(|&n| results[&(ADAP.to_string(), n, 1000)].mean_regret)
        .collect();
    let lo = adap.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = adap.iter().cloned().fold(0.0, f64::max);
    let ucb100 = results[&("ucb".to_string(), 100, 1000)].mean_regret;
    let ucb1000 = results[&("ucb".to_string(), 1000, 1000)].mean_regret;
    let msg = format!(
        "adaptive range {lo:.2}..{hi:.2} (x{:.2}), ucb N=100 {ucb100:.1} N=1000 {ucb1000:.1} (x{:.2})",
        hi / lo,
        ucb1000 / ucb100
    );
    check(hi <= 1.5 * lo && ucb1000 >= 1.5 * ucb100, msg.clone(), msg)
}

fn sqrt_t_scaling() -> Outcome {
    let start = Instant::now();
    let horizons = [1000, 4000, 16000];
    let gen = Generator::Synthetic {
        spec: GeneratorSpec::default(),
    };
    let theory = regret_scaling_study(
        &PolicyConfig::adaptive_trisection(2.0),
        &gen,
        500,
        &horizons,
        20,
        0,
        4,
    )
    .map_err(|e| e.to_string())?;
    let tuned = regret_scaling_study(
        &PolicyConfig::adaptive_trisection(0.1),
        &gen,
        500,
        &horizons,
        20,
        0,
        4,
    )
    .map_err(|e| e.to_string())?;
    let alpha = theory.exponent.ok_or("no exponent")?;
    let secs = start.elapsed().as_secs_f64();
    let msg = format!(
        "alpha = {alpha:.3} at radius scale 2 (scale 0.1: {:.3}), {secs:.1}s",
        tuned.exponent.unwrap_or(f64::NAN)
    );
    check(
        (0.3..=0.7).contains(&alpha) && secs < 900.0,
        msg.clone(),
        msg,
    )
}

/// Runs per variant in which `a <= theta* <= b` held at every epoch start
/// and at the end.
fn containment_runs(variant: TrisectionVariant) -> usize {
    let (n, horizon) = (100, 1000);
    let mut good = 0;
    for k in 0..100u64 {
        let inst = generate_synthetic(
            n,
            &GeneratorSpec::default(),
            seeds::replication_instance_seed(7, k),
        )
        .unwrap();
        let (_, f_star) = oracle_optimal(&inst);
        let mut policy =
            TrisectionPolicy::new(Catalog::new(inst.revenues().to_vec()), horizon, variant)
                .unwrap();
        let mut rng = seeds::customer_rng(seeds::replication_seed(7, k));
        run_policy(
            &inst,
            &mut policy,
            horizon,
            &mut rng,
            EpisodeOptions::default(),
        )
        .unwrap();
        let held = policy
            .history()
            .iter()
            .all(|e| e.a <= f_star && f_star <= e.b)
            && policy.bracket().contains(&f_star);
        good += held as usize;
    }
    good
}

fn trisection_consistency() -> Outcome {
    let fixed = containment_runs(TrisectionVariant::Fixed(InnerBudgetRule::LogTSquared));
    let adap = containment_runs(TrisectionVariant::Adaptive { scale: 2.0 });
    let tuned = containment_runs(TrisectionVariant::Adaptive { scale: 0.1 });
    let msg =
        format!("trisection {fixed}/100 (adaptive: scale 2 {adap}/100, scale 0.1 {tuned}/100)");
    check(fixed >= 99, msg.clone(), msg)
}

fn concentration_coverage() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let c = validate_uniform_concentration(&Bernoulli(0.5), 100, 1e-4, 10_000, &mut rng)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("coverage {c:.4}, {secs:.2}s");
    check(c >= 0.99 && secs < 60.0, msg.clone(), msg)
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_assort-bench");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(bin)
            .args([
                "bench",
                "--config",
                "table2",
                "--seed",
                "2019",
                "--parallel",
                workers,
                "--out",
            ])
            .arg(&out)
            .env_remove("ASSORT_BENCH_OUT")
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("bench --parallel {workers} exited with {status}"));
        }
        outputs.push(std::fs::read(out.join("bench_summary.json")).map_err(|e| e.to_string())?);
    }
    check(
        outputs[0] == outputs[1] && !outputs[0].is_empty(),
        format!(
            "--parallel 1 and 3 give identical {}-byte summaries",
            outputs[0].len()
        ),
        "summaries differ between worker counts".into(),
    )
}

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    // Nothing to list for `cargo test -- --list`.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let grid = guarded(|| Ok(table2()));
    let grid_secs = start.elapsed().as_secs_f64();
    let on_grid = |f: &dyn Fn(&Grid) -> Outcome| match &grid {
        Ok(g) => guarded(|| f(g)),
        Err(e) => Err(format!("grid failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("oracle equivalence", guarded(oracle_equivalence)),
        ("potential structure", guarded(potential_structure)),
        ("KL bound", guarded(kl_bound)),
        (
            "regret table",
            on_grid(&|g| table2_replication(g, grid_secs)),
        ),
        ("N-independence", on_grid(&n_independence)),
        ("sqrt(T) scaling", guarded(sqrt_t_scaling)),
        ("trisection consistency", guarded(trisection_consistency)),
        ("concentration coverage", guarded(concentration_coverage)),
        ("determinism", guarded(determinism)),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
