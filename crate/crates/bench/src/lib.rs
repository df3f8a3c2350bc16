//! Command-line front end for the assortment simulator.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! `verify` property fails.

pub mod lower_bound;
pub mod verify;

use assortment::config::{BenchConfig, Generator, RunConfig};
use assortment::harness::{regret_scaling_study, run_episode, AggregateSummary, HarnessError};
use assortment::policy::PolicyConfig;
use assortment::seeds;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const OUT_ENV: &str = "ASSORT_BENCH_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Verify(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verify(_) => 2,
            _ => 1,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        Self::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "assort-bench",
    version,
    about = "Dynamic assortment planning under MNL: simulations and checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seeded episode and emit its per-period log as CSV.
    Run(RunArgs),
    /// Run a grid of (N, T, policy) cells and emit JSON and CSV summaries.
    Bench(BenchArgs),
    /// Fit the growth exponent of regret in T.
    Scaling(ScalingArgs),
    /// Run the property suites on random instances.
    Verify(VerifyArgs),
    /// Diagnostics on the two-point lower-bound pair.
    LowerBound(LowerBoundArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GeneratorArg {
    Synthetic,
    LowerBoundP0,
    LowerBoundP1,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// trisection, adaptive-trisection, ucb, thompson, grs or static
    #[arg(long, default_value = "adaptive-trisection")]
    pub policy: String,
    /// Confidence-radius scale for adaptive-trisection.
    #[arg(long)]
    pub ci_scale: Option<f64>,
}

impl PolicyArgs {
    pub fn resolve(&self) -> Result<PolicyConfig, CliError> {
        let base =
            PolicyConfig::from_name(&self.policy).map_err(|e| CliError::Config(e.to_string()))?;
        apply_ci_scale(base, self.ci_scale)
    }
}

fn apply_ci_scale(policy: PolicyConfig, scale: Option<f64>) -> Result<PolicyConfig, CliError> {
    let Some(scale) = scale else {
        return Ok(policy);
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CliError::Config(format!(
            "--ci-scale must be positive, got {scale}"
        )));
    }
    match policy {
        PolicyConfig::AdaptiveTrisection { exploit_tail, .. } => {
            Ok(PolicyConfig::AdaptiveTrisection {
                ci_scale: scale,
                exploit_tail,
            })
        }
        other => Err(CliError::Config(format!(
            "--ci-scale does not apply to {}",
            other.name()
        ))),
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub t: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "synthetic")]
    pub generator: GeneratorArg,
    /// Instance JSON file; overrides --generator.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// RunConfig JSON; replaces generator, N, T, policy and seed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// BenchConfig JSON path, or the built-in name `table2`.
    #[arg(long, default_value = "table2")]
    pub config: String,
    /// Keep only this policy.
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub ci_scale: Option<f64>,
    /// Keep only cells with this N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Keep only cells with this T.
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallel: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Comma-separated, strictly increasing horizons.
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000")]
    pub t: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub parallel: Option<usize>,
    /// RunConfig JSON supplying generator and policy.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Number of random instances per property.
    #[arg(long, default_value_t = 500)]
    pub instances: usize,
    /// Largest N drawn.
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo trials for the coverage check.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Slack in the oracle and potential comparisons; a negative value
    /// makes every check fail, which exercises failure reporting.
    #[arg(long, default_value_t = verify::TOLERANCE, allow_negative_numbers = true)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerBoundArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub t: u64,
    /// Seeded runs per instance.
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `ASSORT_BENCH_OUT` wins over `--out`.
pub fn output_dir(flag: Option<&Path>) -> Option<PathBuf> {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => flag.map(Path::to_path_buf),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.into(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn io_err(source: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serialises");
    bytes.push(b'\n');
    bytes
}

/// Emits `bytes` as `dir/name` when an output directory is set, else on
/// stdout.
fn emit(out: &mut dyn Write, dir: Option<&Path>, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    match dir {
        Some(d) => {
            let path = write_file(d, name, bytes)?;
            writeln!(out, "wrote {}", path.display()).map_err(io_err)
        }
        None => out.write_all(bytes).map_err(io_err),
    }
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => read_json::<RunConfig>(path)?,
        None => RunConfig {
            generator: match (&args.instance, args.generator) {
                (Some(path), _) => Generator::File { path: path.clone() },
                (None, GeneratorArg::Synthetic) => Generator::default(),
                (None, GeneratorArg::LowerBoundP0) => Generator::LowerBoundP0,
                (None, GeneratorArg::LowerBoundP1) => Generator::LowerBoundP1,
            },
            n: args.n,
            horizon: args.t,
            policy: args.policy.resolve()?,
            replications: 1,
            master_seed: args.seed,
            redraw_instance: false,
            realized_regret: false,
        },
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let instance = config.build_instance(seeds::instance_seed(config.master_seed))?;
    let log = run_episode(
        &instance,
        &config.policy,
        config.horizon,
        seeds::replication_seed(config.master_seed, 0),
    )?;
    let mut csv = Vec::new();
    log.write_csv(&mut csv).map_err(io_err)?;
    emit(
        out,
        output_dir(args.out.as_deref()).as_deref(),
        "episode.csv",
        &csv,
    )
}

fn summary_csv(results: &BTreeMap<String, AggregateSummary>) -> Vec<u8> {
    let mut s =
        String::from("policy,N,T,replications,mean_regret,max_regret,std_regret,optimal_revenue\n");
    for r in results.values() {
        s.push_str(&format!(
            "{},{},{},{},{:?},{:?},{:?},{:?}\n",
            r.policy_name,
            r.n,
            r.horizon,
            r.replications,
            r.mean_regret,
            r.max_regret,
            r.std_regret,
            r.optimal_revenue
        ));
    }
    s.into_bytes()
}

pub fn bench_config(args: &BenchArgs) -> Result<BenchConfig, CliError> {
    let mut config = match BenchConfig::builtin(&args.config) {
        Some(c) if !Path::new(&args.config).exists() => c,
        _ => read_json(Path::new(&args.config))?,
    };
    if let Some(name) = &args.policy {
        config.policies.retain(|p| p.name() == name);
        if config.policies.is_empty() {
            return Err(CliError::Config(format!(
                "no policy named '{name}' in the bench config"
            )));
        }
    }
    if args.ci_scale.is_some() {
        config.policies = config
            .policies
            .into_iter()
            .map(|p| match p {
                PolicyConfig::AdaptiveTrisection { .. } => apply_ci_scale(p, args.ci_scale),
                other => Ok(other),
            })
            .collect::<Result<_, _>>()?;
    }
    if let Some(n) = args.n {
        config.cells.retain(|c| c.n == n);
    }
    if let Some(t) = args.t {
        config.cells.retain(|c| c.horizon == t);
    }
    if let Some(reps) = args.reps {
        config.replications = reps;
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = bench_config(args)?;
    let workers = args.parallel.unwrap_or_else(default_workers);
    let results = assortment::config::run_bench(&config, workers)?;
    let dir = output_dir(args.out.as_deref());
    emit(
        out,
        dir.as_deref(),
        "bench_summary.json",
        &to_json(&results),
    )?;
    if let Some(d) = dir {
        let path = write_file(&d, "bench_summary.csv", &summary_csv(&results))?;
        writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_scaling(args: &ScalingArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (generator, policy) = match &args.config {
        Some(path) => {
            let c: RunConfig = read_json(path)?;
            (c.generator, c.policy)
        }
        None => (Generator::default(), args.policy.resolve()?),
    };
    if args.t.is_empty() || args.t.contains(&0) || args.n == 0 || args.reps == 0 {
        return Err(CliError::Config(
            "scaling needs N >= 1, reps >= 1 and positive horizons".into(),
        ));
    }
    let workers = args.parallel.unwrap_or_else(default_workers);
    let report = regret_scaling_study(
        &policy, &generator, args.n, &args.t, args.reps, args.seed, workers,
    )?;
    let dir = output_dir(args.out.as_deref());
    emit(out, dir.as_deref(), "scaling.json", &to_json(&report))?;
    if let Some(d) = dir {
        let mut csv = String::from("T,mean_regret,max_regret\n");
        for r in &report.rows {
            csv.push_str(&format!(
                "{},{:?},{:?}\n",
                r.horizon, r.mean_regret, r.max_regret
            ));
        }
        let path = write_file(&d, "scaling.csv", csv.as_bytes())?;
        writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    }
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !args.tolerance.is_finite() {
        return Err(CliError::Config("--tolerance must be finite".into()));
    }
    if args.n == 0 || args.n > assortment::mnl::BRUTE_FORCE_MAX_ITEMS {
        return Err(CliError::Config(format!(
            "--n must be in 1..={}",
            assortment::mnl::BRUTE_FORCE_MAX_ITEMS
        )));
    }
    let opts = verify::VerifyOptions {
        instances: args.instances,
        max_items: args.n,
        master_seed: args.seed,
        coverage_trials: args.reps,
        tolerance: args.tolerance,
    };
    let reports = verify::verify_all(&opts);
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let seed = r
            .failing_seed
            .map(|s| format!(" seed={s}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{status} {} ({} checked){seed} {}",
            r.property, r.checked, r.detail
        )
        .map_err(io_err)?;
    }
    if let Some(dir) = output_dir(args.out.as_deref()) {
        let path = write_file(&dir, "verify.json", &to_json(&reports))?;
        writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| match r.failing_seed {
            Some(s) => format!("{} (seed {s})", r.property),
            None => format!("{} ({})", r.property, r.detail),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verify(format!("failed: {}", failed.join(", "))))
    }
}

pub fn cmd_lower_bound(args: &LowerBoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Config("--reps must be >= 1".into()));
    }
    let policy = args.policy.resolve()?;
    let report = lower_bound::lower_bound_report(&policy, args.n, args.t, args.reps, args.seed)?;
    emit(
        out,
        output_dir(args.out.as_deref()).as_deref(),
        "lower_bound.json",
        &to_json(&report),
    )
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Scaling(a) => cmd_scaling(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::LowerBound(a) => cmd_lower_bound(a, out),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["assort-bench"];
        full.extend_from_slice(args);
        let code = main_with_args(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&["frobnicate"]).0, 1);
        assert_eq!(run(&["run", "--bogus"]).0, 1);
        assert_eq!(run(&[]).0, 1);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn config_errors_exit_one() {
        let (code, _, err) = run(&["run", "--policy", "nope", "--n", "3", "--t", "5"]);
        assert_eq!(code, 1);
        assert!(err.contains("unknown policy"));
        assert_eq!(run(&["run", "--n", "0"]).0, 1);
        assert_eq!(run(&["run", "--policy", "ucb", "--ci-scale", "0.1"]).0, 1);
        assert_eq!(run(&["bench", "--config", "/no/such/file.json"]).0, 1);
    }

    #[test]
    fn ci_scale_override() {
        let p = PolicyArgs {
            policy: "adaptive-trisection".into(),
            ci_scale: Some(0.1),
        };
        assert_eq!(p.resolve().unwrap(), PolicyConfig::adaptive_trisection(0.1));
        let p = PolicyArgs {
            policy: "adaptive-trisection".into(),
            ci_scale: Some(-1.0),
        };
        assert!(p.resolve().is_err());
    }

    #[test]
    fn bench_filters() {
        let args = BenchArgs {
            config: "table2".into(),
            policy: Some("trisection".into()),
            ci_scale: None,
            n: Some(100),
            t: Some(500),
            reps: Some(2),
            seed: Some(9),
            parallel: None,
            out: None,
        };
        let c = bench_config(&args).unwrap();
        assert_eq!(c.runs().len(), 1);
        assert_eq!(c.replications, 2);
        assert_eq!(c.master_seed, 9);
    }
}
