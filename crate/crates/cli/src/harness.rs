//! Experiment commands. Each one validates all of its parameters, computes,
//! and only then creates the output directory and writes artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use otl_core::datagen::{self, format_sig9};
use otl_core::discrim::{self, DiscrimReport};
use otl_core::eval::weighted_knn_predict;
use otl_core::sinkhorn::sinkhorn_balance;
use otl_core::{
    balance, compare_balancers, indicator_std, BalanceConfig, BalanceResult, ClusterHistogram,
    ComparisonRecord, KnnConfig, ScoreMatrix, SinkhornConfig, TargetSpec,
};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    IterationCap(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::IterationCap(_) => 4,
        }
    }
}

impl From<otl_core::Error> for HarnessError {
    fn from(e: otl_core::Error) -> Self {
        use otl_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } | E::Format { .. } | E::Csv { .. } => HarnessError::Io(msg),
            E::IterationCap { .. } => HarnessError::IterationCap(msg),
            _ => HarnessError::Validation(msg),
        }
    }
}

pub type HResult<T> = Result<T, HarnessError>;

fn invalid<T>(msg: impl Into<String>) -> HResult<T> {
    Err(HarnessError::Validation(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    Uniform,
    Skewed,
}

impl std::str::FromStr for GenKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(GenKind::Uniform),
            "skewed" => Ok(GenKind::Skewed),
            _ => Err(format!(
                "unknown generator '{s}' (expected uniform or skewed)"
            )),
        }
    }
}

/// Where a score matrix comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSource {
    /// `.csv` files are read as CSV, anything else as the binary format.
    File(PathBuf),
    Gen {
        kind: GenKind,
        n: usize,
        k: usize,
        seed: u64,
        bias: f64,
    },
}

impl MatrixSource {
    pub fn load(&self) -> HResult<ScoreMatrix> {
        Ok(match self {
            MatrixSource::File(p) if p.extension().is_some_and(|e| e == "csv") => {
                datagen::import_matrix_csv(p)?
            }
            MatrixSource::File(p) => datagen::load_matrix(p)?,
            MatrixSource::Gen {
                kind: GenKind::Uniform,
                n,
                k,
                seed,
                ..
            } => datagen::gen_uniform(*n, *k, *seed)?,
            MatrixSource::Gen {
                kind: GenKind::Skewed,
                n,
                k,
                seed,
                bias,
            } => datagen::gen_skewed(*n, *k, *seed, *bias)?,
        })
    }

    fn describe(&self) -> String {
        match self {
            MatrixSource::File(p) => p.display().to_string(),
            MatrixSource::Gen {
                kind: GenKind::Uniform,
                seed,
                ..
            } => format!("uniform seed={seed}"),
            MatrixSource::Gen {
                kind: GenKind::Skewed,
                seed,
                bias,
                ..
            } => {
                format!("skewed seed={seed} bias={bias}")
            }
        }
    }
}

/// `uniform` or `powerlaw:X`.
pub fn parse_target(s: &str) -> Result<TargetSpec, String> {
    if s == "uniform" {
        return Ok(TargetSpec::Uniform);
    }
    match s.strip_prefix("powerlaw:").map(str::parse::<f64>) {
        Some(Ok(x)) if x >= 0.0 && x.is_finite() => Ok(TargetSpec::PowerLaw(x)),
        Some(_) => Err(format!("power-law exponent in '{s}' must be a number >= 0")),
        None => Err(format!(
            "unknown target '{s}' (expected uniform or powerlaw:X)"
        )),
    }
}

fn target_name(t: &TargetSpec) -> String {
    match t {
        TargetSpec::Uniform => "uniform".into(),
        TargetSpec::PowerLaw(x) => format!("powerlaw:{x}"),
        TargetSpec::Explicit(_) => "explicit".into(),
    }
}

fn balance_config(
    beta: f64,
    alpha0: f64,
    max_iters: usize,
    target: TargetSpec,
) -> HResult<BalanceConfig> {
    let config = BalanceConfig {
        alpha_floor: alpha0,
        max_outer_iters: max_iters,
        ..BalanceConfig::default()
    }
    .with_beta(beta)
    .with_target(target);
    config.validate()?;
    Ok(config)
}

fn check_n_k(n: usize, k: usize) -> HResult<()> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if k < 2 {
        return invalid(format!("k must be at least 2, got {k}"));
    }
    Ok(())
}

fn prepare_out(dir: &Path) -> HResult<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> HResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> HResult<()> {
    let io = |e: csv::Error| HarnessError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
pub fn run_parallel<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.unwrap())
        .collect()
}

/// Removes repeated values, keeping first occurrences; returns the repeats.
pub fn dedup_keep_order<T: PartialEq + Copy>(values: &[T]) -> (Vec<T>, Vec<T>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for &v in values {
        if kept.contains(&v) {
            dropped.push(v);
        } else {
            kept.push(v);
        }
    }
    (kept, dropped)
}

// ---------------------------------------------------------------- gen

#[derive(Clone, Debug)]
pub struct GenArgs {
    pub kind: GenKind,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub bias: f64,
    pub csv: bool,
    pub out: PathBuf,
}

/// Writes `matrix.otlm` (or `matrix.csv`) and returns its path.
pub fn cmd_gen(args: &GenArgs) -> HResult<PathBuf> {
    check_n_k(args.n, args.k)?;
    let src = MatrixSource::Gen {
        kind: args.kind,
        n: args.n,
        k: args.k,
        seed: args.seed,
        bias: args.bias,
    };
    let matrix = src.load()?;
    prepare_out(&args.out)?;
    let path = args.out.join(if args.csv {
        "matrix.csv"
    } else {
        "matrix.otlm"
    });
    if args.csv {
        datagen::export_matrix_csv(&path, &matrix)?;
    } else {
        datagen::save_matrix(&path, &matrix)?;
    }
    Ok(path)
}

// ---------------------------------------------------------------- balance

#[derive(Clone, Debug)]
pub struct BalanceArgs {
    pub source: MatrixSource,
    pub beta: f64,
    pub alpha0: f64,
    pub max_iters: usize,
    pub target: TargetSpec,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BalanceSummary {
    pub source: String,
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub alpha0: f64,
    pub target: String,
    pub initial_std: f64,
    pub final_std: f64,
    pub min_achievable_std: f64,
    pub iterations: usize,
    pub improvements: usize,
    pub wall_ms: f64,
}

fn summarize(
    source: String,
    beta: f64,
    alpha0: f64,
    target: &TargetSpec,
    r: &BalanceResult,
    wall_ms: f64,
) -> BalanceSummary {
    BalanceSummary {
        source,
        n: r.labels.len(),
        k: r.net_translation.len(),
        beta,
        alpha0,
        target: target_name(target),
        initial_std: r.trace.entries()[0].std,
        final_std: r.final_std,
        min_achievable_std: r.target.min_achievable_std(),
        iterations: r.iterations,
        improvements: r.improvements,
        wall_ms,
    }
}

fn timed_balance(matrix: &ScoreMatrix, config: &BalanceConfig) -> HResult<(BalanceResult, f64)> {
    let start = Instant::now();
    let r = balance(matrix, config)?;
    Ok((r, ms_since(start)))
}

/// Writes `labels.csv`, `trace.csv` and `summary.json`.
pub fn cmd_balance(args: &BalanceArgs) -> HResult<BalanceSummary> {
    let config = balance_config(args.beta, args.alpha0, args.max_iters, args.target.clone())?;
    let matrix = args.source.load()?;
    config
        .target
        .resolve(matrix.n_samples() as u64, matrix.n_clusters())?;
    let (result, wall_ms) = timed_balance(&matrix, &config)?;
    let summary = summarize(
        args.source.describe(),
        args.beta,
        args.alpha0,
        &args.target,
        &result,
        wall_ms,
    );

    prepare_out(&args.out)?;
    datagen::export_labels_csv(args.out.join("labels.csv"), &result.labels)?;
    datagen::export_trace_csv(args.out.join("trace.csv"), &result.trace)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- sinkhorn

#[derive(Clone, Debug)]
pub struct SinkhornArgs {
    pub source: MatrixSource,
    pub config: SinkhornConfig,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SinkhornSummary {
    pub source: String,
    pub n: usize,
    pub k: usize,
    pub temperature: f64,
    pub tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_deviation: f64,
    pub final_std: f64,
    pub wall_ms: f64,
}

/// Writes `labels.csv` and `summary.json`.
pub fn cmd_sinkhorn(args: &SinkhornArgs) -> HResult<SinkhornSummary> {
    args.config.validate()?;
    let matrix = args.source.load()?;
    let start = Instant::now();
    let r = sinkhorn_balance(&matrix, &args.config)?;
    let wall_ms = ms_since(start);
    let k = matrix.n_clusters();
    let hist = otl_core::histogram(&r.labels, k)?;
    let summary = SinkhornSummary {
        source: args.source.describe(),
        n: matrix.n_samples(),
        k,
        temperature: args.config.temperature,
        tol: args.config.tol,
        iterations: r.scaling.iterations,
        converged: r.scaling.converged,
        max_deviation: r.scaling.max_deviation,
        final_std: uniform_std(&hist),
        wall_ms,
    };
    prepare_out(&args.out)?;
    datagen::export_labels_csv(args.out.join("labels.csv"), &r.labels)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn uniform_std(hist: &ClusterHistogram) -> f64 {
    let target = otl_core::TargetDistribution::uniform(hist.total(), hist.n_clusters());
    otl_core::frequency_indicator(hist, &target)
        .map(|ind| indicator_std(&ind))
        .unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------- compare

#[derive(Clone, Debug)]
pub struct CompareArgs {
    pub n: usize,
    pub ks: Vec<usize>,
    pub seed: u64,
    pub beta: f64,
    pub alpha0: f64,
    pub sinkhorn: SinkhornConfig,
    pub jobs: usize,
    pub out: PathBuf,
}

/// One uniform matrix per k (same seed); writes `comparison.csv`.
pub fn cmd_compare(args: &CompareArgs) -> HResult<Vec<ComparisonRecord>> {
    if args.ks.is_empty() {
        return invalid("k list is empty");
    }
    for &k in &args.ks {
        check_n_k(args.n, k)?;
    }
    let config = balance_config(
        args.beta,
        args.alpha0,
        BalanceConfig::default().max_outer_iters,
        TargetSpec::Uniform,
    )?;
    args.sinkhorn.validate()?;
    let records = run_parallel(&args.ks, args.jobs, |&k| -> HResult<ComparisonRecord> {
        let matrix = datagen::gen_uniform(args.n, k, args.seed)?;
        Ok(compare_balancers(&matrix, &config, &args.sinkhorn)?)
    })
    .into_iter()
    .collect::<HResult<Vec<_>>>()?;
    prepare_out(&args.out)?;
    datagen::export_comparison_csv(args.out.join("comparison.csv"), &records)?;
    Ok(records)
}

// ---------------------------------------------------------------- sweeps

/// Reported in every sweep summary: the matrices are synthetic stand-ins for
/// network outputs, so iteration counts are checked against a loose bound.
const PROXY_NOTE: &str =
    "synthetic proxy matrices; improvement iterations are checked against a bound of 40";

#[derive(Clone, Debug)]
pub struct SweepBetaArgs {
    pub source: MatrixSource,
    pub betas: Vec<f64>,
    pub alpha0: f64,
    pub max_iters: usize,
    pub jobs: usize,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SweepSummary {
    pub note: &'static str,
    pub runs: Vec<BalanceSummary>,
}

/// Every β runs on the same matrix; writes `trace_beta_{β}.csv` per β and
/// `summary.json`.
pub fn cmd_sweep_beta(args: &SweepBetaArgs) -> HResult<SweepSummary> {
    if args.betas.is_empty() {
        return invalid("beta list is empty");
    }
    let (betas, repeated) = dedup_keep_order(&args.betas);
    if !repeated.is_empty() {
        eprintln!("warning: ignoring repeated beta values {repeated:?}");
    }
    let configs = betas
        .iter()
        .map(|&b| balance_config(b, args.alpha0, args.max_iters, TargetSpec::Uniform))
        .collect::<HResult<Vec<_>>>()?;
    let matrix = args.source.load()?;
    let runs = run_parallel(&configs, args.jobs, |c| timed_balance(&matrix, c))
        .into_iter()
        .collect::<HResult<Vec<_>>>()?;

    prepare_out(&args.out)?;
    let mut summaries = Vec::new();
    for ((r, wall_ms), beta) in runs.iter().zip(&betas) {
        datagen::export_trace_csv(args.out.join(format!("trace_beta_{beta}.csv")), &r.trace)?;
        summaries.push(summarize(
            args.source.describe(),
            *beta,
            args.alpha0,
            &TargetSpec::Uniform,
            r,
            *wall_ms,
        ));
    }
    let summary = SweepSummary {
        note: PROXY_NOTE,
        runs: summaries,
    };
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct SweepKArgs {
    pub kind: GenKind,
    pub n: usize,
    pub ks: Vec<usize>,
    pub seed: u64,
    pub bias: f64,
    pub beta: f64,
    pub alpha0: f64,
    pub max_iters: usize,
    pub jobs: usize,
    pub out: PathBuf,
}

/// One generated matrix per k; writes `trace_k_{k}.csv` per k and
/// `summary.json`. Repeated k values run once.
pub fn cmd_sweep_k(args: &SweepKArgs) -> HResult<SweepSummary> {
    if args.ks.is_empty() {
        return invalid("k list is empty");
    }
    let (ks, repeated) = dedup_keep_order(&args.ks);
    if !repeated.is_empty() {
        eprintln!("warning: ignoring repeated k values {repeated:?}");
    }
    for &k in &ks {
        check_n_k(args.n, k)?;
    }
    let config = balance_config(args.beta, args.alpha0, args.max_iters, TargetSpec::Uniform)?;
    let source = |k| MatrixSource::Gen {
        kind: args.kind,
        n: args.n,
        k,
        seed: args.seed,
        bias: args.bias,
    };
    let runs = run_parallel(&ks, args.jobs, |&k| -> HResult<_> {
        let matrix = source(k).load()?;
        timed_balance(&matrix, &config)
    })
    .into_iter()
    .collect::<HResult<Vec<_>>>()?;

    prepare_out(&args.out)?;
    let mut summaries = Vec::new();
    for ((r, wall_ms), &k) in runs.iter().zip(&ks) {
        datagen::export_trace_csv(args.out.join(format!("trace_k_{k}.csv")), &r.trace)?;
        summaries.push(summarize(
            source(k).describe(),
            args.beta,
            args.alpha0,
            &TargetSpec::Uniform,
            r,
            *wall_ms,
        ));
    }
    let summary = SweepSummary {
        note: PROXY_NOTE,
        runs: summaries,
    };
    write_json(&args.out.join("summary.json"), &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- uneven

#[derive(Clone, Debug)]
pub struct UnevenArgs {
    pub source: MatrixSource,
    pub xs: Vec<f64>,
    pub beta: f64,
    pub alpha0: f64,
    pub max_iters: usize,
    pub jobs: usize,
    pub out: PathBuf,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct UnevenRun {
    pub x: f64,
    pub residual_std: f64,
    pub max_abs_diff: f64,
    pub counts: Vec<u64>,
    pub iterations: usize,
    pub improvements: usize,
    pub wall_ms: f64,
}

/// Per exponent `x`: `target_x_{x}.csv` (cluster,target) and
/// `histogram_x_{x}.csv` (cluster,count,target,abs_diff), plus
/// `summary.json`.
pub fn cmd_uneven(args: &UnevenArgs) -> HResult<Vec<UnevenRun>> {
    if args.xs.is_empty() {
        return invalid("x list is empty");
    }
    if let Some(x) = args.xs.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return invalid(format!("power-law exponent must be >= 0, got {x}"));
    }
    let (xs, repeated) = dedup_keep_order(&args.xs);
    if !repeated.is_empty() {
        eprintln!("warning: ignoring repeated x values {repeated:?}");
    }
    let configs = xs
        .iter()
        .map(|&x| {
            balance_config(
                args.beta,
                args.alpha0,
                args.max_iters,
                TargetSpec::PowerLaw(x),
            )
        })
        .collect::<HResult<Vec<_>>>()?;
    let matrix = args.source.load()?;
    let results = run_parallel(&configs, args.jobs, |c| timed_balance(&matrix, c))
        .into_iter()
        .collect::<HResult<Vec<_>>>()?;

    prepare_out(&args.out)?;
    let mut runs = Vec::new();
    for ((r, wall_ms), &x) in results.iter().zip(&xs) {
        let targets = r.target.targets();
        let hist = r.histogram();
        let diffs: Vec<f64> = hist
            .counts()
            .iter()
            .zip(targets)
            .map(|(&c, &t)| (c as f64 - t).abs())
            .collect();
        write_csv(
            &args.out.join(format!("target_x_{x}.csv")),
            &["cluster", "target"],
            targets
                .iter()
                .enumerate()
                .map(|(i, t)| vec![i.to_string(), format_sig9(*t)]),
        )?;
        write_csv(
            &args.out.join(format!("histogram_x_{x}.csv")),
            &["cluster", "count", "target", "abs_diff"],
            hist.counts()
                .iter()
                .zip(targets)
                .zip(&diffs)
                .enumerate()
                .map(|(i, ((c, t), d))| {
                    vec![
                        i.to_string(),
                        c.to_string(),
                        format_sig9(*t),
                        format_sig9(*d),
                    ]
                }),
        )?;
        runs.push(UnevenRun {
            x,
            residual_std: r.final_std,
            max_abs_diff: diffs.iter().cloned().fold(0.0, f64::max),
            counts: hist.counts().to_vec(),
            iterations: r.iterations,
            improvements: r.improvements,
            wall_ms: *wall_ms,
        });
    }
    write_json(&args.out.join("summary.json"), &runs)?;
    Ok(runs)
}

// ---------------------------------------------------------------- timing

#[derive(Clone, Debug)]
pub struct TimingArgs {
    pub n: usize,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub beta: f64,
    pub alpha0: f64,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TimingReport {
    pub n: usize,
    pub k: usize,
    pub beta: f64,
    pub repeats: usize,
    pub seeds: Vec<u64>,
    pub times_ms: Vec<f64>,
    pub median_ms: f64,
    pub final_stds: Vec<f64>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Repeat `r` balances a fresh uniform matrix generated from `seed + r`;
/// only the balance call is timed. Writes `timing.json` when `out` is set.
pub fn cmd_timing(args: &TimingArgs) -> HResult<TimingReport> {
    if args.repeats == 0 {
        return invalid("repeats must be at least 1");
    }
    check_n_k(args.n, args.k)?;
    let config = balance_config(
        args.beta,
        args.alpha0,
        BalanceConfig::default().max_outer_iters,
        TargetSpec::Uniform,
    )?;
    let seeds: Vec<u64> = (0..args.repeats as u64)
        .map(|r| args.seed.wrapping_add(r))
        .collect();
    let mut times_ms = Vec::new();
    let mut final_stds = Vec::new();
    for &seed in &seeds {
        let matrix = datagen::gen_uniform(args.n, args.k, seed)?;
        let (r, ms) = timed_balance(&matrix, &config)?;
        times_ms.push(ms);
        final_stds.push(r.final_std);
    }
    let report = TimingReport {
        n: args.n,
        k: args.k,
        beta: args.beta,
        repeats: args.repeats,
        seeds,
        median_ms: median(&times_ms),
        times_ms,
        final_stds,
    };
    if let Some(out) = &args.out {
        prepare_out(out)?;
        write_json(&out.join("timing.json"), &report)?;
    }
    Ok(report)
}

// ---------------------------------------------------------------- metrics

#[derive(Clone, Debug)]
pub enum HistogramSource {
    /// Comma-separated counts; negative entries are rejected.
    Inline(String),
    /// A `sample,label` CSV; `k` defaults to one past the largest label.
    Labels { path: PathBuf, k: Option<usize> },
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct MetricsReport {
    pub counts: Vec<u64>,
    pub n_ind: String,
    pub n_dis: String,
    pub total: String,
    pub std_form_check: bool,
    pub is_most_discriminative: bool,
}

pub fn parse_counts(s: &str) -> HResult<Vec<u64>> {
    let counts = s
        .split(',')
        .map(|f| {
            let f = f.trim();
            match f.parse::<i128>() {
                Ok(v) if v < 0 => Err(HarnessError::Validation(format!("negative count {v}"))),
                Ok(v) => u64::try_from(v)
                    .map_err(|_| HarnessError::Validation(format!("count {v} is too large"))),
                Err(_) => Err(HarnessError::Validation(format!("'{f}' is not a count"))),
            }
        })
        .collect::<HResult<Vec<_>>>()?;
    if counts.is_empty() {
        return invalid("no counts given");
    }
    Ok(counts)
}

pub fn metrics_for(hist: &ClusterHistogram) -> MetricsReport {
    let r = DiscrimReport::from_histogram(hist);
    MetricsReport {
        counts: hist.counts().to_vec(),
        n_ind: r.n_ind.to_string(),
        n_dis: r.n_dis.to_string(),
        total: r.total_pairs.to_string(),
        std_form_check: r.std_form_check,
        is_most_discriminative: r.most_discriminative,
    }
}

/// Pair counts are emitted as decimal strings since they can exceed 2^53.
pub fn cmd_metrics(source: &HistogramSource, out: Option<&Path>) -> HResult<MetricsReport> {
    let hist = match source {
        HistogramSource::Inline(s) => ClusterHistogram::from_counts(parse_counts(s)?),
        HistogramSource::Labels { path, k } => {
            let labels = datagen::import_labels_csv(path)?;
            let k = match k {
                Some(k) => *k,
                None => labels.as_slice().iter().max().map_or(1, |m| m + 1),
            };
            otl_core::histogram(&labels, k)?
        }
    };
    let report = metrics_for(&hist);
    if let Some(out) = out {
        prepare_out(out)?;
        write_json(&out.join("metrics.json"), &report)?;
    }
    Ok(report)
}

/// Brute-force reference for the equal-size assignment count: the number of
/// set partitions of `n` labeled items into `k` unlabeled blocks of `n / k`.
pub fn brute_force_even_partitions(n: usize, k: usize) -> u64 {
    fn go(
        block_of: &mut Vec<usize>,
        sizes: &mut Vec<usize>,
        n: usize,
        k: usize,
        cap: usize,
    ) -> u64 {
        let i = block_of.len();
        if i == n {
            return u64::from(sizes.len() == k && sizes.iter().all(|&s| s == cap));
        }
        let mut total = 0;
        // Item i joins an existing block or opens the next one; opening
        // blocks in order counts each unlabeled partition once.
        for b in 0..=sizes.len().min(k - 1) {
            if b == sizes.len() {
                sizes.push(0);
            }
            if sizes[b] < cap {
                sizes[b] += 1;
                block_of.push(b);
                total += go(block_of, sizes, n, k, cap);
                block_of.pop();
                sizes[b] -= 1;
            }
            if sizes[b] == 0 {
                sizes.pop();
            }
        }
        total
    }
    if k == 0 || !n.is_multiple_of(k) {
        return 0;
    }
    go(&mut Vec::new(), &mut Vec::new(), n, k, n / k)
}

pub use discrim::count_even_assignments;

// ---------------------------------------------------------------- knn

#[derive(Clone, Debug)]
pub struct KnnEvalArgs {
    pub n: usize,
    pub dim: usize,
    pub classes: usize,
    /// Blob std as a fraction of the minimum center distance.
    pub spread_ratio: f64,
    pub train_fraction: f64,
    pub knn: KnnConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KnnReport {
    pub n_train: usize,
    pub n_query: usize,
    pub dim: usize,
    pub classes: usize,
    pub spread: f64,
    pub neighbors: usize,
    pub sigma: f64,
    pub accuracy: f64,
}

/// Generates blobs, trains on the first `train_fraction` of samples and
/// queries the rest. Blob labels cycle through classes, so both parts cover
/// every class.
pub fn cmd_knn_eval(args: &KnnEvalArgs) -> HResult<KnnReport> {
    args.knn.validate()?;
    if !args.spread_ratio.is_finite() || args.spread_ratio <= 0.0 {
        return invalid(format!(
            "spread ratio must be positive, got {}",
            args.spread_ratio
        ));
    }
    if !(args.train_fraction > 0.0 && args.train_fraction < 1.0) {
        return invalid(format!(
            "train fraction must lie in (0, 1), got {}",
            args.train_fraction
        ));
    }
    let n_train = (args.n as f64 * args.train_fraction).round() as usize;
    if n_train == 0 || n_train >= args.n {
        return invalid(format!("n = {} leaves an empty train or query set", args.n));
    }
    let centers = datagen::blob_centers(args.dim, args.classes, args.seed)?;
    let spread = datagen::min_center_distance(&centers) * args.spread_ratio;
    let blobs = datagen::gen_blobs(args.n, args.dim, args.classes, spread, args.seed)?;
    let train_idx: Vec<usize> = (0..n_train).collect();
    let query_idx: Vec<usize> = (n_train..args.n).collect();
    let train = blobs.features.select(&train_idx);
    let query = blobs.features.select(&query_idx);
    let predicted = weighted_knn_predict(
        &train,
        &blobs.labels[..n_train],
        &query,
        &args.knn,
        args.classes,
    )?;
    let correct = predicted
        .iter()
        .zip(&blobs.labels[n_train..])
        .filter(|(p, l)| p == l)
        .count();
    let report = KnnReport {
        n_train,
        n_query: query_idx.len(),
        dim: args.dim,
        classes: args.classes,
        spread,
        neighbors: args.knn.neighbors,
        sigma: args.knn.sigma,
        accuracy: correct as f64 / query_idx.len() as f64,
    };
    if let Some(out) = &args.out {
        prepare_out(out)?;
        write_json(&out.join("knn.json"), &report)?;
    }
    Ok(report)
}
