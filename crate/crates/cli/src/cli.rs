use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use otl_core::{KnnConfig, SinkhornConfig, TargetSpec};

use crate::harness::{self, GenKind, HResult, HarnessError, HistogramSource, MatrixSource};

#[derive(Debug, Parser)]
#[command(
    name = "otl",
    version,
    about = "Balance argmax cluster assignments by output translation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Balance one matrix; writes labels.csv, trace.csv, summary.json.
    Balance(BalanceCmd),
    /// Sinkhorn-Knopp baseline on one matrix; writes labels.csv, summary.json.
    Sinkhorn(SinkhornCmd),
    /// Both balancers on a uniform matrix per k; writes comparison.csv.
    Compare(CompareCmd),
    /// One trace per decay rate on a shared matrix.
    SweepBeta(SweepBetaCmd),
    /// One trace per cluster count.
    SweepK(SweepKCmd),
    /// Balance toward power-law targets.
    Uneven(UnevenCmd),
    /// Median wall time of balance over fresh matrices.
    Timing(TimingCmd),
    /// Pair-count metrics of a histogram.
    Metrics(MetricsCmd),
    /// Weighted kNN accuracy on Gaussian blobs.
    KnnEval(KnnEvalCmd),
    /// Write a generated matrix to disk.
    Gen(GenCmd),
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Matrix file (.csv or binary).
    #[arg(long, conflicts_with = "gen")]
    pub input: Option<PathBuf>,
    /// Generator used when no --input is given.
    #[arg(long, default_value = "uniform")]
    pub gen: GenKind,
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    #[arg(long, default_value_t = 128)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Column bias for --gen skewed.
    #[arg(long, default_value_t = 0.5)]
    pub bias: f64,
}

impl SourceArgs {
    fn source(&self) -> MatrixSource {
        match &self.input {
            Some(p) => MatrixSource::File(p.clone()),
            None => MatrixSource::Gen {
                kind: self.gen,
                n: self.n,
                k: self.k,
                seed: self.seed,
                bias: self.bias,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    /// Step-size floor that ends the loop.
    #[arg(long, default_value_t = 1e-15)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct BalanceCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub step: StepArgs,
    /// uniform or powerlaw:X
    #[arg(long, default_value = "uniform", value_parser = harness::parse_target)]
    pub target: TargetSpec,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SinkhornArgs {
    #[arg(long, default_value_t = 1000)]
    pub sk_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub sk_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
}

impl SinkhornArgs {
    fn config(&self) -> SinkhornConfig {
        SinkhornConfig {
            max_iters: self.sk_iters,
            tol: self.sk_tol,
            temperature: self.temperature,
        }
    }
}

#[derive(Debug, Args)]
pub struct SinkhornCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub sinkhorn: SinkhornArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareCmd {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Comma-separated cluster counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub step: StepArgs,
    #[command(flatten)]
    pub sinkhorn: SinkhornArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepBetaCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Comma-separated decay rates.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,3,4,5,6")]
    pub betas: Vec<f64>,
    #[arg(long, default_value_t = 1e-15)]
    pub alpha0: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepKCmd {
    #[arg(long, default_value = "uniform")]
    pub gen: GenKind,
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    /// Comma-separated cluster counts; repeats are dropped with a warning.
    #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub bias: f64,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct UnevenCmd {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Comma-separated power-law exponents.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,2,4,6,8,10",
        allow_negative_numbers = true
    )]
    pub xs: Vec<f64>,
    #[command(flatten)]
    pub step: StepArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TimingCmd {
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 512)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-15)]
    pub alpha0: f64,
    /// Also write timing.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsCmd {
    /// Comma-separated cluster sizes, e.g. 4,0,0,0.
    #[arg(long, conflicts_with = "labels", allow_hyphen_values = true)]
    pub counts: Option<String>,
    /// A sample,label CSV.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Cluster count for --labels; defaults to one past the largest label.
    #[arg(long)]
    pub k: Option<usize>,
    /// Also write metrics.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KnnEvalCmd {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    /// Blob std as a fraction of the minimum center distance.
    #[arg(long, default_value_t = 0.1)]
    pub spread_ratio: f64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 50)]
    pub neighbors: usize,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenCmd {
    #[arg(long, default_value = "uniform")]
    pub gen: GenKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub bias: f64,
    /// Write CSV instead of the binary format.
    #[arg(long)]
    pub csv: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

/// Executes one command, printing its summary to stdout.
pub fn run(cli: Cli) -> HResult<()> {
    match cli.command {
        Command::Balance(c) => print_json(&harness::cmd_balance(&harness::BalanceArgs {
            source: c.source.source(),
            beta: c.step.beta,
            alpha0: c.step.alpha0,
            max_iters: c.step.max_iters,
            target: c.target,
            out: c.out,
        })?),
        Command::Sinkhorn(c) => print_json(&harness::cmd_sinkhorn(&harness::SinkhornArgs {
            source: c.source.source(),
            config: c.sinkhorn.config(),
            out: c.out,
        })?),
        Command::Compare(c) => {
            let records = harness::cmd_compare(&harness::CompareArgs {
                n: c.n,
                ks: c.ks,
                seed: c.seed,
                beta: c.step.beta,
                alpha0: c.step.alpha0,
                sinkhorn: c.sinkhorn.config(),
                jobs: c.jobs,
                out: c.out.clone(),
            })?;
            let wins = records.iter().filter(|r| r.std_otl <= r.std_sk).count();
            println!(
                "{}: otl at least as even in {wins} of {} rows",
                c.out.join("comparison.csv").display(),
                records.len()
            );
        }
        Command::SweepBeta(c) => print_json(&harness::cmd_sweep_beta(&harness::SweepBetaArgs {
            source: c.source.source(),
            betas: c.betas,
            alpha0: c.alpha0,
            max_iters: c.max_iters,
            jobs: c.jobs,
            out: c.out,
        })?),
        Command::SweepK(c) => print_json(&harness::cmd_sweep_k(&harness::SweepKArgs {
            kind: c.gen,
            n: c.n,
            ks: c.ks,
            seed: c.seed,
            bias: c.bias,
            beta: c.step.beta,
            alpha0: c.step.alpha0,
            max_iters: c.step.max_iters,
            jobs: c.jobs,
            out: c.out,
        })?),
        Command::Uneven(c) => print_json(&harness::cmd_uneven(&harness::UnevenArgs {
            source: c.source.source(),
            xs: c.xs,
            beta: c.step.beta,
            alpha0: c.step.alpha0,
            max_iters: c.step.max_iters,
            jobs: c.jobs,
            out: c.out,
        })?),
        Command::Timing(c) => print_json(&harness::cmd_timing(&harness::TimingArgs {
            n: c.n,
            k: c.k,
            repeats: c.repeats,
            seed: c.seed,
            beta: c.beta,
            alpha0: c.alpha0,
            out: c.out,
        })?),
        Command::Metrics(c) => {
            let source = match (c.counts, c.labels) {
                (Some(counts), None) => HistogramSource::Inline(counts),
                (None, Some(path)) => HistogramSource::Labels { path, k: c.k },
                _ => {
                    return Err(HarnessError::Validation(
                        "metrics needs exactly one of --counts or --labels".into(),
                    ))
                }
            };
            print_json(&harness::cmd_metrics(&source, c.out.as_deref())?)
        }
        Command::KnnEval(c) => print_json(&harness::cmd_knn_eval(&harness::KnnEvalArgs {
            n: c.n,
            dim: c.dim,
            classes: c.classes,
            spread_ratio: c.spread_ratio,
            train_fraction: c.train_fraction,
            knn: KnnConfig {
                neighbors: c.neighbors,
                sigma: c.sigma,
            },
            seed: c.seed,
            out: c.out,
        })?),
        Command::Gen(c) => {
            let path = harness::cmd_gen(&harness::GenArgs {
                kind: c.gen,
                n: c.n,
                k: c.k,
                seed: c.seed,
                bias: c.bias,
                csv: c.csv,
                out: c.out,
            })?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
