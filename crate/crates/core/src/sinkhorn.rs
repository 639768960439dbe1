//! Sinkhorn-Knopp row/column scaling, the soft-marginal balancing baseline.
//!
//! Scores are mapped to a positive matrix with a row softmax at temperature
//! `lambda`, then rows are rescaled to sum `1/N` and columns to `1/k` in turn.
//! The result has the form `r_s * c_i * P[s][i]`. Labels are the row argmax of
//! the scaled matrix.

use std::time::Instant;

use crate::balancer::{balance, BalanceConfig, TargetSpec};
use crate::error::{Error, Result};
use crate::matrix::{argmax, population_std, ScoreMatrix};
use crate::LabelVector;

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornConfig {
    pub max_iters: usize,
    /// Largest tolerated absolute deviation of any row or column sum.
    pub tol: f64,
    /// Softmax temperature used to make the input positive.
    pub temperature: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-8,
            temperature: 1.0,
        }
    }
}

impl SinkhornConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("sinkhorn max_iters must be at least 1"));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::invalid(format!(
                "sinkhorn tol must be positive, got {}",
                self.tol
            )));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(Error::invalid(format!(
                "sinkhorn temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// Row and column factors found by the scaling iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute deviation of a row or column sum from its target at exit.
    pub max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornResult {
    pub n_samples: usize,
    pub n_clusters: usize,
    /// Row-softmax of the scores, row-major.
    pub preprocessed: Vec<f64>,
    /// `row_scale[s] * col_scale[i] * preprocessed[s][i]`, row-major.
    pub scaled: Vec<f64>,
    pub scaling: Scaling,
    pub labels: LabelVector,
}

impl SinkhornResult {
    pub fn scaled_row(&self, s: usize) -> &[f64] {
        &self.scaled[s * self.n_clusters..(s + 1) * self.n_clusters]
    }

    pub fn preprocessed_row(&self, s: usize) -> &[f64] {
        &self.preprocessed[s * self.n_clusters..(s + 1) * self.n_clusters]
    }

    pub fn iterations(&self) -> usize {
        self.scaling.iterations
    }
}

/// Row softmax of `values / temperature`, with max subtraction.
pub fn preprocess(matrix: &ScoreMatrix, temperature: f64) -> Result<Vec<f64>> {
    let k = matrix.n_clusters();
    let mut out = Vec::with_capacity(matrix.values().len());
    for (s, row) in matrix.rows().enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = out.len();
        out.extend(row.iter().map(|v| ((v - max) / temperature).exp()));
        let sum: f64 = out[start..].iter().sum();
        for (i, p) in out[start..].iter_mut().enumerate() {
            *p /= sum;
            if !p.is_finite() || *p <= 0.0 {
                return Err(Error::SinkhornBreakdown(format!(
                    "preprocessed entry ({s}, {i}) is {p} at temperature {temperature}"
                )));
            }
        }
    }
    debug_assert_eq!(out.len(), matrix.n_samples() * k);
    Ok(out)
}

/// Alternately rescale columns to sum `1/k` and rows to sum `1/N` until every
/// marginal is within `tol`, or `max_iters` passes have run.
pub fn sinkhorn_scale(p: &[f64], n: usize, k: usize, config: &SinkhornConfig) -> Result<Scaling> {
    config.validate()?;
    if n == 0 || k == 0 || p.len() != n * k {
        return Err(Error::DimensionMismatch {
            what: "positive matrix entries",
            expected: n * k,
            actual: p.len(),
        });
    }
    if let Some(pos) = p.iter().position(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::SinkhornBreakdown(format!(
            "entry ({}, {}) is not strictly positive",
            pos / k,
            pos % k
        )));
    }
    let row_target = 1.0 / n as f64;
    let col_target = 1.0 / k as f64;
    let mut row_scale = vec![1.0; n];
    let mut col_scale = vec![1.0; k];
    let mut col_sums = vec![0.0; k];
    let mut iterations = 0;
    let mut max_deviation = f64::INFINITY;

    while iterations < config.max_iters {
        iterations += 1;

        column_sums(p, k, &row_scale, &col_scale, &mut col_sums);
        for (c, sum) in col_scale.iter_mut().zip(&col_sums) {
            *c *= col_target / sum;
        }
        for (r, row) in row_scale.iter_mut().zip(p.chunks_exact(k)) {
            let sum: f64 = row.iter().zip(&col_scale).map(|(v, c)| v * c).sum::<f64>() * *r;
            *r *= row_target / sum;
        }
        if row_scale
            .iter()
            .chain(&col_scale)
            .any(|x| !x.is_finite() || *x <= 0.0)
        {
            return Err(Error::SinkhornBreakdown(format!(
                "scale factor left the positive finite range after {iterations} iterations"
            )));
        }

        max_deviation = marginal_deviation(p, k, &row_scale, &col_scale, &mut col_sums);
        if max_deviation < config.tol {
            break;
        }
    }

    Ok(Scaling {
        row_scale,
        col_scale,
        iterations,
        converged: max_deviation < config.tol,
        max_deviation,
    })
}

fn column_sums(p: &[f64], k: usize, row_scale: &[f64], col_scale: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (row, r) in p.chunks_exact(k).zip(row_scale) {
        for (acc, v) in out.iter_mut().zip(row) {
            *acc += r * v;
        }
    }
    for (acc, c) in out.iter_mut().zip(col_scale) {
        *acc *= c;
    }
}

fn marginal_deviation(
    p: &[f64],
    k: usize,
    row_scale: &[f64],
    col_scale: &[f64],
    col_sums: &mut [f64],
) -> f64 {
    let n = row_scale.len();
    let row_target = 1.0 / n as f64;
    let col_target = 1.0 / k as f64;
    let row_dev = p
        .chunks_exact(k)
        .zip(row_scale)
        .map(|(row, r)| {
            let sum: f64 = row.iter().zip(col_scale).map(|(v, c)| v * c).sum::<f64>() * r;
            (sum - row_target).abs()
        })
        .fold(0.0, f64::max);
    column_sums(p, k, row_scale, col_scale, col_sums);
    let col_dev = col_sums
        .iter()
        .map(|s| (s - col_target).abs())
        .fold(0.0, f64::max);
    row_dev.max(col_dev)
}

pub fn sinkhorn_balance(matrix: &ScoreMatrix, config: &SinkhornConfig) -> Result<SinkhornResult> {
    config.validate()?;
    let (n, k) = (matrix.n_samples(), matrix.n_clusters());
    let preprocessed = preprocess(matrix, config.temperature)?;
    let scaling = sinkhorn_scale(&preprocessed, n, k, config)?;
    let scaled: Vec<f64> = preprocessed
        .chunks_exact(k)
        .zip(&scaling.row_scale)
        .flat_map(|(row, r)| {
            row.iter()
                .zip(&scaling.col_scale)
                .map(move |(v, c)| r * c * v)
        })
        .collect();
    let labels = LabelVector::new(scaled.chunks_exact(k).map(argmax).collect());
    Ok(SinkhornResult {
        n_samples: n,
        n_clusters: k,
        preprocessed,
        scaled,
        scaling,
        labels,
    })
}

/// Head-to-head evenness of the two balancers on one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRecord {
    pub n: usize,
    pub k: usize,
    pub std_otl: f64,
    pub std_sk: f64,
    pub iters_otl: usize,
    pub iters_sk: usize,
    pub wall_ms_otl: f64,
    pub wall_ms_sk: f64,
}

/// Runs both balancers against the uniform target and measures the argmax
/// histogram std of each.
pub fn compare_balancers(
    matrix: &ScoreMatrix,
    otl_config: &BalanceConfig,
    sk_config: &SinkhornConfig,
) -> Result<ComparisonRecord> {
    let otl_config = otl_config.clone().with_target(TargetSpec::Uniform);
    let (n, k) = (matrix.n_samples(), matrix.n_clusters());

    let start = Instant::now();
    let otl = balance(matrix, &otl_config)?;
    let wall_ms_otl = start.elapsed().as_secs_f64() * 1e3;

    let start = Instant::now();
    let sk = sinkhorn_balance(matrix, sk_config)?;
    let wall_ms_sk = start.elapsed().as_secs_f64() * 1e3;

    Ok(ComparisonRecord {
        n,
        k,
        std_otl: otl.final_std,
        std_sk: uniform_label_std(&sk.labels, n, k),
        iters_otl: otl.iterations,
        iters_sk: sk.iterations(),
        wall_ms_otl,
        wall_ms_sk,
    })
}

fn uniform_label_std(labels: &LabelVector, n: usize, k: usize) -> f64 {
    let mut counts = vec![0u64; k];
    for &l in labels.as_slice() {
        counts[l] += 1;
    }
    let mean = n as f64 / k as f64;
    let deltas: Vec<f64> = counts.iter().map(|&c| c as f64 - mean).collect();
    population_std(&deltas)
}
