//! Pairwise discriminativeness of a clustering.
//!
//! Of the `N(N-1)/2` pairs of samples, a pair in the same cluster is
//! indistinguishable and a pair split across clusters is distinguishable.
//! All counts are exact; `N` in the millions already puts pair counts near
//! `10^12`.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::ClusterHistogram;

/// `N(N-1)/2`.
pub fn total_pairs(n: u64) -> BigUint {
    choose2(n)
}

fn choose2(n: u64) -> BigUint {
    let n = n as u128;
    BigUint::from(n * n.saturating_sub(1) / 2)
}

/// Pairs that share a cluster: `sum_i C(n_i, 2)`.
pub fn n_ind(hist: &ClusterHistogram) -> BigUint {
    hist.counts().iter().map(|&c| choose2(c)).sum()
}

/// The same count via `(sum_i n_i^2 - N) / 2`.
pub fn n_ind_from_squares(hist: &ClusterHistogram) -> BigUint {
    let squares: BigUint = hist
        .counts()
        .iter()
        .map(|&c| BigUint::from(c) * BigUint::from(c))
        .sum();
    (squares - BigUint::from(hist.total())) >> 1u32
}

/// The same count via the spread about the mean,
/// `(sum_i (n_i - N/k)^2 + N^2/k - N) / 2`, in exact rationals.
pub fn n_ind_std_form(hist: &ClusterHistogram) -> BigRational {
    let k = BigInt::from(hist.n_clusters());
    let n = BigInt::from(hist.total());
    // sum_i (n_i - N/k)^2 = sum_i (k n_i - N)^2 / k^2, kept integral until the end.
    let scaled: BigInt = hist
        .counts()
        .iter()
        .map(|&c| {
            let d = &k * BigInt::from(c) - &n;
            &d * &d
        })
        .sum();
    let spread = BigRational::new(scaled, &k * &k);
    let mean_term = BigRational::new(&n * &n, k);
    (spread + mean_term - BigRational::from_integer(n)) / BigRational::from_integer(2.into())
}

/// Pairs split across clusters: `sum_{i<j} n_i n_j`.
pub fn n_dis(hist: &ClusterHistogram) -> BigUint {
    let mut suffix = BigUint::from(hist.total());
    let mut acc = BigUint::zero();
    for &c in hist.counts() {
        suffix -= c;
        acc += BigUint::from(c) * &suffix;
    }
    acc
}

/// True iff cluster sizes differ by at most one, the most even split of `N`
/// into `k` clusters and the unique minimizer of [`n_ind`] up to permutation.
pub fn is_most_discriminative(hist: &ClusterHistogram) -> bool {
    let counts = hist.counts();
    match (counts.iter().max(), counts.iter().min()) {
        (Some(max), Some(min)) => max - min <= 1,
        _ => true,
    }
}

fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Number of ways to split `n` distinct samples into `k` unlabeled clusters
/// of equal size `n / k`: `N! / ((N/k)!^k k!)`.
pub fn count_even_assignments(n: u64, k: u64) -> Result<BigUint> {
    if k == 0 {
        return Err(Error::invalid("cluster count must be at least 1"));
    }
    if !n.is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "{k} clusters do not divide {n} samples evenly; the equal-size count only exists when k divides N"
        )));
    }
    let block = factorial(n / k);
    let denom = (0..k).fold(BigUint::one(), |acc, _| acc * &block) * factorial(k);
    Ok(factorial(n) / denom)
}

/// `Greater` when `a` is more discriminative (more distinguishable pairs)
/// than `b`.
pub fn compare_discriminativeness(a: &ClusterHistogram, b: &ClusterHistogram) -> Result<Ordering> {
    if a.total() != b.total() {
        return Err(Error::invalid(format!(
            "histograms cover different sample counts ({} vs {})",
            a.total(),
            b.total()
        )));
    }
    Ok(n_dis(a).cmp(&n_dis(b)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiscrimReport {
    pub n_ind: BigUint,
    pub n_dis: BigUint,
    pub total_pairs: BigUint,
    /// The direct, squared-count and spread forms of `n_ind` agree exactly.
    pub std_form_check: bool,
    pub most_discriminative: bool,
}

impl DiscrimReport {
    pub fn from_histogram(hist: &ClusterHistogram) -> Self {
        let ind = n_ind(hist);
        let std_form_check = n_ind_from_squares(hist) == ind
            && n_ind_std_form(hist) == BigRational::from_integer(ind.clone().into());
        Self {
            n_dis: n_dis(hist),
            total_pairs: total_pairs(hist.total()),
            most_discriminative: is_most_discriminative(hist),
            std_form_check,
            n_ind: ind,
        }
    }
}
