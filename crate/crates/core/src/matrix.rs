//! Score matrices, winner-takes-all assignment and the spread statistics
//! that drive the balancer.
//!
//! A [`ScoreMatrix`] is never mutated by balancing. Translation is carried as a
//! separate k-vector and subtracted on the fly, so the effective row of sample
//! `s` is always `values[s] - t` evaluated fresh from the original data.

use crate::error::{Error, Result};

/// Dense row-major `N x k` matrix of finite scores, one row per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    n_samples: usize,
    n_clusters: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(n_samples: usize, n_clusters: usize, values: Vec<f64>) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::invalid("score matrix needs at least one sample"));
        }
        if n_clusters < 2 {
            return Err(Error::invalid(format!(
                "score matrix needs at least two clusters, got {n_clusters}"
            )));
        }
        let expected = n_samples
            .checked_mul(n_clusters)
            .ok_or_else(|| Error::invalid("matrix dimensions overflow"))?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / n_clusters,
                col: pos % n_clusters,
            });
        }
        Ok(Self {
            n_samples,
            n_clusters,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let k = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * k);
        for row in rows {
            let row = row.as_ref();
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    what: "columns per row",
                    expected: k,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), k, values)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_clusters..(s + 1) * self.n_clusters]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_clusters)
    }

    /// Row `s` as seen after subtracting `translation` from every output.
    pub fn translated_row(&self, s: usize, translation: &[f64]) -> Vec<f64> {
        self.row(s)
            .iter()
            .zip(translation)
            .map(|(v, t)| v - t)
            .collect()
    }
}

/// One cluster index per sample.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl From<Vec<usize>> for LabelVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Per-cluster sample counts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClusterHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl ClusterHistogram {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n_clusters(&self) -> usize {
        self.counts.len()
    }
}

/// Desired per-cluster counts. Entries are real so that `N / k` need not be
/// an integer.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetDistribution {
    targets: Vec<f64>,
}

const TARGET_SUM_TOL: f64 = 1e-6;

impl TargetDistribution {
    /// Validates that every target is finite and non-negative and that the
    /// targets sum to `n` within `1e-6`.
    pub fn new(targets: Vec<f64>, n: u64) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::invalid(
                "target distribution must have at least one cluster",
            ));
        }
        if let Some(t) = targets.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::invalid(format!(
                "target {t} is not a finite non-negative count"
            )));
        }
        let sum: f64 = targets.iter().sum();
        if (sum - n as f64).abs() > TARGET_SUM_TOL {
            return Err(Error::invalid(format!(
                "targets sum to {sum}, expected {n}"
            )));
        }
        Ok(Self { targets })
    }

    /// `N / k` in every cluster.
    pub fn uniform(n: u64, k: usize) -> Self {
        Self {
            targets: vec![n as f64 / k as f64; k],
        }
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn n_clusters(&self) -> usize {
        self.targets.len()
    }

    pub fn total(&self) -> f64 {
        self.targets.iter().sum()
    }

    /// Smallest indicator std any integer histogram with the same total can
    /// reach against these targets.
    ///
    /// Minimizing `sum (n_i - t_i)^2` under `sum n_i = N` is solved by flooring
    /// every target and handing the leftover units to the largest fractional
    /// parts.
    pub fn min_achievable_std(&self) -> f64 {
        let n = self.total().round() as i64;
        let mut counts: Vec<i64> = self.targets.iter().map(|t| t.floor() as i64).collect();
        let assigned: i64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..self.targets.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = self.targets[a] - self.targets[a].floor();
            let fb = self.targets[b] - self.targets[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let leftover = (n - assigned).max(0) as usize;
        for &i in order.iter().cycle().take(leftover) {
            counts[i] += 1;
        }
        let deltas: Vec<f64> = counts
            .iter()
            .zip(&self.targets)
            .map(|(&c, t)| c as f64 - t)
            .collect();
        population_std(&deltas)
    }
}

/// Per-cluster count minus target. Positive entries mark directions that win
/// too often.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyIndicator {
    deltas: Vec<f64>,
}

impl FrequencyIndicator {
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }
}

/// Index of the largest translated score; the lowest index wins ties.
#[inline]
pub(crate) fn argmax_translated(row: &[f64], translation: &[f64]) -> usize {
    let (max, _) = top_two_translated(row, translation);
    first_index_of(row, translation, max)
}

const LANES: usize = 8;

/// Largest and second-largest of `row - translation`, counting repeats, so a
/// tie at the top gives equal values. Lane-wise compare-selects (inputs are
/// finite) let the scan vectorize.
#[inline]
pub(crate) fn top_two_translated(row: &[f64], translation: &[f64]) -> (f64, f64) {
    let mut m1 = [f64::NEG_INFINITY; LANES];
    let mut m2 = [f64::NEG_INFINITY; LANES];
    let (rows, row_tail) = row.as_chunks::<LANES>();
    let (ts, t_tail) = translation.as_chunks::<LANES>();
    for (r, t) in rows.iter().zip(ts) {
        for j in 0..LANES {
            let x = r[j] - t[j];
            let lo = if x > m1[j] { m1[j] } else { x };
            m2[j] = if lo > m2[j] { lo } else { m2[j] };
            m1[j] = if x > m1[j] { x } else { m1[j] };
        }
    }
    let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut push = |x: f64| {
        let lo = if x > top { top } else { x };
        second = if lo > second { lo } else { second };
        top = if x > top { x } else { top };
    };
    m1.into_iter().chain(m2).for_each(&mut push);
    row_tail.iter().zip(t_tail).for_each(|(v, t)| push(v - t));
    (top, second)
}

/// Lowest index whose translated value equals `value`.
#[inline]
fn first_index_of(row: &[f64], translation: &[f64], value: f64) -> usize {
    row.iter()
        .zip(translation)
        .position(|(v, t)| v - t == value)
        .expect("value is one of the translated entries")
}

#[inline]
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..row.len() {
        if row[i] > row[best] {
            best = i;
        }
    }
    best
}

/// Assigns every sample and tallies counts in a single pass.
pub(crate) fn assign_and_count(
    matrix: &ScoreMatrix,
    translation: &[f64],
    labels: &mut [usize],
    counts: &mut [u64],
) {
    counts.iter_mut().for_each(|c| *c = 0);
    for (label, row) in labels.iter_mut().zip(matrix.rows()) {
        let c = argmax_translated(row, translation);
        *label = c;
        counts[c] += 1;
    }
}

/// Cluster counts for a sequence of nearby translations.
///
/// Keeps, for a reference translation, each row's label and a lower bound on
/// the gap between its best and second-best translated score. Moving the
/// translation by `d` can only change the label of a row whose gap is at most
/// `max(d) - min(d)`, so only that prefix of the gap-sorted rows is
/// re-evaluated. Counts always equal a full [`assign_and_count`] pass.
///
/// Each call stages its state as a candidate reference and [`Self::commit`]
/// adopts it; the balancer commits the states it keeps, so the reference
/// never sits on a discarded step. Committing a partial pass stores exact
/// gaps for the re-evaluated rows and lowers every other gap by the step's
/// spread, which keeps them valid bounds.
pub(crate) struct IncrementalCounter<'a> {
    matrix: &'a ScoreMatrix,
    current: Reference,
    staged: Staged,
    max_abs_score: f64,
}

#[derive(Clone)]
struct Reference {
    translation: Vec<f64>,
    labels: Vec<usize>,
    counts: Vec<u64>,
    /// `(gap, row)`, ascending by gap once committed.
    by_gap: Vec<(f64, u32)>,
}

impl Reference {
    fn fill(&mut self, matrix: &ScoreMatrix, translation: &[f64]) {
        self.translation.copy_from_slice(translation);
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.by_gap.clear();
        for (s, row) in matrix.rows().enumerate() {
            let (top, second) = top_two_translated(row, translation);
            let best = first_index_of(row, translation, top);
            self.labels[s] = best;
            self.counts[best] += 1;
            self.by_gap.push((top - second, s as u32));
        }
    }

    fn sort(&mut self) {
        self.by_gap.sort_unstable_by(cmp_gap);
    }
}

fn cmp_gap(a: &(f64, u32), b: &(f64, u32)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

enum Staged {
    None,
    /// A full pass, held in the spare reference.
    Full(Box<Reference>),
    Partial {
        translation: Vec<f64>,
        counts: Vec<u64>,
        /// Rows `by_gap[..affected]` were re-evaluated.
        affected: usize,
        /// Bound on how far any other row's gap can have shrunk.
        shift: f64,
        /// `(gap, row, label)` of the re-evaluated rows.
        updates: Vec<(f64, u32, usize)>,
    },
}

/// Fraction of rows above which a full pass is cheaper than re-evaluating.
const FULL_PASS_FRACTION: f64 = 0.1;

impl<'a> IncrementalCounter<'a> {
    pub(crate) fn new(matrix: &'a ScoreMatrix) -> Self {
        let (n, k) = (matrix.n_samples(), matrix.n_clusters());
        let max_abs_score = matrix.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut current = Reference {
            translation: vec![0.0; k],
            labels: vec![0; n],
            counts: vec![0; k],
            by_gap: Vec::with_capacity(n),
        };
        current.fill(matrix, &vec![0.0; k]);
        current.sort();
        Self {
            matrix,
            current,
            staged: Staged::None,
            max_abs_score,
        }
    }

    /// Makes the translation of the last [`Self::counts`] call the reference.
    pub(crate) fn commit(&mut self) {
        match std::mem::replace(&mut self.staged, Staged::None) {
            Staged::None => {}
            Staged::Full(mut reference) => {
                reference.sort();
                std::mem::swap(&mut self.current, &mut reference);
            }
            Staged::Partial {
                translation,
                counts,
                affected,
                shift,
                mut updates,
            } => {
                let cur = &mut self.current;
                cur.translation = translation;
                cur.counts = counts;
                for &(_, row, label) in &updates {
                    cur.labels[row as usize] = label;
                }
                updates.sort_unstable_by(|a, b| cmp_gap(&(a.0, a.1), &(b.0, b.1)));
                // Untouched rows all shrink by the same bound, so they stay
                // sorted; merge them with the re-evaluated rows.
                let rest: Vec<(f64, u32)> = cur.by_gap[affected..]
                    .iter()
                    .map(|&(g, r)| (g - shift, r))
                    .collect();
                cur.by_gap.clear();
                let (mut i, mut j) = (0, 0);
                while i < rest.len() || j < updates.len() {
                    let take_rest = j == updates.len()
                        || (i < rest.len()
                            && cmp_gap(&rest[i], &(updates[j].0, updates[j].1)).is_lt());
                    if take_rest {
                        cur.by_gap.push(rest[i]);
                        i += 1;
                    } else {
                        cur.by_gap.push((updates[j].0, updates[j].1));
                        j += 1;
                    }
                }
            }
        }
    }

    /// Counts of `argmax(row - translation)` over all rows.
    pub(crate) fn counts(&mut self, translation: &[f64], counts: &mut [u64]) {
        let (lo, hi, max_abs_t) = translation.iter().zip(&self.current.translation).fold(
            (f64::INFINITY, f64::NEG_INFINITY, 0.0f64),
            |(lo, hi, m), (t, r)| (lo.min(t - r), hi.max(t - r), m.max(t.abs()).max(r.abs())),
        );
        // Rounding in the stored gaps and in fresh evaluations is bounded by a
        // few ulps of the largest magnitudes involved.
        let slack = 16.0 * f64::EPSILON * (self.max_abs_score + max_abs_t);
        let threshold = hi - lo + slack;
        let affected = self
            .current
            .by_gap
            .partition_point(|&(g, _)| g <= threshold);

        if affected as f64 > FULL_PASS_FRACTION * self.current.by_gap.len() as f64 {
            let mut spare = match std::mem::replace(&mut self.staged, Staged::None) {
                Staged::Full(r) => r,
                _ => Box::new(self.current.clone()),
            };
            spare.fill(self.matrix, translation);
            counts.copy_from_slice(&spare.counts);
            self.staged = Staged::Full(spare);
            return;
        }

        let cur = &self.current;
        counts.copy_from_slice(&cur.counts);
        let mut updates = Vec::with_capacity(affected);
        for &(_, s) in &cur.by_gap[..affected] {
            let row = self.matrix.row(s as usize);
            let (top, second) = top_two_translated(row, translation);
            let label = first_index_of(row, translation, top);
            let old = cur.labels[s as usize];
            if label != old {
                counts[old] -= 1;
                counts[label] += 1;
            }
            updates.push((top - second, s, label));
        }
        self.staged = Staged::Partial {
            translation: translation.to_vec(),
            counts: counts.to_vec(),
            affected,
            shift: threshold,
            updates,
        };
    }
}

/// Winner-takes-all assignment of every row of `matrix - translation`.
pub fn argmax_assign(matrix: &ScoreMatrix, translation: &[f64]) -> Result<LabelVector> {
    check_len(
        "translation entries",
        matrix.n_clusters(),
        translation.len(),
    )?;
    Ok(LabelVector(
        matrix
            .rows()
            .map(|row| argmax_translated(row, translation))
            .collect(),
    ))
}

pub fn histogram(labels: &LabelVector, k: usize) -> Result<ClusterHistogram> {
    let mut counts = vec![0u64; k];
    for (s, &l) in labels.as_slice().iter().enumerate() {
        match counts.get_mut(l) {
            Some(c) => *c += 1,
            None => {
                return Err(Error::invalid(format!(
                    "label {l} of sample {s} is outside [0, {k})"
                )))
            }
        }
    }
    Ok(ClusterHistogram::from_counts(counts))
}

pub fn frequency_indicator(
    hist: &ClusterHistogram,
    target: &TargetDistribution,
) -> Result<FrequencyIndicator> {
    check_len("target clusters", hist.n_clusters(), target.n_clusters())?;
    let total = hist.total() as f64;
    if (target.total() - total).abs() > TARGET_SUM_TOL {
        return Err(Error::invalid(format!(
            "histogram total {} does not match target total {}",
            hist.total(),
            target.total()
        )));
    }
    Ok(FrequencyIndicator {
        deltas: deltas_of(hist.counts(), target.targets()),
    })
}

pub(crate) fn deltas_of(counts: &[u64], targets: &[f64]) -> Vec<f64> {
    counts
        .iter()
        .zip(targets)
        .map(|(&c, &t)| c as f64 - t)
        .collect()
}

/// Population standard deviation `sqrt(sum(d^2) / k)` of the indicator.
///
/// The indicator has zero mean by construction so no centering is applied.
pub fn indicator_std(ind: &FrequencyIndicator) -> f64 {
    population_std(&ind.deltas)
}

pub(crate) fn population_std(deltas: &[f64]) -> f64 {
    if deltas.is_empty() {
        return 0.0;
    }
    (deltas.iter().map(|d| d * d).sum::<f64>() / deltas.len() as f64).sqrt()
}

/// Indicator std when every sample lands in one cluster, against the uniform
/// target: `N * sqrt(k - 1) / k`.
pub fn max_std(n: u64, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    n * (k - 1.0).sqrt() / k
}

/// Indicator std of the most even integer split of `n` samples over `k`
/// clusters. With `f = (n mod k) / k` this is `sqrt(f (1 - f))`.
pub fn min_achievable_std(n: u64, k: usize) -> f64 {
    let f = (n % k as u64) as f64 / k as f64;
    (f * (1.0 - f)).sqrt()
}

/// `o_max - o_min` over every entry.
pub fn score_range(matrix: &ScoreMatrix) -> f64 {
    let (lo, hi) = matrix
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
