//! Forward losses over score matrices and the weighted kNN feature probe.

use crate::balancer::{pseudo_labels_onehot, OneHotLabels};
use crate::error::{Error, Result};
use crate::matrix::{check_len, LabelVector, ScoreMatrix};

/// Dense row-major feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be at least 1"));
        }
        check_len("feature entries", n_rows * dim, values.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            n_rows,
            dim,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: indices.len(),
            dim: self.dim,
            values,
        }
    }

    fn normalized(&self, what: &str) -> Result<Vec<f64>> {
        let mut out = self.values.clone();
        for (i, row) in out.chunks_exact_mut(self.dim).enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::invalid(format!(
                    "{what} feature row {i} has zero norm"
                )));
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(out)
    }
}

/// Row maximum and `ln(1 + sum_{j != argmax} exp(row_j - max))`, so that
/// `log_sum_exp = max + tail`. Keeping the two apart lets confident rows keep
/// full relative precision.
fn log_sum_exp_parts(row: &[f64]) -> (f64, f64) {
    let top = crate::matrix::argmax(row);
    let max = row[top];
    let rest: f64 = row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, v)| (v - max).exp())
        .sum();
    (max, rest.ln_1p())
}

/// Mean over samples of `-sum_i y_i log softmax(o)_i`.
pub fn softmax_cross_entropy(scores: &ScoreMatrix, labels: &OneHotLabels) -> Result<f64> {
    check_len("label rows", scores.n_samples(), labels.n_samples())?;
    check_len("label columns", scores.n_clusters(), labels.n_clusters())?;
    let total: f64 = scores
        .rows()
        .zip(labels.rows())
        .map(|(o, y)| {
            let (max, tail) = log_sum_exp_parts(o);
            o.iter()
                .zip(y)
                .filter(|(_, &y)| y != 0.0)
                .map(|(o, y)| y * ((max - o) + tail))
                .sum::<f64>()
        })
        .sum();
    Ok(total / scores.n_samples() as f64)
}

/// Outputs and pseudo-labels of `g` augmented views of the same samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewSet {
    outputs: Vec<ScoreMatrix>,
    labels: Vec<OneHotLabels>,
}

impl ViewSet {
    pub fn new(outputs: Vec<ScoreMatrix>, labels: Vec<LabelVector>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::invalid("a view set needs at least one view"));
        }
        check_len("label views", outputs.len(), labels.len())?;
        let (n, k) = (outputs[0].n_samples(), outputs[0].n_clusters());
        for o in &outputs {
            check_len("samples per view", n, o.n_samples())?;
            check_len("clusters per view", k, o.n_clusters())?;
        }
        let labels = labels
            .iter()
            .map(|l| {
                check_len("labels per view", n, l.len())?;
                pseudo_labels_onehot(l, k)
            })
            .collect::<Result<_>>()?;
        Ok(Self { outputs, labels })
    }

    pub fn g(&self) -> usize {
        self.outputs.len()
    }
}

/// Sum over every ordered pair `(a, b)` of views, including `a == b`, of the
/// cross-entropy of view `b`'s outputs against view `a`'s labels.
pub fn lct_loss(views: &ViewSet) -> Result<f64> {
    let mut total = 0.0;
    for labels in &views.labels {
        for outputs in &views.outputs {
            total += softmax_cross_entropy(outputs, labels)?;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnConfig {
    pub neighbors: usize,
    /// Similarity temperature; each neighbor votes with `exp(s / sigma)`.
    pub sigma: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            neighbors: 50,
            sigma: 0.1,
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neighbors == 0 {
            return Err(Error::invalid("neighbors must be at least 1"));
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::invalid(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Cosine-similarity kNN with exponentially weighted votes. Ties between
/// equally similar neighbors go to the lower training index, ties between
/// classes to the lower class.
pub fn weighted_knn_predict(
    train: &FeatureMatrix,
    train_labels: &[usize],
    query: &FeatureMatrix,
    config: &KnnConfig,
    n_classes: usize,
) -> Result<Vec<usize>> {
    config.validate()?;
    check_len("training labels", train.n_rows(), train_labels.len())?;
    check_len("query dimension", train.dim(), query.dim())?;
    if train.n_rows() == 0 {
        return Err(Error::invalid("kNN needs at least one training row"));
    }
    if let Some(l) = train_labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::invalid(format!(
            "training label {l} is outside [0, {n_classes})"
        )));
    }
    let dim = train.dim();
    let train_n = train.normalized("training")?;
    let query_n = query.normalized("query")?;
    let m = config.neighbors.min(train.n_rows());

    let mut sims: Vec<(f64, usize)> = Vec::with_capacity(train.n_rows());
    let mut scores = vec![0.0; n_classes];
    let by_similarity =
        |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));

    Ok(query_n
        .chunks_exact(dim)
        .map(|q| {
            sims.clear();
            sims.extend(
                train_n
                    .chunks_exact(dim)
                    .enumerate()
                    .map(|(j, t)| (q.iter().zip(t).map(|(a, b)| a * b).sum::<f64>(), j)),
            );
            if m < sims.len() {
                sims.select_nth_unstable_by(m - 1, by_similarity);
            }
            let top = &mut sims[..m];
            top.sort_unstable_by(by_similarity);
            scores.iter_mut().for_each(|s| *s = 0.0);
            for &(s, j) in top.iter() {
                scores[train_labels[j]] += (s / config.sigma).exp();
            }
            crate::matrix::argmax(&scores)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onehot(labels: &[usize], k: usize) -> OneHotLabels {
        pseudo_labels_onehot(&labels.to_vec().into(), k).unwrap()
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = ScoreMatrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let ce = softmax_cross_entropy(&uniform, &onehot(&[0], 2)).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() / std::f64::consts::LN_2 < 1e-12);

        let sharp = ScoreMatrix::from_rows(&[[10.0, -10.0]]).unwrap();
        let ce = softmax_cross_entropy(&sharp, &onehot(&[0], 2)).unwrap();
        let exact = (-20f64).exp().ln_1p();
        assert!((ce - exact).abs() / exact < 1e-12, "{ce} vs {exact}");
        assert!((ce - 2.0611536e-9).abs() < 1e-15);

        let both = ScoreMatrix::from_rows(&[[0.0, 0.0], [10.0, -10.0]]).unwrap();
        let ce = softmax_cross_entropy(&both, &onehot(&[0, 0], 2)).unwrap();
        assert!((ce - (std::f64::consts::LN_2 + exact) / 2.0).abs() < 1e-15);
        assert!((ce - 0.346574).abs() < 1e-6);
    }

    #[test]
    fn cross_entropy_shape_errors() {
        let m = ScoreMatrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert!(softmax_cross_entropy(&m, &onehot(&[0, 1], 2)).is_err());
        assert!(softmax_cross_entropy(&m, &onehot(&[0], 3)).is_err());
    }

    #[test]
    fn lct_examples() {
        let o = ScoreMatrix::from_rows(&[[2.0, 0.5, -1.0], [0.1, 0.2, 0.3]]).unwrap();
        let l: LabelVector = vec![0, 2].into();
        let single = softmax_cross_entropy(&o, &onehot(&[0, 2], 3)).unwrap();
        let g1 = ViewSet::new(vec![o.clone()], vec![l.clone()]).unwrap();
        assert_eq!(lct_loss(&g1).unwrap(), single);
        let g2 = ViewSet::new(vec![o.clone(), o.clone()], vec![l.clone(), l.clone()]).unwrap();
        assert!((lct_loss(&g2).unwrap() - 4.0 * single).abs() / single < 1e-12);
    }

    #[test]
    fn lct_penalizes_disagreeing_labels() {
        let view = ScoreMatrix::from_rows(&[[5.0, -5.0], [-5.0, 5.0]]).unwrap();
        let agreeing = ViewSet::new(
            vec![view.clone(), view.clone()],
            vec![vec![0, 1].into(), vec![0, 1].into()],
        )
        .unwrap();
        let swapped = ViewSet::new(
            vec![view.clone(), view],
            vec![vec![0, 1].into(), vec![1, 0].into()],
        )
        .unwrap();
        assert!(lct_loss(&swapped).unwrap() > lct_loss(&agreeing).unwrap());
    }

    #[test]
    fn viewset_validation() {
        let a = ScoreMatrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let b = ScoreMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(ViewSet::new(vec![], vec![]).is_err());
        assert!(ViewSet::new(vec![a.clone(), b], vec![vec![0].into(), vec![0].into()]).is_err());
        assert!(ViewSet::new(vec![a.clone()], vec![vec![0, 1].into()]).is_err());
        assert!(ViewSet::new(vec![a], vec![vec![2].into()]).is_err());
    }

    #[test]
    fn knn_identical_query_takes_its_label() {
        let train = FeatureMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.2]).unwrap();
        let query = FeatureMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        let cfg = KnnConfig {
            neighbors: 1,
            sigma: 0.1,
        };
        assert_eq!(
            weighted_knn_predict(&train, &[0, 1, 2], &query, &cfg, 3).unwrap(),
            vec![1]
        );
    }

    #[test]
    fn knn_is_scale_invariant_per_row() {
        let train =
            FeatureMatrix::new(4, 2, vec![1.0, 0.1, 0.9, 0.2, -0.1, 1.0, 0.2, 0.9]).unwrap();
        let scaled =
            FeatureMatrix::new(4, 2, vec![3.0, 0.3, 0.09, 0.02, -10.0, 100.0, 0.2, 0.9]).unwrap();
        let query = FeatureMatrix::new(2, 2, vec![1.0, 0.5, 0.3, 1.0]).unwrap();
        let cfg = KnnConfig {
            neighbors: 3,
            sigma: 0.1,
        };
        let a = weighted_knn_predict(&train, &[0, 0, 1, 1], &query, &cfg, 2).unwrap();
        let b = weighted_knn_predict(&scaled, &[0, 0, 1, 1], &query, &cfg, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn knn_errors() {
        let train = FeatureMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let query = FeatureMatrix::new(1, 2, vec![0.0, 1.0]).unwrap();
        let cfg = KnnConfig::default();
        let err = weighted_knn_predict(&train, &[0, 1], &query, &cfg, 2).unwrap_err();
        assert!(err.to_string().contains("zero norm"));
        let ok_train = FeatureMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(weighted_knn_predict(&ok_train, &[0, 2], &query, &cfg, 2).is_err());
        assert!(weighted_knn_predict(&ok_train, &[0], &query, &cfg, 2).is_err());
        let bad = KnnConfig {
            neighbors: 0,
            sigma: 0.1,
        };
        assert!(weighted_knn_predict(&ok_train, &[0, 1], &query, &bad, 2).is_err());
    }
}
