//! Balanced argmax cluster assignment by output translation.
//!
//! Given an `N x k` score matrix, [`balance`] finds one k-vector `T` such that
//! the row-wise argmax of `O - T` spreads samples over clusters as evenly as
//! possible (or toward a prescribed uneven target). Since every row moves by
//! the same vector, all pairwise differences between rows are preserved.
//!
//! Alongside the balancer the crate provides exact pair-count metrics for a
//! clustering ([`discrim`]), a Sinkhorn-Knopp baseline ([`sinkhorn`]),
//! cross-entropy and kNN evaluation ([`eval`]), and seeded generators plus
//! file formats ([`datagen`]).

pub mod balancer;
pub mod datagen;
pub mod discrim;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod sinkhorn;

pub use balancer::{
    balance, initial_alpha, powerlaw_target, pseudo_labels_onehot, AlphaSchedule, BalanceConfig,
    BalanceResult, BalanceTrace, OneHotLabels, RejectedStep, TargetSpec, TraceEntry,
    TranslatedView,
};
pub use discrim::DiscrimReport;
pub use error::{Error, Result};
pub use eval::{FeatureMatrix, KnnConfig, ViewSet};
pub use matrix::{
    argmax_assign, frequency_indicator, histogram, indicator_std, max_std, min_achievable_std,
    score_range, ClusterHistogram, FrequencyIndicator, LabelVector, ScoreMatrix,
    TargetDistribution,
};
pub use sinkhorn::{compare_balancers, sinkhorn_balance, ComparisonRecord, SinkhornConfig};
