use otl_core::datagen::{gen_skewed, gen_uniform, load_matrix, save_matrix};
use otl_core::{
    argmax_assign, balance, histogram, sinkhorn_balance, BalanceConfig, DiscrimReport, Error,
    RejectedStep, SinkhornConfig, TargetSpec,
};

#[test]
fn saved_matrix_balances_identically() {
    let m = gen_uniform(2_000, 20, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.otlm");
    save_matrix(&path, &m).unwrap();
    let loaded = load_matrix(&path).unwrap();
    assert_eq!(loaded.values(), m.values());

    let cfg = BalanceConfig::default();
    let a = balance(&m, &cfg).unwrap();
    let b = balance(&loaded, &cfg).unwrap();
    assert_eq!(a.labels, b.labels);
    assert_eq!(a.net_translation, b.net_translation);
    assert!(a.final_std <= 2.0);
    assert_eq!(a.histogram().total(), 2_000);
}

#[test]
fn labels_agree_with_argmax_of_the_translated_matrix() {
    let m = gen_uniform(3_000, 16, 2).unwrap();
    let r = balance(&m, &BalanceConfig::default()).unwrap();
    let again = argmax_assign(&m, &r.net_translation).unwrap();
    assert_eq!(again, r.labels);
    let hist = histogram(&r.labels, 16).unwrap();
    assert_eq!(hist, r.histogram());
    assert!(r.final_std <= r.target.min_achievable_std() + 2.0);

    // the translation never changes row differences
    let view = r.view(&m);
    for (s1, s2) in [(0, 1), (17, 2_999), (400, 401)] {
        let expected: Vec<f64> = m
            .row(s1)
            .iter()
            .zip(m.row(s2))
            .map(|(a, b)| a - b)
            .collect();
        assert_eq!(view.row_difference(s1, s2), expected);
    }
}

#[test]
fn balanced_histogram_is_more_discriminative_than_the_raw_one() {
    let m = gen_uniform(1_000, 10, 7).unwrap();
    let raw = histogram(&argmax_assign(&m, &[0.0; 10]).unwrap(), 10).unwrap();
    let r = balance(&m, &BalanceConfig::default()).unwrap();
    let before = DiscrimReport::from_histogram(&raw);
    let after = DiscrimReport::from_histogram(&r.histogram());
    assert!(after.n_ind < before.n_ind);
    assert_eq!(after.total_pairs, before.total_pairs);
    assert!(!before.most_discriminative);
}

#[test]
fn skewed_scores_get_less_uneven() {
    let m = gen_skewed(5_000, 16, 3, 10.0).unwrap();
    let r = balance(&m, &BalanceConfig::default()).unwrap();
    let initial = r.trace.entries()[0].std;
    assert!(r.improvements >= 1);
    assert!(r.final_std < initial / 10.0, "{initial} -> {}", r.final_std);
}

#[test]
fn revert_is_never_worse_than_keep() {
    let m = gen_uniform(5_000, 64, 11).unwrap();
    let revert = balance(&m, &BalanceConfig::default()).unwrap();
    let keep = balance(
        &m,
        &BalanceConfig {
            rejected_step: RejectedStep::Keep,
            ..BalanceConfig::default()
        },
    )
    .unwrap();
    assert!(revert.final_std <= keep.final_std);
}

#[test]
fn uneven_targets_and_sinkhorn_run_end_to_end() {
    let m = gen_uniform(1_000, 5, 1).unwrap();
    let r = balance(
        &m,
        &BalanceConfig::default().with_target(TargetSpec::PowerLaw(1.0)),
    )
    .unwrap();
    let counts = r.histogram().counts().to_vec();
    for (c, t) in counts.iter().zip(r.target.targets()) {
        assert!((*c as f64 - t).abs() <= 2.0, "{counts:?}");
    }

    let sk = sinkhorn_balance(&m, &SinkhornConfig::default()).unwrap();
    assert_eq!(sk.labels.len(), 1_000);
    assert!(sk.scaling.converged);
}

#[test]
fn invalid_configs_are_rejected_up_front() {
    let m = gen_uniform(10, 2, 0).unwrap();
    let err = balance(&m, &BalanceConfig::default().with_beta(1.0)).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)), "{err:?}");
    assert!(gen_uniform(0, 2, 0).is_err());
}
