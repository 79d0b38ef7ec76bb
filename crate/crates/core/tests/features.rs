use stdref::callproc::{build_step, default_env, dormant_env, feature_patch};
use stdref::features::{
    apply_feature, conflict_matrix, detect_conflict, integrate_chain, ChainError, ConflictVerdict,
    FeaturePatch, CONFLICT_FORMAT,
};
use stdref::interp::Bounds;
use stdref::refine::{check_trace_equivalence, std_traces};

fn patches(names: &[&str]) -> Vec<FeaturePatch> {
    names.iter().map(|n| feature_patch(n).unwrap()).collect()
}

#[test]
fn chain_of_four_patches_yields_step5() {
    let env = default_env();
    let fs = patches(&["abandon", "split-connect", "forwarding", "blocking"]);
    let (s5, v) = integrate_chain(&build_step(0), &fs, &env, &Bounds::default()).unwrap();
    assert!(v.pass);
    assert_eq!(s5, build_step(5));
}

#[test]
fn empty_chain_is_the_identity() {
    let env = default_env();
    let (s, v) = integrate_chain(&build_step(2), &[], &env, &Bounds::default()).unwrap();
    assert_eq!(s, build_step(2));
    assert!(v.pass);
}

#[test]
fn conflicting_chain_fails_at_the_second_patch() {
    let env = default_env();
    let fs = patches(&["vp-busy", "vp-ring"]);
    let err = integrate_chain(&build_step(2), &fs, &env, &Bounds::default()).unwrap_err();
    let ChainError::Feature {
        index, conflict, ..
    } = &err
    else {
        panic!("{err}")
    };
    assert_eq!(*index, 1);
    assert_eq!(
        conflict.as_ref().unwrap().verdict,
        ConflictVerdict::Conflicting
    );
    assert!(err.to_string().contains("vp-ring"), "{err}");
}

#[test]
fn forwarding_on_step0_fails_at_its_second_step() {
    let env = default_env();
    let err =
        apply_feature(&build_step(0), &feature_patch("forwarding").unwrap(), &env).unwrap_err();
    assert_eq!(err.step, 1);
    assert!(err.to_string().contains("find-subscriber"), "{err}");
}

#[test]
fn patch_for_another_subject_is_rejected() {
    let env = default_env();
    let mut f = feature_patch("abandon").unwrap();
    f.subject = "elsewhere".into();
    let err = apply_feature(&build_step(0), &f, &env).unwrap_err();
    assert!(err.to_string().contains("elsewhere"));
}

#[test]
fn forwarding_and_blocking_are_compatible() {
    let env = default_env();
    let b = Bounds::default();
    let r = detect_conflict(
        &build_step(2),
        &feature_patch("forwarding").unwrap(),
        &feature_patch("blocking").unwrap(),
        &env,
        &b,
    )
    .unwrap();
    assert_eq!(r.verdict, ConflictVerdict::Compatible, "{r}");
    assert!(r.orders_equivalent.as_ref().unwrap().pass);
    assert!(r.attempts.iter().all(|a| a.common_refinement()));
    let merged = r.merged.as_ref().unwrap();
    assert!(
        check_trace_equivalence(merged, &build_step(5), &env, &b)
            .unwrap()
            .pass
    );
    let j = r.to_json();
    assert_eq!(j["format"], CONFLICT_FORMAT);
    assert_eq!(j["verdict"], "compatible");
}

#[test]
fn vp_fixture_conflicts_in_both_orders() {
    let env = default_env();
    let r = detect_conflict(
        &build_step(2),
        &feature_patch("vp-busy").unwrap(),
        &feature_patch("vp-ring").unwrap(),
        &env,
        &Bounds::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, ConflictVerdict::Conflicting);
    assert_eq!(r.attempts.len(), 2);
    for a in &r.attempts {
        let e = a.error.as_ref().expect("each order fails");
        assert_eq!(e.error.rule, "add-transitions");
        assert!(e
            .error
            .witness
            .as_deref()
            .unwrap()
            .contains("find-subscriber"));
    }
    assert!(r.to_string().contains("conflicting"));
}

#[test]
fn patches_sharing_a_new_state_are_not_independent() {
    let env = default_env();
    let r = detect_conflict(
        &build_step(2),
        &feature_patch("forwarding").unwrap(),
        &feature_patch("time-out-retry").unwrap(),
        &env,
        &Bounds::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, ConflictVerdict::NotIndependent, "{r}");
    assert!(!r.evidence.is_empty());
}

#[test]
fn conflict_matrix_covers_each_pair_once() {
    let env = default_env();
    let fs = patches(&["forwarding", "blocking", "vp-busy"]);
    let m = conflict_matrix(&build_step(2), &fs, &env, &Bounds::default().with_k(3)).unwrap();
    let pairs: Vec<(usize, usize)> = m.iter().map(|(p, _)| *p).collect();
    assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
    assert_eq!(m[0].1.verdict, ConflictVerdict::Compatible);
}

#[test]
fn dormant_features_leave_step2_behavior_unchanged() {
    let env = dormant_env();
    let b = Bounds::default();
    let t2 = std_traces(&build_step(2), &env, &b).unwrap();
    let t5 = std_traces(&build_step(5), &env, &b).unwrap();
    assert_eq!(t2.entries, t5.entries);
}
