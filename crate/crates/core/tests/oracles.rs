mod common;

use beamloc::beam::{assemble, solve_modes};
use beamloc::damage_indices::FeatureKind;
use beamloc::evidence::{
    dempster_combine, filter_candidates, fuse_features, fuse_measurements, Bpa, FusionConfig,
};
use beamloc::DamageParams;
use common::*;

#[test]
fn closed_form_dempster_matches_power_set_enumeration() {
    let mut rng = rng(11);
    for trial in 0..200 {
        let n = 2 + trial % 5;
        let a = random_bpa(&mut rng, n);
        let b = random_bpa(&mut rng, n);
        let (oracle, k) = brute_force_combine(
            &PowerSetBpa::from_singletons(&a),
            &PowerSetBpa::from_singletons(&b),
        );
        let Ok(fast) = dempster_combine(&a, &b) else {
            assert!(k >= 1.0 - 1e-12, "refused at K = {k}");
            continue;
        };
        assert!((fast.conflict - k).abs() < 1e-12);
        assert!((fast.theta_mass - oracle.theta()).abs() < 1e-12);
        for i in 0..n {
            assert!((fast.singletons[i] - oracle.singleton(i)).abs() < 1e-12);
            assert!(fast.belief[i] <= fast.plausibility[i]);
        }
        assert!(mass_defect(&fast) < 1e-12);
    }
}

#[test]
fn hand_enumerated_pair() {
    let a = Bpa {
        singletons: vec![0.6, 0.0],
        theta: 0.4,
    };
    let f = dempster_combine(&a, &a).unwrap();
    assert_eq!(f.conflict, 0.0);
    assert!((f.singletons[0] - 0.84).abs() < 1e-12);
    assert!((f.theta_mass - 0.16).abs() < 1e-12);
}

#[test]
fn fully_conflicting_sources_are_refused() {
    let a = Bpa {
        singletons: vec![1.0, 0.0],
        theta: 0.0,
    };
    let b = Bpa {
        singletons: vec![0.0, 1.0],
        theta: 0.0,
    };
    assert!(dempster_combine(&a, &b).is_err());
}

#[test]
fn fusion_order_does_not_matter() {
    let c = reference();
    let model = solve_modes(
        assemble(&c, &DamageParams::uniform(&c)).unwrap(),
        c.n_free_dofs(),
    )
    .unwrap();
    let d = scenario(&TWO_SITES, MODES);
    let config = FusionConfig {
        features: vec![
            FeatureKind::StrainEnergy,
            FeatureKind::Flexibility,
            FeatureKind::Curvature,
            FeatureKind::Frequency,
        ],
        ..FusionConfig::default()
    };
    let report = fuse_measurements(&d.healthy, &d.damaged, &model, &config).unwrap();
    let mut reversed = report.bpas.clone();
    reversed.reverse();
    let back = fuse_features(&reversed).unwrap();
    for (x, y) in report.fused.singletons.iter().zip(&back.singletons) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!((report.fused.theta_mass - back.theta_mass).abs() < 1e-12);
    assert!((report.fused.conflict - back.conflict).abs() < 1e-12);
    assert!(mass_defect(&report.fused) < 1e-12);
}

#[test]
fn identical_states_carry_no_evidence() {
    let c = reference();
    let model = solve_modes(
        assemble(&c, &DamageParams::uniform(&c)).unwrap(),
        c.n_free_dofs(),
    )
    .unwrap();
    let d = scenario(&[], MODES);
    let r = fuse_measurements(&d.healthy, &d.damaged, &model, &FusionConfig::default()).unwrap();
    assert!((r.fused.theta_mass - 1.0).abs() < 1e-12);
    // All-equal beliefs admit every element.
    assert_eq!(
        filter_candidates(&r.fused, 0.7).unwrap().len(),
        c.n_elements
    );
}
