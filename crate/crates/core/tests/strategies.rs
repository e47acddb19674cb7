mod common;

use beamloc::objective::ObjectiveWeights;
use beamloc::optimize::{Method, OptimizerConfig, Termination};
use beamloc::strategies::{
    hierarchical_localize, hybrid_localize, HierarchicalConfig, HybridConfig, Status,
};
use common::*;

const MIRRORED: [usize; 4] = [4, 5, 14, 15];

#[test]
fn hybrid_leaves_non_candidates_healthy() {
    let c = reference();
    let d = scenario(&PAIR, MODES);
    let out = hybrid_localize(
        &c,
        &d.healthy,
        &d.damaged,
        &HybridConfig::default(),
        ObjectiveWeights::default(),
        &OptimizerConfig::default(),
    )
    .unwrap();
    assert!(out.candidates.contains(&6) && out.candidates.contains(&7));
    for k in 0..c.n_elements {
        if !out.candidates.contains(&k) {
            assert_eq!(
                out.localization.profile.as_slice()[k],
                c.healthy_youngs_modulus
            );
        }
    }
    assert!(mass_defect(&out.evidence.fused) < 1e-12);
}

#[test]
fn tau_one_keeps_only_the_argmax_and_fits_worse() {
    let c = reference();
    let d = scenario(&PAIR, MODES);
    let run = |tau: f64| {
        let h = HybridConfig {
            tau_fraction: tau,
            ..HybridConfig::default()
        };
        hybrid_localize(
            &c,
            &d.healthy,
            &d.damaged,
            &h,
            ObjectiveWeights::default(),
            &OptimizerConfig::default(),
        )
        .unwrap()
    };
    let narrow = run(1.0);
    let wide = run(0.7);
    assert_eq!(narrow.candidates, vec![narrow.evidence.fused.argmax()]);
    assert!(narrow.localization.trace.final_value() > wide.localization.trace.final_value());
}

#[test]
fn fallback_takes_top_n_when_tau_keeps_one() {
    let c = reference();
    let d = scenario(&PAIR, MODES);
    let h = HybridConfig {
        tau_fraction: 1.0,
        fallback_top_n: Some(3),
        ..HybridConfig::default()
    };
    let out = hybrid_localize(
        &c,
        &d.healthy,
        &d.damaged,
        &h,
        ObjectiveWeights::default(),
        &OptimizerConfig::default().with_max_iterations(3),
    )
    .unwrap();
    assert_eq!(out.candidates.len(), 3);
    assert!(out.candidates.contains(&6) && out.candidates.contains(&7));
}

#[test]
fn hierarchical_freezes_to_exact_healthy_values() {
    let c = reference();
    let d = scenario(&GROUP, MODES);
    let out = hierarchical_localize(
        &c,
        &d.damaged,
        ObjectiveWeights::default(),
        &OptimizerConfig::default(),
        &HierarchicalConfig::default(),
    )
    .unwrap();
    assert_eq!(out.localization.status, Status::Converged);
    let e = out.localization.profile.as_slice();
    for k in 0..c.n_elements {
        if !GROUP.contains(&k) {
            assert_eq!(e[k], c.healthy_youngs_modulus, "element {k}");
        }
    }
    let trace = &out.localization.trace;
    assert!(!trace.stages.is_empty());
    assert!(trace.stages.iter().all(|s| s.n_variables <= c.n_elements));
    // Records are numbered continuously across stages.
    for (i, r) in trace.records.iter().enumerate() {
        assert_eq!(r.iteration, i);
    }
}

#[test]
fn mirrored_two_site_case_stalls_with_the_full_objective() {
    let c = reference();
    let d = scenario(&MIRRORED, MODES);
    let out = hierarchical_localize(
        &c,
        &d.damaged,
        ObjectiveWeights::default(),
        &OptimizerConfig::default(),
        &HierarchicalConfig::default(),
    )
    .unwrap();
    assert_eq!(out.localization.status, Status::Failed);
    assert_eq!(out.localization.trace.termination, Termination::Stalled);
}

#[test]
fn mirrored_two_site_case_converges_on_global_terms() {
    let c = reference();
    let d = scenario(&MIRRORED, MODES);
    let out = hierarchical_localize(
        &c,
        &d.damaged,
        ObjectiveWeights::global_terms(),
        &OptimizerConfig::default(),
        &HierarchicalConfig::default(),
    )
    .unwrap();
    assert_eq!(out.localization.status, Status::Converged);
    let e = out
        .localization
        .profile
        .relative_to(c.healthy_youngs_modulus);
    for k in 0..c.n_elements {
        let expected = if MIRRORED.contains(&k) { 0.75 } else { 1.0 };
        assert!(
            (e[k] - expected).abs() < 0.03 * expected,
            "element {k}: {}",
            e[k]
        );
    }
}

#[test]
fn trust_region_hybrid_matches_truth() {
    let c = reference();
    let d = scenario(&TWO_SITES, MODES);
    let out = hybrid_localize(
        &c,
        &d.healthy,
        &d.damaged,
        &HybridConfig::default(),
        ObjectiveWeights::default(),
        &OptimizerConfig::default().with_method(Method::TrustRegion),
    )
    .unwrap();
    let e = out
        .localization
        .profile
        .relative_to(c.healthy_youngs_modulus);
    for &k in &TWO_SITES {
        assert!((e[k] - 0.75).abs() < 0.02 * 0.75);
    }
    assert!(out.localization.trace.final_value() < 1e-3);
}
