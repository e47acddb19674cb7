use beamloc_wasm::{fusion_json, localization_json, modal_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn modal_analysis_reports_frequency_drops() {
    let v = parse(
        modal_json(r#"{"damage": [{"element": 7, "reduction": 0.25}], "modes": 5}"#).unwrap(),
    );
    let h = v["healthy_hz"].as_array().unwrap();
    let d = v["damaged_hz"].as_array().unwrap();
    assert_eq!(h.len(), 5);
    assert!(h
        .iter()
        .zip(d)
        .all(|(a, b)| b.as_f64().unwrap() <= a.as_f64().unwrap()));
    // Simply supported first mode: (π / 2L²) √(EI / ρA), with I/A = t²/12.
    let t: f64 = 0.00325;
    let exact = std::f64::consts::PI / 2.0 * (70e9 * t * t / 12.0 / 2700.0).sqrt();
    assert!(
        (h[0].as_f64().unwrap() - exact).abs() < 1e-3 * exact,
        "{}",
        h[0]
    );
    assert_eq!(v["shapes"][0].as_array().unwrap().len(), 21);
    assert_eq!(v["nodes_mm"][20].as_f64().unwrap(), 1000.0);
}

#[test]
fn fused_beliefs_point_at_the_damaged_element() {
    let v = parse(fusion_json(r#"{"damage": [{"element": 7, "reduction": 0.25}]}"#).unwrap());
    assert_eq!(v["argmax"], 7);
    assert_eq!(v["belief"].as_array().unwrap().len(), 20);
    assert!(v["features"]["strain_energy"]["index"].is_array());
}

#[test]
fn hybrid_localization_recovers_the_pair() {
    let v = parse(
        localization_json(
            r#"{"damage": [{"element": 7, "reduction": 0.25}, {"element": 8, "reduction": 0.25}]}"#,
        )
        .unwrap(),
    );
    assert_eq!(v["candidates"], serde_json::json!([7, 8]));
    assert_eq!(v["converged"], true);
    let p: Vec<f64> = serde_json::from_value(v["profile_gpa"].clone()).unwrap();
    let t: Vec<f64> = serde_json::from_value(v["true_gpa"].clone()).unwrap();
    for (a, b) in p.iter().zip(&t) {
        assert!((a - b).abs() < 0.02 * b);
    }
}

#[test]
fn malformed_requests_are_reported() {
    assert!(modal_json("{").is_err());
    assert!(modal_json(r#"{"boundary": "free"}"#).is_err());
    assert!(fusion_json(r#"{"damage": [{"element": 0, "reduction": 0.2}]}"#).is_err());
    assert!(localization_json(r#"{"damage": [{"element": 30, "reduction": 0.2}]}"#).is_err());
}
