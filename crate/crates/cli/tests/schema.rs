use std::fs;
use std::path::{Path, PathBuf};

use beamloc_cli::ScenarioFile;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn schema() -> Value {
    serde_json::from_str(&fs::read_to_string(root().join("schema/scenario.schema.json")).unwrap())
        .unwrap()
}

fn scenarios() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(root().join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_scenarios_conform_and_parse() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let files = scenarios();
    assert!(files.len() >= 5);
    for path in files {
        let doc: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{}: {errors:?}", path.display());
        ScenarioFile::load(&path).unwrap();
    }
}

#[test]
fn schema_and_parser_reject_the_same_mistakes() {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    for bad in [
        r#"{"beam": {"boundary": "fixed_fixed"}}"#,
        r#"{"beam": {"lenght_mm": 900}}"#,
        r#"{"strategy": "greedy"}"#,
        r#"{"fusion": {"features": ["modal_flexibility"]}}"#,
        r#"{"scenario": {"damage": [{"elements": [0], "reduction": 0.25}]}}"#,
        r#"{"scenario": {"damage": [{"elements": [3], "reduction": 1.0}]}}"#,
        r#"{"optimizer": {"method": "newton"}}"#,
        r#"{"unknown": 1}"#,
    ] {
        let doc: Value = serde_json::from_str(bad).unwrap();
        assert!(!validator.is_valid(&doc), "schema accepted {bad}");
        assert!(
            ScenarioFile::from_json(bad).is_err(),
            "parser accepted {bad}"
        );
    }
}

/// Walks the schema next to the serialized defaults and compares every
/// documented default that has a concrete value.
fn compare_defaults(schema: &Value, actual: &Value, path: &str, checked: &mut usize) {
    let Some(props) = schema.get("properties").and_then(Value::as_object) else {
        return;
    };
    for (key, sub) in props {
        if key == "$schema" {
            continue;
        }
        let here = format!("{path}.{key}");
        let value = actual
            .get(key)
            .unwrap_or_else(|| panic!("{here} missing from serialized defaults"));
        if sub.get("properties").is_some() {
            compare_defaults(sub, value, &here, checked);
        } else if let Some(d) = sub.get("default") {
            let same = match (d.as_f64(), value.as_f64()) {
                (Some(a), Some(b)) => a == b,
                _ => d == value,
            };
            assert!(same, "{here}: schema says {d}, code says {value}");
            *checked += 1;
        }
    }
}

#[test]
fn documented_defaults_match_the_code() {
    let defaults = serde_json::to_value(ScenarioFile::default()).unwrap();
    let mut checked = 0;
    compare_defaults(&schema(), &defaults, "", &mut checked);
    assert!(checked > 40, "only {checked} defaults compared");
    assert_eq!(
        ScenarioFile::from_json("{}").unwrap(),
        ScenarioFile::default()
    );
}
