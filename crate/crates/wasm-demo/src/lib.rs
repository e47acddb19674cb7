//! Browser bindings for the demo page in `www/`.
//!
//! Every entry point takes a JSON request and returns a JSON string, which
//! keeps the JS side free of generated classes. The `*_json` functions are
//! plain Rust so they can be tested natively.

use beamloc::beam::{assemble, solve_modes};
use beamloc::evidence::fuse_measurements;
use beamloc::modal_data::{synthesize_scenario, ScenarioData};
use beamloc::objective::ObjectiveWeights;
use beamloc::optimize::OptimizerConfig;
use beamloc::strategies::{hybrid_localize, HybridConfig, Status};
use beamloc::{BeamConfig, BoundaryCondition, DamageParams, DamageScenario};
use serde::{Deserialize, Serialize};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// One damaged element, numbered from 1.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Damage {
    pub element: usize,
    pub reduction: f64,
}

/// The page's form. The beam itself is the 1 m aluminium reference strip.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Request {
    pub boundary: BoundaryCondition,
    pub elements: usize,
    pub damage: Vec<Damage>,
    pub modes: usize,
    pub noise: f64,
    pub seed: u64,
    pub tau: f64,
    pub max_iterations: usize,
}

impl Default for Request {
    fn default() -> Self {
        Request {
            boundary: BoundaryCondition::SimplySupported,
            elements: 20,
            damage: Vec::new(),
            modes: 10,
            noise: 0.0,
            seed: 0,
            tau: 0.7,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Serialize)]
struct Modal {
    nodes_mm: Vec<f64>,
    healthy_hz: Vec<f64>,
    damaged_hz: Vec<f64>,
    /// One array per mode, damaged beam, scaled to unit peak.
    shapes: Vec<Vec<f64>>,
}

impl Request {
    fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("bad request: {e}"))
    }

    fn beam(&self) -> BeamConfig {
        BeamConfig::reference()
            .with_boundary(self.boundary)
            .with_elements(self.elements)
    }

    fn synthesize(&self) -> Result<(BeamConfig, ScenarioData), String> {
        let beam = self.beam();
        let mut damaged = Vec::with_capacity(self.damage.len());
        for d in &self.damage {
            if d.element == 0 {
                return Err("elements are numbered from 1".into());
            }
            damaged.push((d.element - 1, d.reduction));
        }
        let scenario = DamageScenario {
            name: "demo".into(),
            damaged_elements: damaged,
            noise_level: self.noise,
            seed: self.seed,
        };
        let data = synthesize_scenario(&beam, &scenario, self.modes).map_err(|e| e.to_string())?;
        Ok((beam, data))
    }
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|k| k + 1).collect()
}

fn hz(w: f64) -> f64 {
    w / (2.0 * std::f64::consts::PI)
}

pub fn modal_json(request: &str) -> Result<String, String> {
    let r = Request::parse(request)?;
    let (_, data) = r.synthesize()?;
    let shapes = (0..data.damaged.n_modes())
        .map(|j| {
            let s = data.damaged.shape(j);
            let peak = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            s.iter()
                .map(|v| if peak > 0.0 { v / peak } else { 0.0 })
                .collect()
        })
        .collect();
    let modal = Modal {
        nodes_mm: data.damaged.grid.iter().map(|x| x * 1e3).collect(),
        healthy_hz: data.healthy.frequencies.iter().map(|w| hz(*w)).collect(),
        damaged_hz: data.damaged.frequencies.iter().map(|w| hz(*w)).collect(),
        shapes,
    };
    serde_json::to_string(&modal).map_err(|e| e.to_string())
}

pub fn fusion_json(request: &str) -> Result<String, String> {
    let r = Request::parse(request)?;
    let (beam, data) = r.synthesize()?;
    let model = solve_modes(
        assemble(&beam, &DamageParams::uniform(&beam)).map_err(|e| e.to_string())?,
        beam.n_free_dofs(),
    )
    .map_err(|e| e.to_string())?;
    let hybrid = HybridConfig {
        tau_fraction: r.tau,
        ..HybridConfig::default()
    };
    let report = fuse_measurements(&data.healthy, &data.damaged, &model, &hybrid.fusion)
        .map_err(|e| e.to_string())?;
    let candidates = beamloc::strategies::select_candidates(&report.fused, &hybrid)
        .map_err(|e| e.to_string())?;
    let features: serde_json::Map<String, serde_json::Value> = report
        .features
        .iter()
        .zip(&report.bpas)
        .map(|(f, b)| {
            (
                f.kind.name().to_string(),
                json!({ "index": f.values, "mass": b.bpa.singletons, "concentration": b.concentration }),
            )
        })
        .collect();
    Ok(json!({
        "belief": report.fused.belief,
        "plausibility": report.fused.plausibility,
        "theta": report.fused.theta_mass,
        "conflict": report.fused.conflict,
        "argmax": report.fused.argmax() + 1,
        "candidates": one_based(&candidates),
        "features": features,
    })
    .to_string())
}

pub fn localization_json(request: &str) -> Result<String, String> {
    let r = Request::parse(request)?;
    let (beam, data) = r.synthesize()?;
    let hybrid = HybridConfig {
        tau_fraction: r.tau,
        ..HybridConfig::default()
    };
    let opt = OptimizerConfig::default().with_max_iterations(r.max_iterations);
    let out = hybrid_localize(
        &beam,
        &data.healthy,
        &data.damaged,
        &hybrid,
        ObjectiveWeights::default(),
        &opt,
    )
    .map_err(|e| e.to_string())?;
    let trace = &out.localization.trace;
    let gpa = |p: &DamageParams| p.as_slice().iter().map(|e| e * 1e-9).collect::<Vec<_>>();
    Ok(json!({
        "profile_gpa": gpa(&out.localization.profile),
        "true_gpa": gpa(&data.truth),
        "healthy_gpa": beam.healthy_youngs_modulus * 1e-9,
        "candidates": one_based(&out.candidates),
        "objective": trace.values(),
        "converged": out.localization.status == Status::Converged,
        "termination": trace.termination,
        "iterations": trace.iterations(),
    })
    .to_string())
}

/// Frequencies and normalized mode shapes of the healthy and damaged beam.
#[wasm_bindgen]
pub fn modal_analysis(request: &str) -> Result<String, JsValue> {
    modal_json(request).map_err(|e| JsValue::from_str(&e))
}

/// Per-feature indices and fused element beliefs.
#[wasm_bindgen]
pub fn fused_beliefs(request: &str) -> Result<String, JsValue> {
    fusion_json(request).map_err(|e| JsValue::from_str(&e))
}

/// Evidence-filtered stiffness updating.
#[wasm_bindgen]
pub fn hybrid_localization(request: &str) -> Result<String, JsValue> {
    localization_json(request).map_err(|e| JsValue::from_str(&e))
}
