//! Scenario files.
//!
//! Files use millimetres, GPa and 1-based element numbers; everything is
//! converted to SI and 0-based indices here and nowhere else. Every field
//! is optional and unknown keys are rejected. The shipped JSON schema
//! (`schema/scenario.schema.json`) documents the same defaults.

use std::path::Path;

use beamloc::damage_indices::FeatureKind;
use beamloc::evidence::{FusionConfig, IgnoranceWeights, Sensitivities};
use beamloc::objective::{ObjectiveWeights, PenaltyForm};
use beamloc::optimize::{Method, OptimizerConfig, TrustRegionConfig};
use beamloc::strategies::{HierarchicalConfig, HybridConfig};
use beamloc::{BeamConfig, BoundaryCondition, DamageScenario};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Plain,
    Hierarchical,
    Hybrid,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Plain => "plain",
            Strategy::Hierarchical => "hierarchical",
            Strategy::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "$schema", skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub name: String,
    pub beam: BeamSection,
    pub scenario: DamageSection,
    /// Retained modes `m`.
    pub modes: usize,
    pub fusion: FusionSection,
    pub objective: ObjectiveSection,
    pub optimizer: OptimizerSection,
    pub hierarchical: HierarchicalSection,
    pub strategy: Strategy,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        ScenarioFile {
            schema: None,
            name: "scenario".into(),
            beam: BeamSection::default(),
            scenario: DamageSection::default(),
            modes: 5,
            fusion: FusionSection::default(),
            objective: ObjectiveSection::default(),
            optimizer: OptimizerSection::default(),
            hierarchical: HierarchicalSection::default(),
            strategy: Strategy::Hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub length_mm: f64,
    pub width_mm: f64,
    pub thickness_mm: f64,
    pub density_kg_m3: f64,
    pub youngs_modulus_gpa: f64,
    pub elements: usize,
    pub boundary: BoundaryCondition,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            length_mm: 1000.0,
            width_mm: 20.0,
            thickness_mm: 3.25,
            density_kg_m3: 2700.0,
            youngs_modulus_gpa: 70.0,
            elements: 20,
            boundary: BoundaryCondition::SimplySupported,
        }
    }
}

/// One group of elements sharing a stiffness reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageEntry {
    /// 1-based element numbers.
    pub elements: Vec<usize>,
    /// Fractional loss of Young's modulus, in (0, 1).
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DamageSection {
    pub damage: Vec<DamageEntry>,
    /// Relative noise level `η` on frequencies and shapes.
    pub noise: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    pub features: Vec<FeatureKind>,
    pub ignorance_weights: IgnoranceWeightsSection,
    pub sensitivities: SensitivitiesSection,
    /// Candidate threshold as a fraction of the largest fused belief.
    pub tau: f64,
    /// Top-N fallback when the threshold keeps only the argmax.
    pub fallback_top_n: Option<usize>,
}

impl Default for FusionSection {
    fn default() -> Self {
        FusionSection {
            features: FusionConfig::default().features,
            ignorance_weights: IgnoranceWeightsSection::default(),
            sensitivities: SensitivitiesSection::default(),
            tau: 0.7,
            fallback_top_n: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IgnoranceWeightsSection {
    pub distribution: f64,
    pub relative: f64,
    pub rank: f64,
    pub confidence: f64,
}

impl Default for IgnoranceWeightsSection {
    fn default() -> Self {
        let w = IgnoranceWeights::default();
        IgnoranceWeightsSection {
            distribution: w.distribution,
            relative: w.relative,
            rank: w.rank,
            confidence: w.confidence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivitiesSection {
    pub frequency: f64,
    pub curvature: f64,
    pub strain_energy: f64,
    pub flexibility: f64,
}

impl Default for SensitivitiesSection {
    fn default() -> Self {
        let s = Sensitivities::default();
        SensitivitiesSection {
            frequency: s.frequency,
            curvature: s.curvature,
            strain_energy: s.strain_energy,
            flexibility: s.flexibility,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSection {
    pub alpha_f: f64,
    pub alpha_g: f64,
    pub alpha_c: f64,
    pub gamma: f64,
    pub epsilon_curv: f64,
    pub penalty: PenaltyForm,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        let w = ObjectiveWeights::default();
        ObjectiveSection {
            alpha_f: w.alpha_f,
            alpha_g: w.alpha_g,
            alpha_c: w.alpha_c,
            gamma: w.gamma,
            epsilon_curv: w.epsilon_curv,
            penalty: w.penalty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub method: Method,
    pub memory: usize,
    pub max_iterations: usize,
    pub grad_tolerance: f64,
    pub step_tolerance: f64,
    pub initial_step: f64,
    /// Bounds on `E / E_healthy`, applied to every element.
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub trust_region: TrustRegionSection,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        OptimizerSection {
            method: o.method,
            memory: o.memory,
            max_iterations: o.max_iterations,
            grad_tolerance: o.grad_tolerance,
            step_tolerance: o.step_tolerance,
            initial_step: o.initial_step,
            lower_bound: 0.05,
            upper_bound: 1.5,
            trust_region: TrustRegionSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustRegionSection {
    pub initial_radius: f64,
    pub max_radius: f64,
    pub accept_ratio: f64,
    pub shrink_below: f64,
    pub expand_above: f64,
    pub shrink_factor: f64,
    pub expand_factor: f64,
}

impl Default for TrustRegionSection {
    fn default() -> Self {
        let t = TrustRegionConfig::default();
        TrustRegionSection {
            initial_radius: t.initial_radius,
            max_radius: t.max_radius,
            accept_ratio: t.accept_ratio,
            shrink_below: t.shrink_below,
            expand_above: t.expand_above,
            shrink_factor: t.shrink_factor,
            expand_factor: t.expand_factor,
        }
    }
}

pub type HierarchicalSection = HierarchicalConfig;

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked without running a solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let beam = self.beam_config();
        beam.validate()?;
        self.damage_scenario()?.validate(&beam)?;
        if self.modes == 0 || self.modes > beam.n_free_dofs() {
            return Err(CliError::Input(format!(
                "modes must lie in 1..={}, got {}",
                beam.n_free_dofs(),
                self.modes
            )));
        }
        let fusion = self.fusion_config();
        fusion.weights.validate()?;
        if fusion.features.is_empty() {
            return Err(CliError::Input("fusion.features must not be empty".into()));
        }
        if !(self.fusion.tau > 0.0 && self.fusion.tau <= 1.0) {
            return Err(CliError::Input(format!(
                "fusion.tau must lie in (0, 1], got {}",
                self.fusion.tau
            )));
        }
        self.objective_weights().validate()?;
        let opt = self.optimizer_config();
        opt.validate()?;
        opt.resolved_bounds(beam.n_elements)?;
        Ok(())
    }

    pub fn beam_config(&self) -> BeamConfig {
        let b = &self.beam;
        BeamConfig {
            length: b.length_mm / 1e3,
            width: b.width_mm / 1e3,
            thickness: b.thickness_mm / 1e3,
            density: b.density_kg_m3,
            healthy_youngs_modulus: b.youngs_modulus_gpa * 1e9,
            n_elements: b.elements,
            boundary_condition: b.boundary,
        }
    }

    /// The damage list with 0-based element indices.
    pub fn damage_scenario(&self) -> Result<DamageScenario, CliError> {
        let n = self.beam.elements;
        let mut damaged: Vec<(usize, f64)> = Vec::new();
        for entry in &self.scenario.damage {
            for &el in &entry.elements {
                if el == 0 || el > n {
                    return Err(CliError::Input(format!(
                        "damage element {el} outside 1..={n}"
                    )));
                }
                if damaged.iter().any(|&(k, _)| k == el - 1) {
                    return Err(CliError::Input(format!("damage element {el} listed twice")));
                }
                damaged.push((el - 1, entry.reduction));
            }
        }
        Ok(DamageScenario {
            name: self.name.clone(),
            damaged_elements: damaged,
            noise_level: self.scenario.noise,
            seed: self.scenario.seed,
        })
    }

    pub fn fusion_config(&self) -> FusionConfig {
        let w = self.fusion.ignorance_weights;
        let s = self.fusion.sensitivities;
        FusionConfig {
            weights: IgnoranceWeights {
                distribution: w.distribution,
                relative: w.relative,
                rank: w.rank,
                confidence: w.confidence,
            },
            sensitivities: Sensitivities {
                frequency: s.frequency,
                curvature: s.curvature,
                strain_energy: s.strain_energy,
                flexibility: s.flexibility,
            },
            features: self.fusion.features.clone(),
        }
    }

    pub fn hybrid_config(&self) -> HybridConfig {
        HybridConfig {
            tau_fraction: self.fusion.tau,
            fusion: self.fusion_config(),
            fallback_top_n: self.fusion.fallback_top_n,
        }
    }

    pub fn objective_weights(&self) -> ObjectiveWeights {
        let o = self.objective;
        ObjectiveWeights {
            alpha_f: o.alpha_f,
            alpha_g: o.alpha_g,
            alpha_c: o.alpha_c,
            gamma: o.gamma,
            epsilon_curv: o.epsilon_curv,
            penalty: o.penalty,
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = self.optimizer;
        let t = o.trust_region;
        OptimizerConfig {
            method: o.method,
            memory: o.memory,
            max_iterations: o.max_iterations,
            grad_tolerance: o.grad_tolerance,
            step_tolerance: o.step_tolerance,
            initial_step: o.initial_step,
            bounds: vec![(o.lower_bound, o.upper_bound)],
            trust_region: TrustRegionConfig {
                initial_radius: t.initial_radius,
                max_radius: t.max_radius,
                accept_ratio: t.accept_ratio,
                shrink_below: t.shrink_below,
                expand_above: t.expand_above,
                shrink_factor: t.shrink_factor,
                expand_factor: t.expand_factor,
            },
        }
    }
}
