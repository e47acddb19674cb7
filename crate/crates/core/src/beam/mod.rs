//! Euler-Bernoulli beam finite elements.
//!
//! Two-node Hermite-cubic elements with a translation and a rotation per
//! node, consistent mass, and constrained DOFs removed by row/column
//! deletion. Everything is in SI units.

mod assembly;
mod curvature;
mod eigen;
mod sensitivity;

pub use assembly::{
    assemble, element_mass_local, element_stiffness_local, hermite_curvature_map, Assembly, DofMap,
    ElementMatrix,
};
pub use curvature::curvature_matrix;
pub use eigen::{solve_modes, ModalSolution};
pub use sensitivity::{
    check_simple_spectrum, dk_dtheta, eigen_derivatives, element_mode_couplings, EigenDerivatives,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Translation fixed at both end nodes.
    SimplySupported,
    /// Translation and rotation fixed at the left node.
    Cantilever,
}

/// Healthy beam definition. Lengths in metres, density in kg/m³, modulus in Pa.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub density: f64,
    pub healthy_youngs_modulus: f64,
    pub n_elements: usize,
    pub boundary_condition: BoundaryCondition,
}

impl BeamConfig {
    /// 1000 × 20 × 3.25 mm aluminium strip, 70 GPa, 20 elements, simply supported.
    pub fn reference() -> Self {
        BeamConfig {
            length: 1.0,
            width: 0.020,
            thickness: 0.00325,
            density: 2700.0,
            healthy_youngs_modulus: 70.0e9,
            n_elements: 20,
            boundary_condition: BoundaryCondition::SimplySupported,
        }
    }

    pub fn with_boundary(mut self, bc: BoundaryCondition) -> Self {
        self.boundary_condition = bc;
        self
    }

    pub fn with_elements(mut self, n: usize) -> Self {
        self.n_elements = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("density", self.density),
            ("healthy_youngs_modulus", self.healthy_youngs_modulus),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.n_elements < 2 {
            return Err(Error::invalid(format!(
                "n_elements must be at least 2, got {}",
                self.n_elements
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    pub fn second_moment(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    pub fn element_length(&self) -> f64 {
        self.length / self.n_elements as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    pub fn node_positions(&self) -> Vec<f64> {
        let h = self.element_length();
        (0..self.n_nodes()).map(|i| i as f64 * h).collect()
    }

    /// Number of DOFs left after applying the boundary condition.
    pub fn n_free_dofs(&self) -> usize {
        let constrained = match self.boundary_condition {
            BoundaryCondition::SimplySupported => 2,
            BoundaryCondition::Cantilever => 2,
        };
        2 * self.n_nodes() - constrained
    }
}

/// Per-element Young's moduli in Pa.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DamageParams {
    youngs_moduli: Vec<f64>,
}

impl TryFrom<Vec<f64>> for DamageParams {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DamageParams> for Vec<f64> {
    fn from(p: DamageParams) -> Self {
        p.youngs_moduli
    }
}

impl DamageParams {
    pub fn new(youngs_moduli: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = youngs_moduli
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::invalid(format!(
                "Young's modulus of element {i} must be positive, got {v}"
            )));
        }
        Ok(DamageParams { youngs_moduli })
    }

    pub fn uniform(config: &BeamConfig) -> Self {
        DamageParams {
            youngs_moduli: vec![config.healthy_youngs_modulus; config.n_elements],
        }
    }

    /// Builds parameters from moduli expressed as fractions of the healthy value.
    pub fn from_relative(config: &BeamConfig, relative: &[f64]) -> Result<Self> {
        Self::new(
            relative
                .iter()
                .map(|e| e * config.healthy_youngs_modulus)
                .collect(),
        )
    }

    pub fn check_against(&self, config: &BeamConfig) -> Result<()> {
        if self.youngs_moduli.len() != config.n_elements {
            return Err(Error::invalid(format!(
                "expected {} element moduli, got {}",
                config.n_elements,
                self.youngs_moduli.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.youngs_moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.youngs_moduli.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.youngs_moduli
    }

    pub fn relative_to(&self, healthy: f64) -> Vec<f64> {
        self.youngs_moduli.iter().map(|e| e / healthy).collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.youngs_moduli
    }
}

impl std::ops::Index<usize> for DamageParams {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.youngs_moduli[i]
    }
}
