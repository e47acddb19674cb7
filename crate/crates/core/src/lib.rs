//! Damage localization for Euler-Bernoulli beams.
//!
//! The crate couples two views of the same structure:
//!
//! * an evidence view, where damage-sensitive features computed from
//!   healthy and damaged modal data are turned into Dempster-Shafer mass
//!   functions and fused ([`damage_indices`], [`evidence`]);
//! * a model-updating view, where per-element Young's moduli of a finite
//!   element beam are calibrated against measured modes by minimizing a
//!   three-term objective with analytic gradients ([`beam`], [`objective`],
//!   [`optimize`]).
//!
//! [`strategies`] composes both into the plain, hierarchical and hybrid
//! localization pipelines. All quantities are SI internally.

pub mod beam;
pub mod damage_indices;
pub mod error;
pub mod evidence;
pub mod modal_data;
pub mod objective;
pub mod optimize;
pub mod strategies;

pub use beam::{BeamConfig, BoundaryCondition, DamageParams, ModalSolution};
pub use error::{Error, Result};
pub use modal_data::{DamageScenario, MeasuredModes};
