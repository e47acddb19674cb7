//! Element-wise damage-sensitive features from healthy and damaged modal data.
//!
//! Quadratic forms use the healthy model's element stiffness matrices for
//! both states; a monitoring system does not know the damaged stiffness.
//! Measured translations are expanded to full DOF vectors by static
//! condensation of the rotations on the healthy stiffness (see
//! [`crate::modal_data::expand_shapes_static`]).

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::beam::{hermite_curvature_map, ElementMatrix, ModalSolution};
use crate::error::{Error, Result};
use crate::modal_data::{expand_shapes_static, MeasuredModes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Frequency,
    Curvature,
    StrainEnergy,
    Flexibility,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [
        FeatureKind::Frequency,
        FeatureKind::Curvature,
        FeatureKind::StrainEnergy,
        FeatureKind::Flexibility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Frequency => "frequency",
            FeatureKind::Curvature => "curvature",
            FeatureKind::StrainEnergy => "strain_energy",
            FeatureKind::Flexibility => "flexibility",
        }
    }
}

/// Non-negative per-element damage index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(kind: FeatureKind, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::numeric(format!(
                "{} index has invalid entry {v}",
                kind.name()
            )));
        }
        Ok(FeatureVector { kind, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.values)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Frequency shifts distributed over elements by each element's share of
/// the damaged mode's strain energy.
pub fn frequency_index(
    und: &MeasuredModes,
    dam: &MeasuredModes,
    model: &ModalSolution,
) -> Result<FeatureVector> {
    und.check_compatible(dam)?;
    let shapes = expand_shapes_static(dam, model)?;
    let elements = model.element_stiffness();
    let mut d = vec![0.0; elements.len()];
    for j in 0..dam.n_modes() {
        let phi = shapes.column(j);
        let energies: Vec<f64> = elements
            .iter()
            .map(|ke| ke.quad_form(phi.as_slice()).abs())
            .collect();
        let total: f64 = energies.iter().sum();
        if total <= 0.0 {
            return Err(Error::numeric(format!("mode {j} carries no strain energy")));
        }
        let shift = (dam.frequencies[j] - und.frequencies[j]).abs();
        for (di, ei) in d.iter_mut().zip(&energies) {
            *di += ei / total * shift;
        }
    }
    FeatureVector::new(FeatureKind::Frequency, d)
}

/// Nodal RMS of curvature differences over modes, averaged onto elements.
pub fn curvature_index(und: &MeasuredModes, dam: &MeasuredModes) -> Result<FeatureVector> {
    und.check_compatible(dam)?;
    let m = und.n_modes() as f64;
    let rms: Vec<f64> = (0..und.n_points())
        .map(|n| {
            let sq: f64 = (0..und.n_modes())
                .map(|j| (und.curvatures[(j, n)] - dam.curvatures[(j, n)]).powi(2))
                .sum();
            (sq / m).sqrt()
        })
        .collect();
    let d = rms.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    FeatureVector::new(FeatureKind::Curvature, d)
}

/// Absolute change of summed modal strain energy per element.
///
/// Shapes are full free-DOF vectors, one mode per column.
pub fn msecr_index(
    und_shapes: &DMatrix<f64>,
    dam_shapes: &DMatrix<f64>,
    element_stiffness: &[ElementMatrix],
) -> Result<FeatureVector> {
    if und_shapes.shape() != dam_shapes.shape() {
        return Err(Error::invalid(format!(
            "shape matrices differ: {:?} vs {:?}",
            und_shapes.shape(),
            dam_shapes.shape()
        )));
    }
    let n = und_shapes.nrows();
    if element_stiffness
        .iter()
        .flat_map(|ke| ke.dofs.iter().flatten())
        .any(|&i| i >= n)
    {
        return Err(Error::invalid("element DOFs exceed shape vector length"));
    }
    let d = element_stiffness
        .iter()
        .map(|ke| (modal_strain_energy(ke, und_shapes) - modal_strain_energy(ke, dam_shapes)).abs())
        .collect();
    FeatureVector::new(FeatureKind::StrainEnergy, d)
}

/// `Σ_j φ_jᵀ K_e φ_j` over the columns of `shapes`.
pub fn modal_strain_energy(ke: &ElementMatrix, shapes: &DMatrix<f64>) -> f64 {
    shapes
        .column_iter()
        .map(|phi| ke.quad_form(phi.as_slice()))
        .sum()
}

/// Convenience wrapper expanding both measurements with the healthy model.
pub fn msecr_from_measurements(
    und: &MeasuredModes,
    dam: &MeasuredModes,
    model: &ModalSolution,
) -> Result<FeatureVector> {
    und.check_compatible(dam)?;
    let u = expand_shapes_static(und, model)?;
    let d = expand_shapes_static(dam, model)?;
    msecr_index(&u, &d, model.element_stiffness())
}

/// Frobenius norm of the change in element curvature compliance.
///
/// Modal flexibility `Σ_j ω_j⁻² φ_j φ_jᵀ` is restricted to each element's
/// four DOFs and mapped to end curvatures with the Hermite second
/// derivatives, giving a 2×2 compliance per element.
pub fn flexibility_index(
    und: &MeasuredModes,
    dam: &MeasuredModes,
    model: &ModalSolution,
) -> Result<FeatureVector> {
    und.check_compatible(dam)?;
    let fu = element_compliances(und, model)?;
    let fd = element_compliances(dam, model)?;
    let d = fu.iter().zip(&fd).map(|(a, b)| (b - a).norm()).collect();
    FeatureVector::new(FeatureKind::Flexibility, d)
}

/// Per-element `S_e L_e F L_eᵀ S_eᵀ` of the truncated modal flexibility.
pub fn element_compliances(
    measured: &MeasuredModes,
    model: &ModalSolution,
) -> Result<Vec<Matrix2<f64>>> {
    if let Some(w) = measured
        .frequencies
        .iter()
        .find(|w| !(w.is_finite() && **w > 0.0))
    {
        return Err(Error::numeric(format!(
            "cannot build flexibility with frequency {w}"
        )));
    }
    let shapes = expand_shapes_static(measured, model)?;
    let dofs = model.dof_map();
    let mut out = Vec::with_capacity(dofs.n_elements());
    for e in 0..dofs.n_elements() {
        let s = hermite_curvature_map(dofs.element_length(e));
        let ke = &model.element_stiffness()[e];
        let mut f = Matrix2::zeros();
        for j in 0..measured.n_modes() {
            let c = s * ke.gather(shapes.column(j).as_slice());
            f += c * c.transpose() / measured.frequencies[j].powi(2);
        }
        out.push(f);
    }
    Ok(out)
}

/// Computes one feature by kind.
pub fn compute_feature(
    kind: FeatureKind,
    und: &MeasuredModes,
    dam: &MeasuredModes,
    model: &ModalSolution,
) -> Result<FeatureVector> {
    match kind {
        FeatureKind::Frequency => frequency_index(und, dam, model),
        FeatureKind::Curvature => curvature_index(und, dam),
        FeatureKind::StrainEnergy => msecr_from_measurements(und, dam, model),
        FeatureKind::Flexibility => flexibility_index(und, dam, model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{assemble, solve_modes, BeamConfig, DamageParams};
    use crate::modal_data::{measure_solution, synthesize_scenario, DamageScenario};

    fn healthy_model(c: &BeamConfig) -> ModalSolution {
        solve_modes(assemble(c, &DamageParams::uniform(c)).unwrap(), 5).unwrap()
    }

    #[test]
    fn identical_states_give_zero_features() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let m = measure_solution(&model, 5).unwrap();
        for kind in FeatureKind::ALL {
            let f = compute_feature(kind, &m, &m, &model).unwrap();
            assert_eq!(f.len(), 20);
            assert!(f.values.iter().all(|&v| v == 0.0), "{kind:?}");
        }
    }

    #[test]
    fn frequency_weights_partition_each_mode() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let und = measure_solution(&model, 1).unwrap();
        let mut dam = und.clone();
        dam.frequencies[0] *= 0.99;
        let f = frequency_index(&und, &dam, &model).unwrap();
        let shift = 0.01 * und.frequencies[0];
        assert!((f.values.iter().sum::<f64>() - shift).abs() < 1e-12 * shift.max(1.0));
    }

    #[test]
    fn curvature_index_spreads_to_adjacent_elements() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let und = measure_solution(&model, 1).unwrap();
        let mut dam = und.clone();
        dam.curvatures[(0, 9)] += 2.0;
        let f = curvature_index(&und, &dam).unwrap();
        for (e, v) in f.values.iter().enumerate() {
            if e == 8 || e == 9 {
                assert!((v - 1.0).abs() < 1e-12);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn strain_energy_partition_sums_to_eigenvalues() {
        let c = BeamConfig::reference();
        let theta: Vec<f64> = (0..20).map(|i| 70e9 * (0.7 + 0.015 * i as f64)).collect();
        let sol =
            solve_modes(assemble(&c, &DamageParams::new(theta).unwrap()).unwrap(), 5).unwrap();
        let total: f64 = sol
            .element_stiffness()
            .iter()
            .map(|ke| modal_strain_energy(ke, &sol.mode_shapes))
            .sum();
        let lambdas: f64 = sol.eigenvalues.sum();
        assert!((total - lambdas).abs() < 1e-9 * lambdas);
    }

    #[test]
    fn strain_energy_and_flexibility_peak_at_damage() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let s = DamageScenario::uniform_reduction("pair", &[6, 7], 0.25);
        let data = synthesize_scenario(&c, &s, 5).unwrap();
        let se = msecr_from_measurements(&data.healthy, &data.damaged, &model).unwrap();
        let mut order: Vec<usize> = (0..20).collect();
        order.sort_by(|&a, &b| se.values[b].total_cmp(&se.values[a]));
        let mut top2 = [order[0], order[1]];
        top2.sort_unstable();
        assert_eq!(top2, [6, 7]);
        let flex = flexibility_index(&data.healthy, &data.damaged, &model).unwrap();
        assert!([6, 7].contains(&flex.argmax()));
    }

    #[test]
    fn features_ignore_mode_sign_flips() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let s = DamageScenario::uniform_reduction("pair", &[3], 0.2);
        let data = synthesize_scenario(&c, &s, 5).unwrap();
        let mut flipped = data.damaged.clone();
        flipped.mode_shapes.column_mut(1).neg_mut();
        flipped.curvatures.row_mut(1).neg_mut();
        let mut und_flipped = data.healthy.clone();
        und_flipped.mode_shapes.column_mut(3).neg_mut();
        und_flipped.curvatures.row_mut(3).neg_mut();
        for kind in [
            FeatureKind::Frequency,
            FeatureKind::StrainEnergy,
            FeatureKind::Flexibility,
        ] {
            let a = compute_feature(kind, &data.healthy, &data.damaged, &model).unwrap();
            let b = compute_feature(kind, &und_flipped, &flipped, &model).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn truncated_flexibility_is_dominated_by_first_mode() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let one = measure_solution(&model, 1).unwrap();
        let two = measure_solution(&model, 2).unwrap();
        // Flexibility over the measured (translational) DOFs, spectral norm.
        let flex = |m: &MeasuredModes| {
            let mut f = DMatrix::zeros(m.n_points(), m.n_points());
            for j in 0..m.n_modes() {
                f += m.mode_shapes.column(j) * m.mode_shapes.column(j).transpose()
                    / m.frequencies[j].powi(2);
            }
            f
        };
        let spectral = |a: &DMatrix<f64>| a.clone().svd(false, false).singular_values.max();
        let (f1, f2) = (flex(&one), flex(&two));
        let diff = spectral(&(&f2 - &f1)) / spectral(&f2);
        let ratio = (model.frequencies[0] / model.frequencies[1]).powi(2);
        // ‖ΔF‖ = ‖φ₂‖²/ω₂² and ‖F₂‖ ≥ ‖φ₁‖²/ω₁², so the frequency ratio bounds the
        // change up to the ratio of the sampled shape norms.
        let norms =
            two.mode_shapes.column(1).norm_squared() / two.mode_shapes.column(0).norm_squared();
        assert!(diff <= ratio * norms * (1.0 + 1e-12), "{diff} vs {ratio}");
        assert!((diff / ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let c = BeamConfig::reference();
        let model = healthy_model(&c);
        let a = measure_solution(&model, 5).unwrap();
        let b = measure_solution(&model, 4).unwrap();
        assert!(frequency_index(&a, &b, &model).is_err());
        assert!(curvature_index(&a, &b).is_err());
        let bad = DMatrix::zeros(40, 5);
        assert!(msecr_index(&bad, &DMatrix::zeros(40, 4), model.element_stiffness()).is_err());
    }
}
