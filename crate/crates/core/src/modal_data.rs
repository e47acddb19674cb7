//! Synthetic modal measurements: damage scenarios, sampling of a solved
//! model at the nodes, and Gaussian measurement noise.
//!
//! Only translations are treated as measured. Rotations stay inside the
//! model and are supplied from a reference solution where a full DOF vector
//! is needed (see [`expand_shapes`]).

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beam::{
    assemble, curvature_matrix, solve_modes, BeamConfig, DamageParams, ModalSolution,
};
use crate::error::{Error, Result};

/// Default number of measured modes.
pub const DEFAULT_MODES: usize = 5;

/// A set of stiffness reductions plus measurement-noise settings.
///
/// Element indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageScenario {
    pub name: String,
    pub damaged_elements: Vec<(usize, f64)>,
    pub noise_level: f64,
    pub seed: u64,
}

impl DamageScenario {
    pub fn healthy(name: impl Into<String>) -> Self {
        DamageScenario {
            name: name.into(),
            damaged_elements: Vec::new(),
            noise_level: 0.0,
            seed: 0,
        }
    }

    /// Same reduction applied to every listed element.
    pub fn uniform_reduction(name: impl Into<String>, elements: &[usize], reduction: f64) -> Self {
        DamageScenario {
            name: name.into(),
            damaged_elements: elements.iter().map(|&e| (e, reduction)).collect(),
            noise_level: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, noise_level: f64, seed: u64) -> Self {
        self.noise_level = noise_level;
        self.seed = seed;
        self
    }

    pub fn validate(&self, config: &BeamConfig) -> Result<()> {
        let mut seen = vec![false; config.n_elements];
        for &(e, r) in &self.damaged_elements {
            if e >= config.n_elements {
                return Err(Error::invalid(format!(
                    "damaged element {e} outside mesh of {} elements",
                    config.n_elements
                )));
            }
            if seen[e] {
                return Err(Error::invalid(format!("element {e} listed twice")));
            }
            seen[e] = true;
            if !(0.0..1.0).contains(&r) {
                return Err(Error::invalid(format!(
                    "reduction for element {e} must lie in [0, 1), got {r}"
                )));
            }
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::invalid(format!(
                "noise level must be non-negative, got {}",
                self.noise_level
            )));
        }
        Ok(())
    }

    pub fn damaged_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.damaged_elements.iter().map(|&(e, _)| e).collect();
        v.sort_unstable();
        v
    }
}

pub fn make_damaged_params(config: &BeamConfig, scenario: &DamageScenario) -> Result<DamageParams> {
    scenario.validate(config)?;
    let mut theta = vec![config.healthy_youngs_modulus; config.n_elements];
    for &(e, r) in &scenario.damaged_elements {
        theta[e] = config.healthy_youngs_modulus * (1.0 - r);
    }
    DamageParams::new(theta)
}

/// Modal data as a monitoring system would see it.
///
/// `mode_shapes` is `N × m` (one column per mode, translations at the grid
/// nodes); `curvatures` is `m × N`. `grid` holds node coordinates in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredModes {
    pub frequencies: DVector<f64>,
    pub mode_shapes: DMatrix<f64>,
    pub curvatures: DMatrix<f64>,
    pub grid: Vec<f64>,
}

impl MeasuredModes {
    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn shape(&self, j: usize) -> &[f64] {
        let n = self.mode_shapes.nrows();
        &self.mode_shapes.as_slice()[j * n..(j + 1) * n]
    }

    pub fn check_compatible(&self, other: &MeasuredModes) -> Result<()> {
        if self.n_modes() != other.n_modes() {
            return Err(Error::invalid(format!(
                "mode counts differ: {} vs {}",
                self.n_modes(),
                other.n_modes()
            )));
        }
        if self.grid != other.grid {
            return Err(Error::invalid("measurement grids differ"));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.n_points() < 4 {
            return Err(Error::invalid("measurement grid needs at least 4 points"));
        }
        if let Some(w) = self
            .frequencies
            .iter()
            .find(|w| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::invalid(format!(
                "measured frequency {w} is not positive"
            )));
        }
        if self.curvatures.nrows() != self.n_modes() || self.curvatures.ncols() != self.n_points() {
            return Err(Error::invalid(
                "curvature matrix shape does not match modes × grid",
            ));
        }
        Ok(())
    }
}

/// Curvatures (`m × N`) of nodal shapes (`N × m`) via the finite-difference operator.
pub fn curvatures_from_shapes(shapes: &DMatrix<f64>, spacing: f64) -> Result<DMatrix<f64>> {
    let c = curvature_matrix(shapes.nrows(), spacing)?;
    Ok((c * shapes).transpose())
}

/// Samples the first `n_modes` modes of a solved model at its nodes, noise free.
pub fn measure_solution(solution: &ModalSolution, n_modes: usize) -> Result<MeasuredModes> {
    if n_modes == 0 || n_modes > solution.n_modes() {
        return Err(Error::invalid(format!(
            "cannot measure {n_modes} modes from a solution with {}",
            solution.n_modes()
        )));
    }
    let grid = solution.dof_map().node_positions().to_vec();
    let mut shapes = DMatrix::zeros(grid.len(), n_modes);
    for j in 0..n_modes {
        shapes.set_column(j, &DVector::from_vec(solution.nodal_shape(j)));
    }
    let curvatures = curvatures_from_shapes(&shapes, grid[1] - grid[0])?;
    let m = MeasuredModes {
        frequencies: solution.frequencies.rows(0, n_modes).into_owned(),
        mode_shapes: shapes,
        curvatures,
        grid,
    };
    m.validate()?;
    Ok(m)
}

/// Solves the model at `params`, samples `n_modes` modes and perturbs them:
/// `ω̃ = ω (1 + η z)` and `φ̃(x_i) = φ(x_i) + η |φ(x_i)| z`, with curvatures
/// recomputed from the noisy shapes. `stream` selects an independent random
/// stream for the same seed.
pub fn synthesize_measurement(
    config: &BeamConfig,
    params: &DamageParams,
    n_modes: usize,
    noise_level: f64,
    seed: u64,
) -> Result<MeasuredModes> {
    synthesize_on_stream(config, params, n_modes, noise_level, seed, 0)
}

fn synthesize_on_stream(
    config: &BeamConfig,
    params: &DamageParams,
    n_modes: usize,
    noise_level: f64,
    seed: u64,
    stream: u64,
) -> Result<MeasuredModes> {
    if !(noise_level.is_finite() && noise_level >= 0.0) {
        return Err(Error::invalid(format!(
            "noise level must be non-negative, got {noise_level}"
        )));
    }
    let solution = solve_modes(assemble(config, params)?, n_modes)?;
    let mut measured = measure_solution(&solution, n_modes)?;
    if noise_level == 0.0 {
        return Ok(measured);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    for w in measured.frequencies.iter_mut() {
        *w *= 1.0 + noise_level * normal();
    }
    for phi in measured.mode_shapes.iter_mut() {
        *phi += noise_level * phi.abs() * normal();
    }
    measured.curvatures = curvatures_from_shapes(&measured.mode_shapes, measured.spacing())?;
    measured.validate()?;
    Ok(measured)
}

/// Healthy baseline and damaged measurements for one scenario, plus the
/// true parameters. Both states receive noise from independent streams.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub healthy: MeasuredModes,
    pub damaged: MeasuredModes,
    pub truth: DamageParams,
}

pub fn synthesize_scenario(
    config: &BeamConfig,
    scenario: &DamageScenario,
    n_modes: usize,
) -> Result<ScenarioData> {
    let truth = make_damaged_params(config, scenario)?;
    let healthy = synthesize_on_stream(
        config,
        &DamageParams::uniform(config),
        n_modes,
        scenario.noise_level,
        scenario.seed,
        0,
    )?;
    let damaged = synthesize_on_stream(
        config,
        &truth,
        n_modes,
        scenario.noise_level,
        scenario.seed,
        1,
    )?;
    Ok(ScenarioData {
        healthy,
        damaged,
        truth,
    })
}

/// Expands measured translations to full free-DOF vectors (`n_free × m`).
///
/// Translational DOFs come from the measurement; rotational DOFs are taken
/// from the reference solution's mode `j`, flipped if needed so that the
/// reference agrees in sign with the measured translations.
pub fn expand_shapes(measured: &MeasuredModes, reference: &ModalSolution) -> Result<DMatrix<f64>> {
    let dofs = reference.dof_map();
    if measured.n_points() != dofs.n_nodes() {
        return Err(Error::invalid(format!(
            "measurement has {} points but the model has {} nodes",
            measured.n_points(),
            dofs.n_nodes()
        )));
    }
    if measured.n_modes() > reference.n_modes() {
        return Err(Error::invalid(
            "reference solution has fewer modes than the measurement",
        ));
    }
    let n = dofs.n_free();
    let mut out = DMatrix::zeros(n, measured.n_modes());
    for j in 0..measured.n_modes() {
        let shape = measured.shape(j);
        let sign = alignment_sign(shape, &reference.nodal_shape(j));
        let model = reference.mode(j);
        for node in 0..dofs.n_nodes() {
            if let Some(i) = dofs.translation(node) {
                out[(i, j)] = shape[node];
            }
            if let Some(i) = dofs.rotation(node) {
                out[(i, j)] = sign * model[i];
            }
        }
    }
    Ok(out)
}

/// Expands measured translations to full free-DOF vectors (`n_free × m`),
/// filling rotations by static condensation on the reference stiffness:
/// `θ_r = -K_rr⁻¹ K_rt w_t`. Only the reference matrices are used, so the
/// result does not depend on the (unknown) stiffness of the measured state.
pub fn expand_shapes_static(
    measured: &MeasuredModes,
    reference: &ModalSolution,
) -> Result<DMatrix<f64>> {
    let dofs = reference.dof_map();
    if measured.n_points() != dofs.n_nodes() {
        return Err(Error::invalid(format!(
            "measurement has {} points but the model has {} nodes",
            measured.n_points(),
            dofs.n_nodes()
        )));
    }
    let t = dofs.translational_dofs();
    let r = dofs.rotational_dofs();
    let k = reference.stiffness();
    let krr = DMatrix::from_fn(r.len(), r.len(), |a, b| k[(r[a], r[b])]);
    let krt = DMatrix::from_fn(r.len(), t.len(), |a, b| k[(r[a], t[b])]);
    let condensation = krr
        .cholesky()
        .ok_or_else(|| Error::numeric("rotational stiffness block is not positive definite"))?
        .solve(&krt);

    let measured_nodes: Vec<usize> = (0..dofs.n_nodes())
        .filter(|&n| dofs.translation(n).is_some())
        .collect();
    let mut out = DMatrix::zeros(dofs.n_free(), measured.n_modes());
    for j in 0..measured.n_modes() {
        let shape = measured.shape(j);
        let wt = DVector::from_iterator(t.len(), measured_nodes.iter().map(|&n| shape[n]));
        let rot = -(&condensation * &wt);
        for (a, &i) in t.iter().enumerate() {
            out[(i, j)] = wt[a];
        }
        for (a, &i) in r.iter().enumerate() {
            out[(i, j)] = rot[a];
        }
    }
    Ok(out)
}

/// `±1` so that `sign · model` points the same way as `measured`.
pub fn alignment_sign(measured: &[f64], model: &[f64]) -> f64 {
    let dot: f64 = measured.iter().zip(model).map(|(a, b)| a * b).sum();
    if dot < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damaged_params_from_reductions() {
        let c = BeamConfig::reference();
        let s = DamageScenario::uniform_reduction("pair", &[6, 7], 0.25);
        let p = make_damaged_params(&c, &s).unwrap();
        assert_eq!(p[6], 52.5e9);
        assert_eq!(p[7], 52.5e9);
        assert_eq!(p[5], 70e9);

        let p = make_damaged_params(&c, &DamageScenario::healthy("h")).unwrap();
        assert!(p.as_slice().iter().all(|&e| e == 70e9));

        let s = DamageScenario::uniform_reduction("one", &[0], 0.5);
        let p = make_damaged_params(&c, &s).unwrap();
        assert_eq!(p[0], 35e9);
        assert!(p.as_slice()[1..].iter().all(|&e| e == 70e9));
    }

    #[test]
    fn scenario_validation() {
        let c = BeamConfig::reference();
        let dup = DamageScenario {
            name: "dup".into(),
            damaged_elements: vec![(3, 0.1), (3, 0.2)],
            noise_level: 0.0,
            seed: 0,
        };
        assert!(make_damaged_params(&c, &dup).is_err());
        let out = DamageScenario::uniform_reduction("x", &[20], 0.1);
        assert!(out.validate(&c).is_err());
        let full = DamageScenario::uniform_reduction("x", &[2], 1.0);
        assert!(full.validate(&c).is_err());
    }

    #[test]
    fn zero_noise_equals_model_output() {
        let c = BeamConfig::reference();
        let p = DamageParams::uniform(&c);
        let a = synthesize_measurement(&c, &p, 5, 0.0, 7).unwrap();
        let sol = solve_modes(assemble(&c, &p).unwrap(), 5).unwrap();
        let b = measure_solution(&sol, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.curvatures.nrows(), 5);
        assert_eq!(a.curvatures.ncols(), 21);
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let c = BeamConfig::reference();
        let p = DamageParams::uniform(&c);
        let clean = synthesize_measurement(&c, &p, 5, 0.0, 0).unwrap();
        let a = synthesize_measurement(&c, &p, 5, 0.01, 42).unwrap();
        let b = synthesize_measurement(&c, &p, 5, 0.01, 42).unwrap();
        assert_eq!(a, b);
        let other = synthesize_measurement(&c, &p, 5, 0.01, 43).unwrap();
        assert_ne!(a, other);
        for j in 0..5 {
            // 5σ at η = 1 %.
            assert!((a.frequencies[j] - clean.frequencies[j]).abs() <= 0.05 * clean.frequencies[j]);
        }
    }

    #[test]
    fn shape_noise_keeps_zero_entries_zero() {
        let c = BeamConfig::reference();
        let p = DamageParams::uniform(&c);
        let a = synthesize_measurement(&c, &p, 5, 0.05, 3).unwrap();
        for j in 0..5 {
            assert_eq!(a.shape(j)[0], 0.0);
            assert_eq!(a.shape(j)[20], 0.0);
        }
    }

    #[test]
    fn expansion_recovers_model_vectors() {
        let c = BeamConfig::reference();
        let sol = solve_modes(assemble(&c, &DamageParams::uniform(&c)).unwrap(), 5).unwrap();
        let meas = measure_solution(&sol, 5).unwrap();
        let full = expand_shapes(&meas, &sol).unwrap();
        assert!((&full - &sol.mode_shapes).amax() < 1e-15);

        // Flipping a measured mode flips its rotations too.
        let mut flipped = meas.clone();
        flipped.mode_shapes.column_mut(2).neg_mut();
        let full = expand_shapes(&flipped, &sol).unwrap();
        assert!((full.column(2) + sol.mode_shapes.column(2)).amax() < 1e-15);
    }

    #[test]
    fn static_expansion_keeps_translations_and_approximates_rotations() {
        let c = BeamConfig::reference();
        let sol = solve_modes(assemble(&c, &DamageParams::uniform(&c)).unwrap(), 5).unwrap();
        let meas = measure_solution(&sol, 5).unwrap();
        let full = expand_shapes_static(&meas, &sol).unwrap();
        let dofs = sol.dof_map();
        for j in 0..5 {
            for &i in &dofs.translational_dofs() {
                assert_eq!(full[(i, j)], sol.mode_shapes[(i, j)]);
            }
            let r = dofs.rotational_dofs();
            let err = r
                .iter()
                .map(|&i| (full[(i, j)] - sol.mode_shapes[(i, j)]).abs())
                .fold(0.0, f64::max);
            let scale = r
                .iter()
                .map(|&i| sol.mode_shapes[(i, j)].abs())
                .fold(0.0, f64::max);
            assert!(err < 0.05 * scale, "mode {j}: {err} vs {scale}");
        }
    }
}
