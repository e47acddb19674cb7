use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::assembly::{Assembly, DofMap, ElementMatrix};
use crate::error::{Error, Result};

/// Eigenpairs of `K φ = λ M φ` for one parameter state.
///
/// `mode_shapes` holds mass-normalized eigenvectors over the free DOFs as
/// columns, ascending in eigenvalue. Each column is signed so that its
/// largest-magnitude translation is positive.
#[derive(Debug, Clone)]
pub struct ModalSolution {
    pub eigenvalues: DVector<f64>,
    pub frequencies: DVector<f64>,
    pub mode_shapes: DMatrix<f64>,
    pub assembly: Assembly,
}

impl ModalSolution {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.assembly.stiffness
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.assembly.mass
    }

    pub fn element_stiffness(&self) -> &[ElementMatrix] {
        &self.assembly.element_stiffness
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.assembly.dof_map
    }

    pub fn mode(&self, j: usize) -> &[f64] {
        let n = self.mode_shapes.nrows();
        &self.mode_shapes.as_slice()[j * n..(j + 1) * n]
    }

    /// Translations of mode `j` at every node, zero at constrained nodes.
    pub fn nodal_shape(&self, j: usize) -> Vec<f64> {
        self.dof_map().nodal_translations(self.mode(j))
    }
}

/// Solves the first `n_modes` eigenpairs by Cholesky reduction of the mass
/// matrix to a standard symmetric problem.
pub fn solve_modes(assembly: Assembly, n_modes: usize) -> Result<ModalSolution> {
    let n = assembly.stiffness.nrows();
    if n_modes == 0 || n_modes > n {
        return Err(Error::invalid(format!(
            "requested {n_modes} modes but the model has {n} free DOFs"
        )));
    }

    let chol = assembly
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numeric("mass matrix is not positive definite"))?;
    let l = chol.l();

    // A = L⁻¹ K L⁻ᵀ
    let x = l
        .solve_lower_triangular(&assembly.stiffness)
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    let a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
    let a = (&a + a.transpose()) * 0.5;

    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::numeric(format!(
            "symmetric eigensolver did not converge for n = {n}"
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(n_modes);

    let lt = l.transpose();
    let translational = assembly.dof_map.translational_dofs();
    let mut eigenvalues = DVector::zeros(n_modes);
    let mut shapes = DMatrix::zeros(n, n_modes);
    for (col, &idx) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(idx).into_owned();
        let mut phi = lt
            .solve_upper_triangular(&v)
            .ok_or_else(|| Error::numeric("singular Cholesky factor"))?;
        let norm = phi.dot(&(&assembly.mass * &phi)).sqrt();
        phi /= norm;
        // The reduced problem resolves low modes only to roundoff relative to
        // the top of the spectrum; one shifted inverse-iteration step and a
        // Rayleigh quotient bring them to working precision.
        let rough = phi.dot(&(&assembly.stiffness * &phi));
        let shifted = &assembly.stiffness - &assembly.mass * rough;
        if let Some(refined) = shifted.lu().solve(&(&assembly.mass * &phi)) {
            if refined.iter().all(|v| v.is_finite()) {
                let norm = refined.dot(&(&assembly.mass * &refined)).sqrt();
                if norm > 0.0 {
                    phi = refined / norm;
                }
            }
        }
        let lambda: f64 = assembly
            .element_stiffness
            .iter()
            .map(|ke| ke.strain_energy(phi.as_slice()))
            .sum();
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::numeric(format!(
                "mode {col} has non-positive eigenvalue {lambda:e}"
            )));
        }
        if sign_reference(phi.as_slice(), &translational) < 0.0 {
            phi.neg_mut();
        }
        eigenvalues[col] = lambda;
        shapes.set_column(col, &phi);
    }

    Ok(ModalSolution {
        frequencies: eigenvalues.map(f64::sqrt),
        eigenvalues,
        mode_shapes: shapes,
        assembly,
    })
}

/// The entry whose sign defines the mode orientation: the largest-magnitude
/// translation, taking the lowest DOF among entries tied to within 1e-9.
fn sign_reference(phi: &[f64], translational: &[usize]) -> f64 {
    let peak = translational
        .iter()
        .map(|&i| phi[i].abs())
        .fold(0.0, f64::max);
    translational
        .iter()
        .map(|&i| phi[i])
        .find(|v| v.abs() >= peak * (1.0 - 1e-9))
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{assemble, BeamConfig, BoundaryCondition, DamageParams};
    use std::f64::consts::PI;

    fn analytic(config: &BeamConfig, beta_l: f64) -> f64 {
        let ei = config.healthy_youngs_modulus * config.second_moment();
        let rho_a = config.density * config.area();
        (beta_l / config.length).powi(2) * (ei / rho_a).sqrt()
    }

    /// Root of cos(x)·cosh(x) + 1 = 0 in the bracket by bisection.
    fn cantilever_root(mut lo: f64, mut hi: f64) -> f64 {
        let f = |x: f64| x.cos() * x.cosh() + 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn healthy(config: &BeamConfig, m: usize) -> ModalSolution {
        solve_modes(assemble(config, &DamageParams::uniform(config)).unwrap(), m).unwrap()
    }

    #[test]
    fn simply_supported_matches_closed_form() {
        let c = BeamConfig::reference();
        let sol = healthy(&c, 5);
        for j in 0..5 {
            let exact = analytic(&c, (j + 1) as f64 * PI);
            let rel = (sol.frequencies[j] - exact).abs() / exact;
            assert!(rel < 5e-3, "mode {j}: {} vs {exact}", sol.frequencies[j]);
        }
    }

    #[test]
    fn cantilever_matches_characteristic_roots() {
        let c = BeamConfig::reference().with_boundary(BoundaryCondition::Cantilever);
        let sol = healthy(&c, 3);
        let roots = [
            cantilever_root(1.0, 3.0),
            cantilever_root(4.0, 5.5),
            cantilever_root(7.0, 8.5),
        ];
        assert!((roots[0] - 1.8751).abs() < 1e-4);
        for (j, r) in roots.iter().enumerate() {
            let exact = analytic(&c, *r);
            assert!((sol.frequencies[j] - exact).abs() / exact < 5e-3);
        }
    }

    #[test]
    fn modes_are_mass_orthonormal() {
        let c = BeamConfig::reference();
        let theta: Vec<f64> = (0..20).map(|i| 70e9 * (1.0 - 0.01 * i as f64)).collect();
        let sol = solve_modes(
            assemble(&c, &DamageParams::new(theta).unwrap()).unwrap(),
            10,
        )
        .unwrap();
        let gram = sol.mode_shapes.transpose() * sol.mass() * &sol.mode_shapes;
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j { 1.0 } else { 0.0 };
                let tol = if i == j { 1e-10 } else { 1e-8 };
                assert!((gram[(i, j)] - expect).abs() < tol);
            }
        }
        assert!(sol.eigenvalues.as_slice().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sign_convention_peak_translation_positive() {
        let c = BeamConfig::reference();
        let sol = healthy(&c, 5);
        for j in 0..5 {
            let shape = sol.nodal_shape(j);
            let peak = shape.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            let first = shape
                .iter()
                .find(|v| v.abs() >= peak * (1.0 - 1e-9))
                .unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn too_many_modes_is_invalid() {
        let c = BeamConfig::reference();
        let asm = assemble(&c, &DamageParams::uniform(&c)).unwrap();
        assert!(matches!(
            solve_modes(asm.clone(), 41),
            Err(Error::InvalidInput(_))
        ));
        assert!(solve_modes(asm, 0).is_err());
    }

    #[test]
    fn mesh_refinement_changes_low_frequencies_little() {
        let coarse = BeamConfig::reference();
        let fine = BeamConfig::reference().with_elements(40);
        let a = healthy(&coarse, 5);
        let b = healthy(&fine, 5);
        for j in 0..5 {
            assert!((a.frequencies[j] - b.frequencies[j]).abs() / b.frequencies[j] < 2e-3);
        }
    }
}
