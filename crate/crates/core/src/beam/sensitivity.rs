//! Eigenpair sensitivities with respect to element Young's moduli.
//!
//! Stiffness is linear in each θ_k and mass does not depend on θ, so
//! `∂K/∂θ_k = K_k / θ_k` and the mass-normalized eigenvector derivative has
//! no component along its own mode.

use nalgebra::{DMatrix, DVector};

use super::eigen::ModalSolution;
use super::DamageParams;
use crate::error::{Error, Result};

/// Derivatives of the first `m` eigenpairs with respect to one parameter.
#[derive(Debug, Clone)]
pub struct EigenDerivatives {
    pub d_lambda: DVector<f64>,
    /// Column `j` is `∂φ_j/∂θ` over the free DOFs.
    pub d_phi: DMatrix<f64>,
}

/// `∂K/∂θ_k` in the global free-DOF basis.
pub fn dk_dtheta(
    solution: &ModalSolution,
    params: &DamageParams,
    k: usize,
) -> Result<DMatrix<f64>> {
    let elements = solution.element_stiffness();
    if k >= elements.len() || k >= params.len() {
        return Err(Error::invalid(format!(
            "element index {k} out of range for {} elements",
            elements.len()
        )));
    }
    let n = solution.stiffness().nrows();
    Ok(elements[k].to_global(n) / params[k])
}

/// Eigenvalue and eigenvector derivatives for a general `∂K/∂θ`.
///
/// The eigenvector derivative is expanded over the first `retained` modes;
/// it is exact when every mode of the model is retained.
pub fn eigen_derivatives(
    solution: &ModalSolution,
    dk: &DMatrix<f64>,
    n_modes: usize,
    retained: usize,
) -> Result<EigenDerivatives> {
    check_counts(solution, n_modes, retained)?;
    let phi_h = solution.mode_shapes.columns(0, retained);
    let couplings = phi_h.transpose() * dk * phi_h;
    derivatives_from_couplings(solution, &couplings, n_modes, retained)
}

/// `Φ_Hᵀ (∂K/∂θ_k) Φ_H` for element `k`, touching only its 4×4 block.
pub fn element_mode_couplings(
    solution: &ModalSolution,
    element: usize,
    theta_k: f64,
    retained: usize,
) -> DMatrix<f64> {
    let ke = &solution.element_stiffness()[element];
    let shapes = &solution.mode_shapes;
    let mut gathered = DMatrix::zeros(4, retained);
    for (a, dof) in ke.dofs.iter().enumerate() {
        if let Some(i) = dof {
            for h in 0..retained {
                gathered[(a, h)] = shapes[(*i, h)];
            }
        }
    }
    let local = DMatrix::from_column_slice(4, 4, ke.local.as_slice()) / theta_k;
    gathered.transpose() * local * gathered
}

pub(crate) fn check_counts(
    solution: &ModalSolution,
    n_modes: usize,
    retained: usize,
) -> Result<()> {
    if n_modes == 0 || n_modes > retained || retained > solution.n_modes() {
        return Err(Error::invalid(format!(
            "need 1 <= m ({n_modes}) <= H ({retained}) <= solved modes ({})",
            solution.n_modes()
        )));
    }
    Ok(())
}

/// Fails if any of the first `n_modes` eigenvalues is repeated among the
/// first `retained` within relative 1e-8.
pub fn check_simple_spectrum(
    solution: &ModalSolution,
    n_modes: usize,
    retained: usize,
) -> Result<()> {
    let lambda = &solution.eigenvalues;
    for j in 0..n_modes {
        for h in 0..retained {
            if h == j {
                continue;
            }
            let scale = lambda[j].abs().max(lambda[h].abs());
            if (lambda[j] - lambda[h]).abs() <= 1e-8 * scale {
                return Err(Error::DegenerateSpectrum {
                    first: j.min(h),
                    second: j.max(h),
                    value: lambda[j],
                });
            }
        }
    }
    Ok(())
}

/// Builds derivatives from the modal coupling matrix `G[h, j] = φ_hᵀ K' φ_j`.
pub(crate) fn derivatives_from_couplings(
    solution: &ModalSolution,
    couplings: &DMatrix<f64>,
    n_modes: usize,
    retained: usize,
) -> Result<EigenDerivatives> {
    check_simple_spectrum(solution, n_modes, retained)?;
    let lambda = &solution.eigenvalues;
    let n = solution.mode_shapes.nrows();
    let mut d_lambda = DVector::zeros(n_modes);
    let mut d_phi = DMatrix::zeros(n, n_modes);
    for j in 0..n_modes {
        d_lambda[j] = couplings[(j, j)];
        let coeffs = DVector::from_fn(retained, |h, _| {
            if h == j {
                0.0
            } else {
                couplings[(h, j)] / (lambda[j] - lambda[h])
            }
        });
        let col = solution.mode_shapes.columns(0, retained) * coeffs;
        d_phi.set_column(j, &col);
    }
    Ok(EigenDerivatives { d_lambda, d_phi })
}
