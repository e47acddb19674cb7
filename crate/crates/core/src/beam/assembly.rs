use nalgebra::{DMatrix, DVector, Matrix4};

use super::{BeamConfig, BoundaryCondition, DamageParams};
use crate::error::Result;

/// Hermite beam element stiffness in local DOF order (w1, θ1, w2, θ2).
pub fn element_stiffness_local(ei: f64, h: f64) -> Matrix4<f64> {
    let c = ei / h.powi(3);
    let h2 = h * h;
    Matrix4::new(
        12.0,
        6.0 * h,
        -12.0,
        6.0 * h,
        6.0 * h,
        4.0 * h2,
        -6.0 * h,
        2.0 * h2,
        -12.0,
        -6.0 * h,
        12.0,
        -6.0 * h,
        6.0 * h,
        2.0 * h2,
        -6.0 * h,
        4.0 * h2,
    ) * c
}

/// Consistent mass matrix of the Hermite beam element.
pub fn element_mass_local(rho_a: f64, h: f64) -> Matrix4<f64> {
    let c = rho_a * h / 420.0;
    let h2 = h * h;
    Matrix4::new(
        156.0,
        22.0 * h,
        54.0,
        -13.0 * h,
        22.0 * h,
        4.0 * h2,
        13.0 * h,
        -3.0 * h2,
        54.0,
        13.0 * h,
        156.0,
        -22.0 * h,
        -13.0 * h,
        -3.0 * h2,
        -22.0 * h,
        4.0 * h2,
    ) * c
}

/// Node and element to DOF bookkeeping.
///
/// Full DOF `2n` is the translation of node `n` and `2n + 1` its rotation.
/// Constrained DOFs have no free index.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    node_x: Vec<f64>,
    free_index: Vec<Option<usize>>,
    n_free: usize,
}

impl DofMap {
    pub fn new(config: &BeamConfig) -> Self {
        let n_nodes = config.n_nodes();
        let constrained: Vec<usize> = match config.boundary_condition {
            BoundaryCondition::SimplySupported => vec![0, 2 * (n_nodes - 1)],
            BoundaryCondition::Cantilever => vec![0, 1],
        };
        let mut free_index = Vec::with_capacity(2 * n_nodes);
        let mut next = 0;
        for dof in 0..2 * n_nodes {
            if constrained.contains(&dof) {
                free_index.push(None);
            } else {
                free_index.push(Some(next));
                next += 1;
            }
        }
        DofMap {
            node_x: config.node_positions(),
            free_index,
            n_free: next,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.node_x.len()
    }

    pub fn n_elements(&self) -> usize {
        self.node_x.len() - 1
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn node_positions(&self) -> &[f64] {
        &self.node_x
    }

    pub fn element_length(&self, element: usize) -> f64 {
        self.node_x[element + 1] - self.node_x[element]
    }

    pub fn translation(&self, node: usize) -> Option<usize> {
        self.free_index[2 * node]
    }

    pub fn rotation(&self, node: usize) -> Option<usize> {
        self.free_index[2 * node + 1]
    }

    /// Free indices of the element's (w1, θ1, w2, θ2).
    pub fn element_dofs(&self, element: usize) -> [Option<usize>; 4] {
        let b = 2 * element;
        [
            self.free_index[b],
            self.free_index[b + 1],
            self.free_index[b + 2],
            self.free_index[b + 3],
        ]
    }

    /// Free indices that hold translations or rotations, in ascending order.
    pub fn translational_dofs(&self) -> Vec<usize> {
        (0..self.n_nodes())
            .filter_map(|n| self.translation(n))
            .collect()
    }

    pub fn rotational_dofs(&self) -> Vec<usize> {
        (0..self.n_nodes())
            .filter_map(|n| self.rotation(n))
            .collect()
    }

    /// Translations at every node (constrained nodes read as zero).
    pub fn nodal_translations(&self, free: &[f64]) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|n| self.translation(n).map_or(0.0, |i| free[i]))
            .collect()
    }

    /// Scatters a free-DOF vector into the full `2 * n_nodes` layout.
    pub fn to_full(&self, free: &[f64]) -> Vec<f64> {
        self.free_index
            .iter()
            .map(|idx| idx.map_or(0.0, |i| free[i]))
            .collect()
    }
}

/// One element's stiffness, stored as its 4×4 block plus the free DOFs it
/// scatters into. Semantically this is the element matrix expanded to the
/// global free-DOF basis; the dense form is available through
/// [`ElementMatrix::to_global`].
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrix {
    pub local: Matrix4<f64>,
    pub dofs: [Option<usize>; 4],
    /// `E I` of the element.
    pub rigidity: f64,
    pub length: f64,
}

/// Second derivatives of the Hermite shape functions at the element ends,
/// as a 2×4 map from (w1, θ1, w2, θ2) to end curvatures.
pub fn hermite_curvature_map(h: f64) -> nalgebra::Matrix2x4<f64> {
    let h2 = h * h;
    nalgebra::Matrix2x4::new(
        -6.0 / h2,
        -4.0 / h,
        6.0 / h2,
        -2.0 / h,
        6.0 / h2,
        2.0 / h,
        -6.0 / h2,
        4.0 / h,
    )
}

impl ElementMatrix {
    /// `uᵀ K_e u` evaluated as `E I ∫ (w'')² dx` from the end curvatures.
    ///
    /// Same value as [`ElementMatrix::quad_form`] in exact arithmetic, but
    /// without the cancellation between large translational terms, so low
    /// modes keep full relative precision.
    pub fn strain_energy(&self, u: &[f64]) -> f64 {
        let k = hermite_curvature_map(self.length) * self.gather(u);
        self.rigidity * self.length * (k[0] * k[0] + k[0] * k[1] + k[1] * k[1]) / 3.0
    }

    /// `uᵀ K_e v` through end curvatures, the bilinear form behind
    /// [`ElementMatrix::strain_energy`].
    pub fn strain_bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let map = hermite_curvature_map(self.length);
        let a = map * self.gather(u);
        let b = map * self.gather(v);
        self.rigidity
            * self.length
            * (a[0] * b[0] + 0.5 * (a[0] * b[1] + a[1] * b[0]) + a[1] * b[1])
            / 3.0
    }

    /// `uᵀ K_e v` for free-DOF vectors.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let ul = self.gather(u);
        let vl = self.gather(v);
        ul.dot(&(self.local * vl))
    }

    pub fn quad_form(&self, u: &[f64]) -> f64 {
        self.bilinear(u, u)
    }

    /// Picks this element's DOFs out of a free-DOF vector; constrained slots read zero.
    pub fn gather(&self, u: &[f64]) -> nalgebra::Vector4<f64> {
        nalgebra::Vector4::from_fn(|a, _| self.dofs[a].map_or(0.0, |i| u[i]))
    }

    pub fn add_to(&self, target: &mut DMatrix<f64>, scale: f64) {
        for (a, ia) in self.dofs.iter().enumerate() {
            let Some(ia) = ia else { continue };
            for (b, ib) in self.dofs.iter().enumerate() {
                let Some(ib) = ib else { continue };
                target[(*ia, *ib)] += scale * self.local[(a, b)];
            }
        }
    }

    pub fn to_global(&self, n_free: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n_free, n_free);
        self.add_to(&mut out, 1.0);
        out
    }

    /// `K_e u` in the free-DOF basis.
    pub fn apply(&self, u: &[f64], n_free: usize) -> DVector<f64> {
        let local = self.local * self.gather(u);
        let mut out = DVector::zeros(n_free);
        for (a, ia) in self.dofs.iter().enumerate() {
            if let Some(ia) = ia {
                out[*ia] += local[a];
            }
        }
        out
    }
}

/// Global matrices over the free DOFs together with their element pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub element_stiffness: Vec<ElementMatrix>,
    pub dof_map: DofMap,
}

pub fn assemble(config: &BeamConfig, params: &DamageParams) -> Result<Assembly> {
    config.validate()?;
    params.check_against(config)?;

    let dof_map = DofMap::new(config);
    let n = dof_map.n_free();
    let h = config.element_length();
    let inertia = config.second_moment();
    let mass_local = element_mass_local(config.density * config.area(), h);

    let mut stiffness = DMatrix::zeros(n, n);
    let mut mass = DMatrix::zeros(n, n);
    let mut element_stiffness = Vec::with_capacity(config.n_elements);
    for e in 0..config.n_elements {
        let dofs = dof_map.element_dofs(e);
        let ke = ElementMatrix {
            local: element_stiffness_local(params[e] * inertia, h),
            dofs,
            rigidity: params[e] * inertia,
            length: h,
        };
        ke.add_to(&mut stiffness, 1.0);
        ElementMatrix {
            local: mass_local,
            dofs,
            rigidity: 0.0,
            length: h,
        }
        .add_to(&mut mass, 1.0);
        element_stiffness.push(ke);
    }

    Ok(Assembly {
        stiffness,
        mass,
        element_stiffness,
        dof_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BoundaryCondition;

    fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max() / b.abs().max()
    }

    #[test]
    fn free_dof_counts() {
        let c = BeamConfig::reference();
        let asm = assemble(&c, &DamageParams::uniform(&c)).unwrap();
        // 21 nodes × 2 DOFs minus the two end translations.
        assert_eq!(asm.dof_map.n_free(), 40);
        assert_eq!(asm.stiffness.nrows(), 40);
        let cant = c.with_boundary(BoundaryCondition::Cantilever);
        let asm = assemble(&cant, &DamageParams::uniform(&cant)).unwrap();
        assert_eq!(asm.dof_map.n_free(), 40);
        assert_eq!(asm.dof_map.translation(0), None);
        assert_eq!(asm.dof_map.rotation(0), None);
        assert_eq!(asm.dof_map.translation(20), Some(38));
    }

    #[test]
    fn element_pieces_reassemble_global() {
        let c = BeamConfig::reference();
        let theta: Vec<f64> = (0..20).map(|i| 70e9 * (0.6 + 0.02 * i as f64)).collect();
        let asm = assemble(&c, &DamageParams::new(theta).unwrap()).unwrap();
        let mut sum = DMatrix::zeros(40, 40);
        for ke in &asm.element_stiffness {
            sum += ke.to_global(40);
        }
        assert!(rel_diff(&sum, &asm.stiffness) < 1e-9);
        assert!(asm
            .stiffness
            .relative_eq(&asm.stiffness.transpose(), 0.0, 0.0));
        assert!(asm.mass.relative_eq(&asm.mass.transpose(), 0.0, 0.0));
    }

    #[test]
    fn stiffness_linear_in_modulus_mass_independent() {
        let c = BeamConfig::reference();
        let base = DamageParams::uniform(&c);
        let mut doubled = base.clone().into_vec();
        doubled[6] *= 2.0;
        let a = assemble(&c, &base).unwrap();
        let b = assemble(&c, &DamageParams::new(doubled).unwrap()).unwrap();
        assert_eq!(a.mass, b.mass);
        let expect = a.element_stiffness[6].local * 2.0;
        assert_eq!(b.element_stiffness[6].local, expect);
        for e in (0..20).filter(|&e| e != 6) {
            assert_eq!(a.element_stiffness[e], b.element_stiffness[e]);
        }
    }

    #[test]
    fn element_stiffness_is_psd() {
        let k = element_stiffness_local(1.0, 0.05);
        let eig = nalgebra::SymmetricEigen::new(k);
        assert!(eig
            .eigenvalues
            .iter()
            .all(|&l| l > -1e-9 * eig.eigenvalues.max()));
    }

    #[test]
    fn curvature_energy_equals_quadratic_form() {
        let c = BeamConfig::reference();
        let asm = assemble(&c, &DamageParams::uniform(&c)).unwrap();
        let u: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.1).collect();
        for ke in &asm.element_stiffness {
            let a = ke.quad_form(&u);
            let b = ke.strain_energy(&u);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
            let v: Vec<f64> = u.iter().rev().cloned().collect();
            let a = ke.bilinear(&u, &v);
            let b = ke.strain_bilinear(&u, &v);
            assert!((a - b).abs() <= 1e-10 * ke.quad_form(&u).max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = BeamConfig::reference();
        let p = DamageParams::new(vec![70e9; 19]).unwrap();
        assert!(assemble(&c, &p).is_err());
    }

    #[test]
    fn mass_sums_to_beam_mass() {
        // Rigid translation of a free-free assembly picks up the total mass.
        let c = BeamConfig::reference();
        let m = element_mass_local(c.density * c.area(), c.element_length());
        let ones = nalgebra::Vector4::new(1.0, 0.0, 1.0, 0.0);
        let total: f64 = (0..20).map(|_| ones.dot(&(m * ones))).sum();
        assert!((total - c.density * c.area() * c.length).abs() < 1e-12);
    }
}
