//! Inverse-FEM objective and its analytic gradient.
//!
//! `J = α_f E_f + α_g E_g + α_c E_c + γ P` where
//!
//! * `E_f` sums squared relative frequency shifts,
//! * `E_g` measures how far each measured mode is from satisfying the
//!   model's eigen-relation, `1 - ψᵀKψ / (ω² ψᵀMψ)`,
//! * `E_c` compares measured and model curvatures point by point,
//! * `P` is a Tikhonov penalty on the parameters.
//!
//! The design variables are the dimensionless multipliers `e_k = θ_k / E_h`
//! and every gradient here is taken with respect to `e`.
//!
//! Eigenvector sensitivities enter `E_g` and `E_c` only through inner
//! products `vᵀ ∂φ_j/∂e_k`. Expanding `∂φ_j` over all modes turns each of
//! these into a single element bilinear form `(Φ b_j)ᵀ K_k φ_j / e_k` with
//! `b_jh = vᵀφ_h / (λ_j - λ_h)`, so the full gradient costs one pass over
//! the elements per mode.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::beam::{
    assemble, check_simple_spectrum, curvature_matrix, solve_modes, BeamConfig, DamageParams,
    ModalSolution,
};
use crate::error::{Error, Result};
use crate::modal_data::{alignment_sign, MeasuredModes};

/// Model modes whose MAC against the paired measurement drops below this
/// are reported as a likely mode crossing.
pub const MAC_WARNING: f64 = 0.8;

/// Which quantity the Tikhonov term penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyForm {
    /// `‖e - 1‖²`: changes from the healthy state.
    #[default]
    Deviation,
    /// `‖e‖²`.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub alpha_f: f64,
    pub alpha_g: f64,
    pub alpha_c: f64,
    pub gamma: f64,
    pub epsilon_curv: f64,
    #[serde(default)]
    pub penalty: PenaltyForm,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            alpha_f: 1.0,
            alpha_g: 1.0,
            alpha_c: 1.0,
            gamma: 1e-3,
            epsilon_curv: 1e-8,
            penalty: PenaltyForm::Deviation,
        }
    }
}

impl ObjectiveWeights {
    /// Frequency and eigen-relation terms only, no penalty.
    pub fn global_terms() -> Self {
        ObjectiveWeights {
            alpha_c: 0.0,
            gamma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let alphas = [self.alpha_f, self.alpha_g, self.alpha_c];
        if alphas
            .iter()
            .chain([&self.gamma])
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::invalid(
                "objective weights must be finite and non-negative",
            ));
        }
        if alphas.iter().all(|w| *w == 0.0) {
            return Err(Error::invalid(
                "at least one of alpha_f, alpha_g, alpha_c must be positive",
            ));
        }
        if !(self.epsilon_curv > 0.0 && self.epsilon_curv.is_finite()) {
            return Err(Error::invalid("epsilon_curv must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TermValues {
    pub frequency: f64,
    pub residual: f64,
    pub curvature: f64,
    pub penalty: f64,
}

/// Per-mode pairing information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDiagnostic {
    /// `(ω_exp - ω_mod) / ω_exp`.
    pub frequency_residual: f64,
    /// `ψᵀKψ / (ω_exp² ψᵀMψ)`; 1 when the measured mode fits the model.
    pub rayleigh_ratio: f64,
    pub mac: f64,
    /// Sign applied to the model mode to align it with the measurement.
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEvaluation {
    pub value: f64,
    pub terms: TermValues,
    /// `∂J/∂e_k`.
    pub gradient: Vec<f64>,
    pub modes: Vec<ModeDiagnostic>,
}

impl ObjectiveEvaluation {
    /// Gradient with respect to the moduli in Pa.
    pub fn gradient_per_pascal(&self, healthy: f64) -> Vec<f64> {
        self.gradient.iter().map(|g| g / healthy).collect()
    }
}

/// `E_f` and the per-mode relative frequency residuals.
pub fn eval_ef(measured: &MeasuredModes, model: &ModalSolution) -> Result<(f64, Vec<f64>)> {
    let m = measured.n_modes();
    if model.n_modes() < m {
        return Err(Error::invalid(format!(
            "model retains {} modes, measurement has {m}",
            model.n_modes()
        )));
    }
    let mut residuals = Vec::with_capacity(m);
    for j in 0..m {
        let w = measured.frequencies[j];
        if w == 0.0 {
            return Err(Error::invalid(format!(
                "measured frequency of mode {j} is zero"
            )));
        }
        residuals.push((w - model.frequencies[j]) / w);
    }
    Ok((residuals.iter().map(|r| r * r).sum(), residuals))
}

/// `E_g` for measured shapes already expanded to the model's free DOFs
/// (one column per mode).
pub fn eval_eg(
    frequencies: &DVector<f64>,
    expanded: &DMatrix<f64>,
    stiffness: &DMatrix<f64>,
    mass: &DMatrix<f64>,
) -> Result<f64> {
    let mut total = 0.0;
    for (j, psi) in expanded.column_iter().enumerate() {
        let q = rayleigh_ratio(
            psi.dot(&(stiffness * psi)),
            psi.dot(&(mass * psi)),
            frequencies[j],
            j,
        )?;
        total += (1.0 - q) * (1.0 - q);
    }
    Ok(total)
}

fn rayleigh_ratio(k_form: f64, m_form: f64, omega: f64, mode: usize) -> Result<f64> {
    let denom = omega * omega * m_form;
    if !(denom.abs() > 0.0 && denom.is_finite()) {
        return Err(Error::numeric(format!(
            "zero modal mass in the eigen-relation term of mode {mode}"
        )));
    }
    Ok(k_form / denom)
}

/// `E_c` for model curvatures laid out like `measured.curvatures` (`m × N`).
pub fn eval_ec(measured: &MeasuredModes, model_curvatures: &DMatrix<f64>, epsilon: f64) -> f64 {
    measured
        .curvatures
        .iter()
        .zip(model_curvatures.iter())
        .map(|(e, m)| {
            let r = (e - m) / e.abs().max(epsilon);
            r * r
        })
        .sum()
}

/// The objective bound to one beam and one measurement.
#[derive(Debug, Clone)]
pub struct Objective {
    config: BeamConfig,
    measured: MeasuredModes,
    weights: ObjectiveWeights,
    curvature: DMatrix<f64>,
}

impl Objective {
    pub fn new(
        config: &BeamConfig,
        measured: &MeasuredModes,
        weights: ObjectiveWeights,
    ) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        if measured.n_points() != config.n_nodes() {
            return Err(Error::invalid(format!(
                "measurement has {} points but the beam has {} nodes",
                measured.n_points(),
                config.n_nodes()
            )));
        }
        if measured.n_modes() == 0 || measured.n_modes() > config.n_free_dofs() {
            return Err(Error::invalid(format!(
                "cannot fit {} modes with {} free DOFs",
                measured.n_modes(),
                config.n_free_dofs()
            )));
        }
        let curvature = curvature_matrix(measured.n_points(), measured.spacing())?;
        Ok(Objective {
            config: config.clone(),
            measured: measured.clone(),
            weights,
            curvature,
        })
    }

    pub fn config(&self) -> &BeamConfig {
        &self.config
    }

    pub fn measured(&self) -> &MeasuredModes {
        &self.measured
    }

    pub fn weights(&self) -> &ObjectiveWeights {
        &self.weights
    }

    pub fn n_params(&self) -> usize {
        self.config.n_elements
    }

    pub fn healthy_modulus(&self) -> f64 {
        self.config.healthy_youngs_modulus
    }

    /// Evaluates at moduli `θ` given in Pa. The gradient is still `∂J/∂e`.
    pub fn evaluate_params(&self, theta: &DamageParams) -> Result<ObjectiveEvaluation> {
        self.evaluate(&theta.relative_to(self.healthy_modulus()))
    }

    /// Value, term breakdown and gradient at multipliers `e`.
    pub fn evaluate(&self, relative: &[f64]) -> Result<ObjectiveEvaluation> {
        let params = DamageParams::from_relative(&self.config, relative)?;
        let w = self.weights;
        let m = self.measured.n_modes();
        let need_vectors = w.alpha_g > 0.0 || w.alpha_c > 0.0;
        let n_free = self.config.n_free_dofs();
        let solved = if need_vectors { n_free } else { m };
        let model = solve_modes(assemble(&self.config, &params)?, solved)?;
        if need_vectors {
            check_simple_spectrum(&model, m, n_free)?;
        }
        let dofs = model.dof_map();
        let elements = model.element_stiffness();
        let n_el = elements.len();
        let mut grad = vec![0.0; n_el];
        // Per-mode linear functionals of ∂φ_j collected from E_g and E_c.
        let mut adjoint = DMatrix::<f64>::zeros(n_free, m);

        let (e_f, freq_res) = eval_ef(&self.measured, &model)?;
        let mut modes = Vec::with_capacity(m);
        let mut e_g = 0.0;
        let mut model_curv = DMatrix::zeros(m, self.measured.n_points());

        for j in 0..m {
            let phi = model.mode(j);
            let t = model.nodal_shape(j);
            let wj = self.measured.shape(j);
            let sign = alignment_sign(wj, &t);
            let wt: f64 = dot(wj, &t);
            let tt: f64 = dot(&t, &t);
            let ww: f64 = dot(wj, wj);
            let mac = if ww > 0.0 && tt > 0.0 {
                wt * wt / (ww * tt)
            } else {
                0.0
            };
            if mac < MAC_WARNING {
                warn!(
                    "mode {} pairs with MAC {mac:.3}; model modes may have crossed",
                    j + 1
                );
            }

            let omega_exp = self.measured.frequencies[j];
            let omega_mod = model.frequencies[j];
            if w.alpha_f > 0.0 {
                let coeff =
                    -w.alpha_f * (omega_exp - omega_mod) / (omega_exp * omega_exp * omega_mod);
                for (k, ke) in elements.iter().enumerate() {
                    grad[k] += coeff * ke.strain_energy(phi) / relative[k];
                }
            }

            let mut ratio = f64::NAN;
            if w.alpha_g > 0.0 {
                // ψ: measured translations, model rotations scaled by the
                // least-squares fit c of the model translations to the data.
                let c = if tt > 0.0 { wt / tt } else { 0.0 };
                let mut psi = vec![0.0; n_free];
                for node in 0..dofs.n_nodes() {
                    if let Some(i) = dofs.translation(node) {
                        psi[i] = wj[node];
                    }
                    if let Some(i) = dofs.rotation(node) {
                        psi[i] = c * phi[i];
                    }
                }
                let psi_v = DVector::from_column_slice(&psi);
                let k_form: f64 = elements.iter().map(|ke| ke.strain_energy(&psi)).sum();
                let m_psi = model.mass() * &psi_v;
                let m_form = psi_v.dot(&m_psi);
                let q = rayleigh_ratio(k_form, m_form, omega_exp, j)?;
                ratio = q;
                e_g += (1.0 - q) * (1.0 - q);
                let outer = -2.0 * w.alpha_g * (1.0 - q);
                let denom = omega_exp * omega_exp * m_form;
                for (k, ke) in elements.iter().enumerate() {
                    grad[k] += outer * ke.strain_energy(&psi) / (denom * relative[k]);
                }
                // ∂q/∂ψ restricted to the rotational DOFs, which are the
                // only ones that move with θ.
                let k_psi = model.stiffness() * &psi_v;
                let g = 2.0 * k_psi / denom - 2.0 * q * m_psi / m_form;
                let mut g_dot_rot = 0.0;
                for node in 0..dofs.n_nodes() {
                    if let Some(i) = dofs.rotation(node) {
                        g_dot_rot += g[i] * phi[i];
                        adjoint[(i, j)] += outer * c * g[i];
                    }
                }
                if tt > 0.0 {
                    // ∂c/∂t = (w - 2 c t) / (tᵀt)
                    let scale = outer * g_dot_rot / tt;
                    for node in 0..dofs.n_nodes() {
                        if let Some(i) = dofs.translation(node) {
                            adjoint[(i, j)] += scale * (wj[node] - 2.0 * c * t[node]);
                        }
                    }
                }
            }

            let t_vec = DVector::from_column_slice(&t);
            let kappa = (&self.curvature * t_vec) * sign;
            model_curv.set_row(j, &kappa.transpose());
            if w.alpha_c > 0.0 {
                let mut weighted = DVector::zeros(self.measured.n_points());
                for i in 0..self.measured.n_points() {
                    let e = self.measured.curvatures[(j, i)];
                    let den = e.abs().max(w.epsilon_curv);
                    weighted[i] = (e - kappa[i]) / (den * den);
                }
                let back = self.curvature.transpose() * weighted;
                for node in 0..dofs.n_nodes() {
                    if let Some(i) = dofs.translation(node) {
                        adjoint[(i, j)] += -2.0 * w.alpha_c * sign * back[node];
                    }
                }
            }

            modes.push(ModeDiagnostic {
                frequency_residual: freq_res[j],
                rayleigh_ratio: ratio,
                mac,
                sign,
            });
        }

        if need_vectors {
            let lambda = &model.eigenvalues;
            let basis = &model.mode_shapes;
            let projections = basis.transpose() * &adjoint;
            for j in 0..m {
                let b = DVector::from_fn(n_free, |h, _| {
                    if h == j {
                        0.0
                    } else {
                        projections[(h, j)] / (lambda[j] - lambda[h])
                    }
                });
                let u = basis * b;
                let phi = model.mode(j);
                for (k, ke) in elements.iter().enumerate() {
                    grad[k] += ke.strain_bilinear(u.as_slice(), phi) / relative[k];
                }
            }
        }

        let e_c = if w.alpha_c > 0.0 {
            eval_ec(&self.measured, &model_curv, w.epsilon_curv)
        } else {
            0.0
        };
        let mut penalty = 0.0;
        if w.gamma > 0.0 {
            for (k, e) in relative.iter().enumerate() {
                let d = match w.penalty {
                    PenaltyForm::Deviation => e - 1.0,
                    PenaltyForm::Absolute => *e,
                };
                penalty += d * d;
                grad[k] += 2.0 * w.gamma * d;
            }
        }
        let terms = TermValues {
            frequency: e_f,
            residual: e_g,
            curvature: e_c,
            penalty,
        };
        let value = w.alpha_f * e_f + w.alpha_g * e_g + w.alpha_c * e_c + w.gamma * penalty;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::numeric("objective or gradient is not finite"));
        }
        debug!("J = {value:.6e} (E_f {e_f:.3e}, E_g {e_g:.3e}, E_c {e_c:.3e}, P {penalty:.3e})");
        Ok(ObjectiveEvaluation {
            value,
            terms,
            gradient: grad,
            modes,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One-shot evaluation at moduli `θ` (Pa).
pub fn eval_objective(
    config: &BeamConfig,
    theta: &DamageParams,
    measured: &MeasuredModes,
    weights: ObjectiveWeights,
) -> Result<ObjectiveEvaluation> {
    Objective::new(config, measured, weights)?.evaluate_params(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal_data::{
        make_damaged_params, measure_solution, synthesize_measurement, DamageScenario,
    };
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Uniform};

    fn solve(theta: &DamageParams, m: usize) -> ModalSolution {
        let c = BeamConfig::reference();
        solve_modes(assemble(&c, theta).unwrap(), m).unwrap()
    }

    fn damaged_measurement() -> (BeamConfig, MeasuredModes, DamageParams) {
        let c = BeamConfig::reference();
        let s = DamageScenario::uniform_reduction("pair", &[6, 7], 0.25);
        let truth = make_damaged_params(&c, &s).unwrap();
        let meas = synthesize_measurement(&c, &truth, 5, 0.0, 0).unwrap();
        (c, meas, truth)
    }

    fn only(term: usize) -> ObjectiveWeights {
        let mut w = ObjectiveWeights {
            alpha_f: 0.0,
            alpha_g: 0.0,
            alpha_c: 0.0,
            gamma: 0.0,
            ..ObjectiveWeights::default()
        };
        match term {
            0 => w.alpha_f = 1.0,
            1 => w.alpha_g = 1.0,
            _ => w.alpha_c = 1.0,
        }
        w
    }

    #[test]
    fn ef_examples() {
        let c = BeamConfig::reference();
        let sol = solve(&DamageParams::uniform(&c), 5);
        let mut meas = measure_solution(&sol, 1).unwrap();
        assert_eq!(eval_ef(&meas, &sol).unwrap().0, 0.0);
        meas.frequencies[0] = sol.frequencies[0] / 0.9;
        let (v, r) = eval_ef(&meas, &sol).unwrap();
        assert!((v - 0.01).abs() < 1e-14);
        assert!((r[0] - 0.1).abs() < 1e-14);
    }

    #[test]
    fn eg_identities() {
        let c = BeamConfig::reference();
        let sol = solve(&DamageParams::uniform(&c), 5);
        let shapes = sol.mode_shapes.columns(0, 5).into_owned();
        let freqs = sol.frequencies.rows(0, 5).into_owned();
        let exact = eval_eg(&freqs, &shapes, sol.stiffness(), sol.mass()).unwrap();
        assert!(exact < 1e-20, "{exact}");
        let scaled = eval_eg(&freqs, &(&shapes * 2.0), sol.stiffness(), sol.mass()).unwrap();
        assert!(scaled < 1e-20);
        let delta = 0.03;
        let stiffer = sol.stiffness() * (1.0 + delta);
        let v = eval_eg(&freqs, &shapes, &stiffer, sol.mass()).unwrap();
        assert!((v - 5.0 * delta * delta).abs() < 1e-10, "{v}");
        let zero = DMatrix::zeros(40, 1);
        assert!(eval_eg(&freqs, &zero, sol.stiffness(), sol.mass()).is_err());
    }

    #[test]
    fn eg_through_objective_uniform_scaling() {
        let c = BeamConfig::reference();
        let meas = measure_solution(&solve(&DamageParams::uniform(&c), 5), 5).unwrap();
        let obj = Objective::new(&c, &meas, only(1)).unwrap();
        let delta = 0.05;
        let ev = obj.evaluate(&[1.0 + delta; 20]).unwrap();
        assert!((ev.terms.residual - 5.0 * delta * delta).abs() < 1e-9);
        // Doubling every measured shape leaves E_g alone.
        let mut doubled = meas.clone();
        doubled.mode_shapes *= 2.0;
        let obj2 = Objective::new(&c, &doubled, only(1)).unwrap();
        let ev2 = obj2.evaluate(&[1.0 + delta; 20]).unwrap();
        assert!((ev.value - ev2.value).abs() < 1e-12);
    }

    #[test]
    fn ec_sign_and_guard() {
        let c = BeamConfig::reference();
        let meas = measure_solution(&solve(&DamageParams::uniform(&c), 5), 5).unwrap();
        assert_eq!(eval_ec(&meas, &meas.curvatures, 1e-8), 0.0);
        let mut flipped = meas.curvatures.clone();
        flipped.row_mut(0).neg_mut();
        assert!(eval_ec(&meas, &flipped, 1e-8) > 1.0);
        let mut zeroed = meas.clone();
        zeroed.curvatures[(0, 3)] = 0.0;
        let mut model = zeroed.curvatures.clone();
        model[(0, 3)] = 1e-9;
        let v = eval_ec(&zeroed, &model, 1e-8);
        assert!((v - 0.01).abs() < 1e-12);
    }

    #[test]
    fn truth_is_a_stationary_zero() {
        let (c, meas, truth) = damaged_measurement();
        let w = ObjectiveWeights {
            gamma: 0.0,
            ..ObjectiveWeights::default()
        };
        let ev = eval_objective(&c, &truth, &meas, w).unwrap();
        assert!(ev.value < 1e-16, "{}", ev.value);
        let norm = ev.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-8, "{norm}");
        assert!(ev.modes.iter().all(|m| m.sign == 1.0 && m.mac > 0.999));
    }

    #[test]
    fn value_recombines_terms() {
        let (c, meas, _) = damaged_measurement();
        let obj = Objective::new(&c, &meas, ObjectiveWeights::default()).unwrap();
        let ev = obj.evaluate(&[0.9; 20]).unwrap();
        let t = ev.terms;
        let w = obj.weights();
        let sum = w.alpha_f * t.frequency
            + w.alpha_g * t.residual
            + w.alpha_c * t.curvature
            + w.gamma * t.penalty;
        assert!((ev.value - sum).abs() <= 1e-12 * ev.value.max(1.0));
        assert!((t.penalty - 20.0 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn dropping_curvature_removes_its_gradient() {
        let (c, meas, _) = damaged_measurement();
        let e: Vec<f64> = (0..20).map(|i| 0.85 + 0.01 * i as f64).collect();
        let global = Objective::new(&c, &meas, ObjectiveWeights::global_terms()).unwrap();
        let f = Objective::new(&c, &meas, only(0))
            .unwrap()
            .evaluate(&e)
            .unwrap();
        let g = Objective::new(&c, &meas, only(1))
            .unwrap()
            .evaluate(&e)
            .unwrap();
        let both = global.evaluate(&e).unwrap();
        assert_eq!(both.terms.curvature, 0.0);
        for k in 0..20 {
            let sum = f.gradient[k] + g.gradient[k];
            assert!((both.gradient[k] - sum).abs() <= 1e-12 * sum.abs().max(1e-12));
        }
    }

    fn fd_gradient(obj: &Objective, e: &[f64]) -> Vec<f64> {
        (0..e.len())
            .map(|k| {
                let h = 1e-4 * e[k];
                let mut p = e.to_vec();
                let mut q = e.to_vec();
                p[k] += h;
                q[k] -= h;
                (obj.evaluate(&p).unwrap().value - obj.evaluate(&q).unwrap().value) / (2.0 * h)
            })
            .collect()
    }

    fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / y.abs().max(1e-3 * scale))
            .fold(0.0, f64::max)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let (c, meas, _) = damaged_measurement();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dist = Uniform::new(0.7, 1.1).unwrap();
        for term in 0..3 {
            let obj = Objective::new(&c, &meas, only(term)).unwrap();
            for _ in 0..2 {
                let e: Vec<f64> = (0..20).map(|_| dist.sample(&mut rng)).collect();
                let an = obj.evaluate(&e).unwrap().gradient;
                let fd = fd_gradient(&obj, &e);
                let err = max_rel_error(&an, &fd);
                assert!(err < 1e-4, "term {term}: {err:e}\n{an:?}\n{fd:?}");
            }
        }
    }

    #[test]
    fn penalty_forms() {
        let (c, meas, _) = damaged_measurement();
        let mut w = only(0);
        w.gamma = 0.5;
        let dev = Objective::new(&c, &meas, w)
            .unwrap()
            .evaluate(&[1.0; 20])
            .unwrap();
        assert_eq!(dev.terms.penalty, 0.0);
        w.penalty = PenaltyForm::Absolute;
        let abs = Objective::new(&c, &meas, w)
            .unwrap()
            .evaluate(&[1.0; 20])
            .unwrap();
        assert_eq!(abs.terms.penalty, 20.0);
        for k in 0..20 {
            assert!((abs.gradient[k] - dev.gradient[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_weights_and_inputs() {
        let (c, meas, _) = damaged_measurement();
        let mut w = only(0);
        w.alpha_f = 0.0;
        assert!(Objective::new(&c, &meas, w).is_err());
        w.alpha_f = -1.0;
        assert!(Objective::new(&c, &meas, w).is_err());
        let obj = Objective::new(&c, &meas, only(0)).unwrap();
        assert!(obj.evaluate(&[1.0; 19]).is_err());
        assert!(obj.evaluate(&[-1.0; 20]).is_err());
    }
}
