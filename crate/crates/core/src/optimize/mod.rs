//! Bound-constrained quasi-Newton minimization.
//!
//! Two drivers share one configuration and trace format: a projected
//! L-BFGS with a strong-Wolfe line search ([`Method::Lbfgs`]) and a dogleg
//! trust region on the BFGS model built from the same curvature pairs
//! ([`Method::TrustRegion`]). Bounds are enforced by projection; the
//! objective only ever sees feasible points.

mod lbfgs;
mod line_search;
mod trust_region;

use serde::{Deserialize, Serialize};

use crate::beam::{BeamConfig, DamageParams};
use crate::error::{Error, Result};
use crate::modal_data::MeasuredModes;
use crate::objective::{Objective, ObjectiveWeights};

pub use lbfgs::{two_loop, CurvaturePairs};
pub use line_search::{strong_wolfe, LineSearchResult, WOLFE_C1, WOLFE_C2};

/// Default box for the dimensionless moduli `e = θ / E_h`.
pub const DEFAULT_BOUNDS: (f64, f64) = (0.05, 1.5);

/// Consecutive iterations with `|ΔJ|` below this count towards a stall.
pub const STALL_DELTA: f64 = 1e-14;
pub(crate) const STALL_ITERATIONS: usize = 3;
pub(crate) const LINE_SEARCH_FAILURES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lbfgs,
    TrustRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrustRegionConfig {
    pub initial_radius: f64,
    pub max_radius: f64,
    /// Steps with actual/predicted reduction above this are accepted.
    pub accept_ratio: f64,
    pub shrink_below: f64,
    pub expand_above: f64,
    pub shrink_factor: f64,
    pub expand_factor: f64,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        TrustRegionConfig {
            initial_radius: 0.1,
            max_radius: 1.0,
            accept_ratio: 1e-4,
            shrink_below: 0.25,
            expand_above: 0.75,
            shrink_factor: 0.5,
            expand_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Curvature pairs kept by L-BFGS and by the trust-region model.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient's max-norm drops below this.
    pub grad_tolerance: f64,
    /// Stop when an accepted step's max-norm drops below this.
    pub step_tolerance: f64,
    /// Largest max-norm of the very first L-BFGS trial step.
    pub initial_step: f64,
    /// Per-variable `(lo, hi)`; empty means [`DEFAULT_BOUNDS`] everywhere
    /// and a single pair applies to every variable.
    pub bounds: Vec<(f64, f64)>,
    pub trust_region: TrustRegionConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: Method::Lbfgs,
            memory: 10,
            max_iterations: 100,
            grad_tolerance: 1e-8,
            step_tolerance: 1e-12,
            initial_step: 0.1,
            bounds: Vec::new(),
            trust_region: TrustRegionConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn trust_region() -> Self {
        OptimizerConfig {
            method: Method::TrustRegion,
            ..Self::default()
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    /// Bounds for `n` variables.
    pub fn resolved_bounds(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        let bounds = if self.bounds.is_empty() {
            vec![DEFAULT_BOUNDS; n]
        } else if self.bounds.len() == n {
            self.bounds.clone()
        } else if self.bounds.len() == 1 {
            vec![self.bounds[0]; n]
        } else {
            return Err(Error::invalid(format!(
                "{} bounds given for {n} variables",
                self.bounds.len()
            )));
        };
        if let Some((lo, hi)) = bounds
            .iter()
            .find(|(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite()))
        {
            return Err(Error::invalid(format!("invalid bound pair [{lo}, {hi}]")));
        }
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::invalid("memory must be at least 1"));
        }
        for (name, v) in [
            ("grad_tolerance", self.grad_tolerance),
            ("step_tolerance", self.step_tolerance),
            ("initial_step", self.initial_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let tr = &self.trust_region;
        if !(tr.initial_radius > 0.0 && tr.initial_radius <= tr.max_radius) {
            return Err(Error::invalid(
                "trust region needs 0 < initial_radius <= max_radius",
            ));
        }
        if !(0.0 <= tr.accept_ratio
            && tr.accept_ratio < tr.shrink_below
            && tr.shrink_below < tr.expand_above
            && tr.expand_above < 1.0)
        {
            return Err(Error::invalid(
                "trust region needs 0 <= accept < shrink < expand < 1",
            ));
        }
        if !(tr.shrink_factor > 0.0 && tr.shrink_factor < 1.0 && tr.expand_factor > 1.0) {
            return Err(Error::invalid("trust region scale factors must bracket 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradTol,
    StepTol,
    MaxIter,
    Stalled,
    Error,
}

impl Termination {
    /// Whether the run ended at a point the optimizer considers stationary.
    pub fn converged(self) -> bool {
        matches!(self, Termination::GradTol | Termination::StepTol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub value: f64,
    /// Max-norm of the projected gradient.
    pub grad_norm: f64,
    /// Max-norm of the step that led here; 0 for the starting point.
    pub step_norm: f64,
    /// Objective evaluations so far.
    pub evaluations: usize,
    pub stage: usize,
}

/// Marks the first record of a new stage in a multi-stage run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEvent {
    pub stage: usize,
    /// Index into [`RunTrace::records`].
    pub record: usize,
    pub value_before: f64,
    pub value_after: f64,
    pub n_variables: usize,
}

impl StageEvent {
    pub fn jump(&self) -> f64 {
        self.value_after - self.value_before
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<IterationRecord>,
    pub stages: Vec<StageEvent>,
    pub termination: Termination,
    pub message: Option<String>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn evaluations(&self) -> usize {
        self.records.last().map_or(0, |r| r.evaluations)
    }

    pub fn final_value(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.value)
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }
}

/// `max_i |P(x - g) - x|`: zero exactly at first-order points of the box problem.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> f64 {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((xi, gi), (lo, hi))| ((xi - gi).clamp(*lo, *hi) - xi).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (xi, (lo, hi)) in x.iter_mut().zip(bounds) {
        *xi = xi.clamp(*lo, *hi);
    }
}

/// Variables held at a bound by a gradient pushing outwards.
pub(crate) fn active_set(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<bool> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((xi, gi), (lo, hi))| (*xi <= *lo && *gi > 0.0) || (*xi >= *hi && *gi < 0.0))
        .collect()
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Shared bookkeeping for both drivers.
pub(crate) struct Recorder<'a, F> {
    f: &'a F,
    pub bounds: Vec<(f64, f64)>,
    pub evaluations: usize,
    pub records: Vec<IterationRecord>,
    small_changes: usize,
}

impl<'a, F> Recorder<'a, F>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    pub fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (v, g) = (self.f)(x)?;
        if !v.is_finite() || g.iter().any(|gi| !gi.is_finite()) || g.len() != x.len() {
            return Err(Error::numeric(format!(
                "objective not finite at evaluation {}",
                self.evaluations
            )));
        }
        Ok((v, g))
    }

    pub fn record(&mut self, x: &[f64], value: f64, g: &[f64], step_norm: f64) {
        let iteration = self.records.len();
        if let Some(prev) = self.records.last() {
            if (prev.value - value).abs() < STALL_DELTA {
                self.small_changes += 1;
            } else {
                self.small_changes = 0;
            }
        }
        self.records.push(IterationRecord {
            iteration,
            x: x.to_vec(),
            value,
            grad_norm: projected_gradient_norm(x, g, &self.bounds),
            step_norm,
            evaluations: self.evaluations,
            stage: 0,
        });
    }

    pub fn stalled(&self) -> bool {
        self.small_changes >= STALL_ITERATIONS
    }

    pub fn finish(self, termination: Termination, message: Option<String>) -> (Vec<f64>, RunTrace) {
        let x = self.records.last().map(|r| r.x.clone()).unwrap_or_default();
        (
            x,
            RunTrace {
                records: self.records,
                stages: Vec::new(),
                termination,
                message,
            },
        )
    }
}

/// Minimizes `f` over the box from `x0`.
///
/// Returns the last accepted iterate, which is also the best one since both
/// drivers are monotone. Failures of `f` after the start end the run with
/// [`Termination::Error`] and the trace so far; failures at `x0` and invalid
/// inputs are returned as errors.
pub fn minimize<F>(f: F, x0: &[f64], config: &OptimizerConfig) -> Result<(Vec<f64>, RunTrace)>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::invalid("nothing to optimize"));
    }
    let bounds = config.resolved_bounds(x0.len())?;
    if let Some(i) = (0..x0.len()).find(|&i| !(x0[i] >= bounds[i].0 && x0[i] <= bounds[i].1)) {
        return Err(Error::invalid(format!(
            "start value {} of variable {i} lies outside [{}, {}]",
            x0[i], bounds[i].0, bounds[i].1
        )));
    }
    let mut rec = Recorder {
        f: &f,
        bounds,
        evaluations: 0,
        records: Vec::new(),
        small_changes: 0,
    };
    let (v0, g0) = rec.eval(x0)?;
    rec.record(x0, v0, &g0, 0.0);
    let outcome = match config.method {
        Method::Lbfgs => lbfgs::run(&mut rec, x0.to_vec(), v0, g0, config),
        Method::TrustRegion => trust_region::run(&mut rec, x0.to_vec(), v0, g0, config),
    };
    Ok(match outcome {
        Ok(t) => rec.finish(t, None),
        Err(e) => {
            log::warn!("optimizer stopped on error: {e}");
            rec.finish(Termination::Error, Some(e.to_string()))
        }
    })
}

/// Checks the stopping rules shared by both drivers after an accepted step.
pub(crate) fn stop_reason<F>(
    rec: &Recorder<F>,
    step_norm: f64,
    config: &OptimizerConfig,
) -> Option<Termination>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let last = rec.records.last()?;
    if last.grad_norm < config.grad_tolerance {
        Some(Termination::GradTol)
    } else if step_norm < config.step_tolerance {
        Some(Termination::StepTol)
    } else if rec.stalled() {
        Some(Termination::Stalled)
    } else if last.iteration >= config.max_iterations {
        Some(Termination::MaxIter)
    } else {
        None
    }
}

/// Recovers a homogeneous healthy beam from its measured modes using the
/// frequency and eigen-relation terms only.
///
/// `start` is the initial uniform modulus in Pa.
pub fn healthy_calibration(
    config: &BeamConfig,
    measured_healthy: &MeasuredModes,
    weights: ObjectiveWeights,
    opt_config: &OptimizerConfig,
    start: f64,
) -> Result<(DamageParams, RunTrace)> {
    let weights = ObjectiveWeights {
        alpha_c: 0.0,
        ..weights
    };
    let objective = Objective::new(config, measured_healthy, weights)?;
    let x0 = vec![start / config.healthy_youngs_modulus; config.n_elements];
    let (x, trace) = minimize(
        |e| objective.evaluate(e).map(|ev| (ev.value, ev.gradient)),
        &x0,
        opt_config,
    )?;
    Ok((DamageParams::from_relative(config, &x)?, trace))
}
