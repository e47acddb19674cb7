//! Localization pipelines built on the objective and the optimizer.
//!
//! * [`plain_localize`] updates every element's modulus at once.
//! * [`hierarchical_localize`] starts from a few clusters of elements that
//!   share one modulus, freezes clusters that barely moved and splits the
//!   rest until single elements remain.
//! * [`hybrid_localize`] fuses damage features first and then updates only
//!   the elements the evidence points at.

use log::info;
use serde::{Deserialize, Serialize};

use crate::beam::{assemble, solve_modes, BeamConfig, DamageParams};
use crate::error::{Error, Result};
use crate::evidence::{
    filter_candidates, fuse_measurements, top_candidates, FusedEvidence, FusionConfig, FusionReport,
};
use crate::modal_data::MeasuredModes;
use crate::objective::{Objective, ObjectiveWeights};
use crate::optimize::{
    minimize, projected_gradient_norm, IterationRecord, OptimizerConfig, RunTrace, StageEvent,
    Termination,
};

/// Maps a few shared variables onto the per-element multipliers.
/// Elements outside every group sit at the healthy value 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub n_elements: usize,
    pub groups: Vec<Vec<usize>>,
}

impl Reduction {
    pub fn new(n_elements: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n_elements];
        for &e in groups.iter().flatten() {
            if e >= n_elements || seen[e] {
                return Err(Error::invalid(format!(
                    "element {e} is out of range or grouped twice"
                )));
            }
            seen[e] = true;
        }
        if groups.iter().any(|g| g.is_empty()) {
            return Err(Error::invalid("empty parameter group"));
        }
        Ok(Reduction { n_elements, groups })
    }

    /// One variable per listed element.
    pub fn singletons(n_elements: usize, elements: &[usize]) -> Result<Self> {
        Self::new(n_elements, elements.iter().map(|&e| vec![e]).collect())
    }

    pub fn n_vars(&self) -> usize {
        self.groups.len()
    }

    pub fn expand(&self, v: &[f64]) -> Vec<f64> {
        let mut e = vec![1.0; self.n_elements];
        for (g, &value) in self.groups.iter().zip(v) {
            for &k in g {
                e[k] = value;
            }
        }
        e
    }

    /// Chain rule from per-element gradients to the group variables.
    pub fn reduce_gradient(&self, g: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|grp| grp.iter().map(|&k| g[k]).sum())
            .collect()
    }
}

/// Minimizes the objective over the variables of `reduction` from `v0`.
/// Trace points are reported as full per-element multipliers.
pub fn optimize_reduced(
    objective: &Objective,
    reduction: &Reduction,
    v0: &[f64],
    opt_config: &OptimizerConfig,
) -> Result<(Vec<f64>, RunTrace)> {
    let (v, mut trace) = minimize(
        |v| {
            let ev = objective.evaluate(&reduction.expand(v))?;
            Ok((ev.value, reduction.reduce_gradient(&ev.gradient)))
        },
        v0,
        opt_config,
    )?;
    for r in &mut trace.records {
        r.x = reduction.expand(&r.x);
    }
    Ok((reduction.expand(&v), trace))
}

/// Outcome of a localization run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub profile: DamageParams,
    pub trace: RunTrace,
    pub status: Status,
}

fn status_of(trace: &RunTrace) -> Status {
    if trace.termination.converged() {
        Status::Converged
    } else {
        Status::Failed
    }
}

/// Updates the listed elements (one variable each) from the healthy state,
/// keeping every other element healthy.
pub fn localize_elements(
    config: &BeamConfig,
    measured: &MeasuredModes,
    weights: ObjectiveWeights,
    opt_config: &OptimizerConfig,
    elements: &[usize],
) -> Result<Localization> {
    let objective = Objective::new(config, measured, weights)?;
    let reduction = Reduction::singletons(config.n_elements, elements)?;
    let (e, trace) = optimize_reduced(
        &objective,
        &reduction,
        &vec![1.0; reduction.n_vars()],
        opt_config,
    )?;
    if trace.termination == Termination::Error {
        return Err(Error::numeric(trace.message.clone().unwrap_or_default()));
    }
    Ok(Localization {
        profile: DamageParams::from_relative(config, &e)?,
        status: status_of(&trace),
        trace,
    })
}

/// All elements updated at once.
pub fn plain_localize(
    config: &BeamConfig,
    measured: &MeasuredModes,
    weights: ObjectiveWeights,
    opt_config: &OptimizerConfig,
) -> Result<Localization> {
    let all: Vec<usize> = (0..config.n_elements).collect();
    localize_elements(config, measured, weights, opt_config, &all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchicalConfig {
    pub initial_groups: usize,
    pub group_size: usize,
    pub stage_tol_fraction: f64,
    /// Max-norm bound on the full per-element projected gradient for the
    /// final check. Frozen elements never see the penalty pull that moves
    /// the active ones off their exact values, so with `γ > 0` the full
    /// gradient at a correct profile sits near `2γ|e - 1|`, not at zero.
    pub final_grad_tolerance: f64,
}

impl Default for HierarchicalConfig {
    fn default() -> Self {
        HierarchicalConfig {
            initial_groups: 5,
            group_size: 4,
            stage_tol_fraction: 0.9,
            final_grad_tolerance: 1e-2,
        }
    }
}

/// A contiguous run of elements sharing one multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub elements: Vec<usize>,
    pub active: bool,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub clusters: Vec<Cluster>,
    pub stage: usize,
}

impl ClusterState {
    pub fn initial(n_elements: usize, groups: usize, size: usize) -> Result<Self> {
        if groups == 0 || size == 0 || groups * size != n_elements {
            return Err(Error::invalid(format!(
                "{groups} groups of {size} elements do not cover {n_elements} elements"
            )));
        }
        let clusters = (0..groups)
            .map(|g| Cluster {
                elements: (g * size..(g + 1) * size).collect(),
                active: true,
                value: 1.0,
            })
            .collect();
        Ok(ClusterState { clusters, stage: 0 })
    }

    pub fn active(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.active)
    }

    pub fn reduction(&self, n_elements: usize) -> Result<Reduction> {
        Reduction::new(
            n_elements,
            self.active().map(|c| c.elements.clone()).collect(),
        )
    }

    /// Per-element multipliers; frozen clusters read exactly 1.
    pub fn relative(&self, n_elements: usize) -> Vec<f64> {
        let mut e = vec![1.0; n_elements];
        for c in self.active() {
            for &k in &c.elements {
                e[k] = c.value;
            }
        }
        e
    }

    /// Applies the freeze/split rule; returns whether anything changed.
    pub fn refine(&mut self, tol_fraction: f64) -> bool {
        let max_dev = self
            .active()
            .map(|c| (c.value - 1.0).abs())
            .fold(0.0, f64::max);
        let tol = tol_fraction * max_dev;
        let mut changed = false;
        let mut next = Vec::with_capacity(self.clusters.len() + 4);
        for c in self.clusters.drain(..) {
            if !c.active {
                next.push(c);
                continue;
            }
            if (c.value - 1.0).abs() <= tol {
                changed = true;
                next.push(Cluster {
                    value: 1.0,
                    active: false,
                    ..c
                });
            } else if c.elements.len() > 1 {
                changed = true;
                let half = c.elements.len().div_ceil(2);
                let (a, b) = c.elements.split_at(half);
                next.push(Cluster {
                    elements: a.to_vec(),
                    active: true,
                    value: c.value,
                });
                next.push(Cluster {
                    elements: b.to_vec(),
                    active: true,
                    value: c.value,
                });
            } else {
                next.push(c);
            }
        }
        self.clusters = next;
        self.stage += 1;
        changed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalOutcome {
    pub localization: Localization,
    pub clusters: ClusterState,
    /// Max-norm of the full per-element projected gradient at the end.
    pub final_gradient: f64,
}

/// Coarse-to-fine clustering: optimize cluster multipliers, freeze the
/// clusters whose deviation from healthy stays within
/// `stage_tol_fraction · max deviation`, split the others, and restart the
/// optimizer on the new clusters. Stops when a stage neither freezes nor
/// splits anything, then checks the full gradient.
pub fn hierarchical_localize(
    config: &BeamConfig,
    measured: &MeasuredModes,
    weights: ObjectiveWeights,
    opt_config: &OptimizerConfig,
    hierarchy: &HierarchicalConfig,
) -> Result<HierarchicalOutcome> {
    if !(hierarchy.stage_tol_fraction > 0.0 && hierarchy.stage_tol_fraction < 1.0) {
        return Err(Error::invalid("stage_tol_fraction must lie in (0, 1)"));
    }
    if !(hierarchy.final_grad_tolerance > 0.0) {
        return Err(Error::invalid("final_grad_tolerance must be positive"));
    }
    let n = config.n_elements;
    let objective = Objective::new(config, measured, weights)?;
    let mut state = ClusterState::initial(n, hierarchy.initial_groups, hierarchy.group_size)?;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut stages: Vec<StageEvent> = Vec::new();
    let mut termination;
    loop {
        let reduction = state.reduction(n)?;
        let v0: Vec<f64> = state.active().map(|c| c.value).collect();
        let (_, trace) = optimize_reduced(&objective, &reduction, &v0, opt_config)?;
        if trace.termination == Termination::Error {
            return Err(Error::numeric(trace.message.clone().unwrap_or_default()));
        }
        termination = trace.termination;
        append_stage(
            &mut records,
            &mut stages,
            trace,
            state.stage,
            reduction.n_vars(),
        );
        let last = records.last().expect("stage produced no records");
        for (c, k) in state.clusters.iter_mut().filter(|c| c.active).zip(0..) {
            c.value = last.x[reduction.groups[k][0]];
        }
        info!(
            "stage {}: {} clusters active, J = {:.3e}, {:?}",
            state.stage,
            reduction.n_vars(),
            last.value,
            termination
        );
        if !state.refine(hierarchy.stage_tol_fraction) || state.active().count() == 0 {
            break;
        }
    }
    let e = state.relative(n);
    let ev = objective.evaluate(&e)?;
    let bounds = opt_config.resolved_bounds(n)?;
    let final_gradient = projected_gradient_norm(&e, &ev.gradient, &bounds);
    let tolerance = hierarchy.final_grad_tolerance;
    let status = if final_gradient <= tolerance {
        Status::Converged
    } else {
        info!("final gradient check failed: {final_gradient:.3e} > {tolerance:.3e}");
        Status::Failed
    };
    let trace = RunTrace {
        records,
        stages,
        termination,
        message: None,
    };
    Ok(HierarchicalOutcome {
        localization: Localization {
            profile: DamageParams::from_relative(config, &e)?,
            trace,
            status,
        },
        clusters: state,
        final_gradient,
    })
}

/// Appends one stage's records, renumbering iterations and evaluations to
/// run on from the previous stage.
fn append_stage(
    records: &mut Vec<IterationRecord>,
    stages: &mut Vec<StageEvent>,
    trace: RunTrace,
    stage: usize,
    n_variables: usize,
) {
    let (iter0, eval0) = records
        .last()
        .map_or((0, 0), |r| (r.iteration + 1, r.evaluations));
    let first = records.len();
    if let (Some(prev), Some(start)) = (records.last(), trace.records.first()) {
        stages.push(StageEvent {
            stage,
            record: first,
            value_before: prev.value,
            value_after: start.value,
            n_variables,
        });
    }
    for mut r in trace.records {
        r.iteration += iter0;
        r.evaluations += eval0;
        r.stage = stage;
        records.push(r);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub tau_fraction: f64,
    pub fusion: FusionConfig,
    /// When the τ rule keeps only the argmax, take this many top elements instead.
    pub fallback_top_n: Option<usize>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            tau_fraction: 0.7,
            fusion: FusionConfig::default(),
            fallback_top_n: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridOutcome {
    pub localization: Localization,
    pub evidence: FusionReport,
    pub candidates: Vec<usize>,
}

/// The τ rule, widened to the top-N fallback when it keeps only the argmax.
pub fn select_candidates(fused: &FusedEvidence, hybrid: &HybridConfig) -> Result<Vec<usize>> {
    let candidates = filter_candidates(fused, hybrid.tau_fraction)?;
    match hybrid.fallback_top_n {
        Some(n) if candidates.len() == 1 && n > 1 => Ok(top_candidates(fused, n)),
        _ => Ok(candidates),
    }
}

/// Evidence fusion followed by updating only the candidate elements.
pub fn hybrid_localize(
    config: &BeamConfig,
    measured_healthy: &MeasuredModes,
    measured_damaged: &MeasuredModes,
    hybrid: &HybridConfig,
    weights: ObjectiveWeights,
    opt_config: &OptimizerConfig,
) -> Result<HybridOutcome> {
    measured_healthy.check_compatible(measured_damaged)?;
    let healthy = DamageParams::uniform(config);
    let model = solve_modes(assemble(config, &healthy)?, config.n_free_dofs())?;
    let evidence = fuse_measurements(measured_healthy, measured_damaged, &model, &hybrid.fusion)?;
    let candidates = select_candidates(&evidence.fused, hybrid)?;
    info!(
        "hybrid candidates: {:?}",
        candidates.iter().map(|c| c + 1).collect::<Vec<_>>()
    );
    let localization =
        localize_elements(config, measured_damaged, weights, opt_config, &candidates)?;
    Ok(HybridOutcome {
        localization,
        evidence,
        candidates,
    })
}
