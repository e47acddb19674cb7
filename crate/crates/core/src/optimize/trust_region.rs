//! Dogleg trust region on a BFGS model, intersected with the box.
//!
//! The model Hessian is rebuilt each iteration from the stored curvature
//! pairs. Variables held at a bound are fixed; the dogleg step is taken on
//! the free ones and the trial point is projected into the box, with the
//! predicted reduction evaluated on the projected step.

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::lbfgs::{dot, norm, CurvaturePairs};
use super::{active_set, max_norm, project, stop_reason, OptimizerConfig, Recorder, Termination};
use crate::error::Result;

/// Dense BFGS matrix from the pairs, starting at `(yᵀy / sᵀy) I`, or at
/// `fallback · I` with no pairs.
pub(crate) fn bfgs_matrix(pairs: &CurvaturePairs, n: usize, fallback: f64) -> DMatrix<f64> {
    let delta = pairs
        .iter()
        .last()
        .map_or(fallback, |(s, y)| dot(y, y) / dot(s, y));
    let mut b = DMatrix::identity(n, n) * delta;
    for (s, y) in pairs.iter() {
        let s = DVector::from_column_slice(s);
        let y = DVector::from_column_slice(y);
        let bs = &b * &s;
        let sbs = s.dot(&bs);
        let ys = y.dot(&s);
        if sbs > 0.0 && ys > 0.0 {
            b -= &bs * bs.transpose() / sbs;
            b += &y * y.transpose() / ys;
        }
    }
    b
}

/// Dogleg step for `min gᵀp + ½ pᵀBp` subject to `‖p‖ ≤ Δ`.
pub(crate) fn dogleg(g: &DVector<f64>, b: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    let gn = g.norm();
    if gn == 0.0 {
        return DVector::zeros(g.len());
    }
    let gbg = g.dot(&(b * g));
    if gbg <= 0.0 {
        return -g * (radius / gn);
    }
    let cauchy = -g * (gn * gn / gbg);
    let newton = b.clone().cholesky().map(|c| -c.solve(g));
    let Some(newton) = newton else {
        let cn = cauchy.norm();
        return if cn <= radius {
            cauchy
        } else {
            cauchy * (radius / cn)
        };
    };
    if newton.norm() <= radius {
        return newton;
    }
    let cn = cauchy.norm();
    if cn >= radius {
        return -g * (radius / gn);
    }
    // ‖p_U + τ (p_B - p_U)‖ = Δ
    let d = &newton - &cauchy;
    let a = d.dot(&d);
    let bq = 2.0 * cauchy.dot(&d);
    let c = cn * cn - radius * radius;
    let tau = (-bq + (bq * bq - 4.0 * a * c).sqrt()) / (2.0 * a);
    cauchy + d * tau
}

pub(crate) fn run<F>(
    rec: &mut Recorder<F>,
    mut x: Vec<f64>,
    mut value: f64,
    mut grad: Vec<f64>,
    config: &OptimizerConfig,
) -> Result<Termination>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if let Some(t) = stop_reason(rec, f64::INFINITY, config) {
        return Ok(t);
    }
    let tr = config.trust_region;
    let bounds = rec.bounds.clone();
    let n = x.len();
    let mut pairs = CurvaturePairs::new(config.memory);
    let mut radius = tr.initial_radius;
    loop {
        if radius < config.step_tolerance {
            return Ok(Termination::StepTol);
        }
        let fixed = active_set(&x, &grad, &bounds);
        let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
        let g_full = DVector::from_column_slice(&grad);
        let fallback = norm(&grad) / radius;
        let b_full = bfgs_matrix(&pairs, n, fallback);
        let g_free = DVector::from_fn(free.len(), |i, _| grad[free[i]]);
        let b_free = b_full.select_rows(&free).select_columns(&free);
        let p_free = dogleg(&g_free, &b_free, radius);
        let mut trial = x.clone();
        for (k, &i) in free.iter().enumerate() {
            trial[i] += p_free[k];
        }
        project(&mut trial, &bounds);
        let p = DVector::from_fn(n, |i, _| trial[i] - x[i]);
        let step_norm = max_norm(p.as_slice());
        let predicted = -(g_full.dot(&p) + 0.5 * p.dot(&(&b_full * &p)));
        if !(predicted > 0.0) || step_norm == 0.0 {
            radius *= tr.shrink_factor;
            continue;
        }
        let (v, g) = rec.eval(&trial)?;
        let ratio = (value - v) / predicted;
        let p_len = p.norm();
        if ratio < tr.shrink_below {
            radius = tr.shrink_factor * p_len.min(radius);
        } else if ratio > tr.expand_above && p_len >= 0.99 * radius {
            radius = (tr.expand_factor * radius).min(tr.max_radius);
        }
        if ratio <= tr.accept_ratio || v > value {
            debug!("trust region rejected step, ratio {ratio:.3e}, radius now {radius:.3e}");
            continue;
        }
        let s: Vec<f64> = p.iter().cloned().collect();
        let y: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        pairs.push(s, y);
        x = trial;
        value = v;
        grad = g;
        rec.record(&x, value, &grad, step_norm);
        if let Some(t) = stop_reason(rec, step_norm, config) {
            return Ok(t);
        }
    }
}
