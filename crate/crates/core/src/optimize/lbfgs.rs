//! Projected L-BFGS.
//!
//! Variables held at a bound by the gradient are fixed for the iteration;
//! the two-loop recursion runs on the rest, and the line search is capped
//! where the first free variable would leave the box.

use std::collections::VecDeque;

use log::debug;

use super::line_search::strong_wolfe;
use super::{
    active_set, max_norm, project, stop_reason, OptimizerConfig, Recorder, Termination,
    LINE_SEARCH_FAILURES,
};
use crate::error::Result;

/// The most recent `(s, y)` pairs, oldest first.
#[derive(Debug, Clone, Default)]
pub struct CurvaturePairs {
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
    capacity: usize,
}

impl CurvaturePairs {
    pub fn new(capacity: usize) -> Self {
        CurvaturePairs {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    /// Stores the pair when it carries positive curvature; returns whether it did.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        if !(sy > 1e-12 * norm(&s) * norm(&y)) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y));
        true
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &(Vec<f64>, Vec<f64>)> {
        self.pairs.iter()
    }
}

/// `-H g` by the two-loop recursion over the components where `free` is
/// true; fixed components of the result are zero. The initial inverse
/// Hessian is `(sᵀy / yᵀy) I` from the newest usable pair, or `I`.
pub fn two_loop(g: &[f64], pairs: &CurvaturePairs, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(free)
            .map(|(x, f)| if *f { *x } else { 0.0 })
            .collect()
    };
    let usable: Vec<(Vec<f64>, Vec<f64>, f64)> = pairs
        .iter()
        .filter_map(|(s, y)| {
            let (s, y) = (mask(s), mask(y));
            let sy = dot(&s, &y);
            (sy > 1e-12 * norm(&s) * norm(&y)).then(|| (s, y, 1.0 / sy))
        })
        .collect();
    let mut q = mask(g);
    let mut alphas = vec![0.0; usable.len()];
    for (i, (s, y, rho)) in usable.iter().enumerate().rev() {
        let a = rho * dot(s, &q);
        alphas[i] = a;
        axpy(-a, y, &mut q);
    }
    let gamma = usable.last().map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
    let mut r: Vec<f64> = q.iter().map(|v| gamma * v).collect();
    for (i, (s, y, rho)) in usable.iter().enumerate() {
        let b = rho * dot(y, &r);
        axpy(alphas[i] - b, s, &mut r);
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Largest `α` keeping `x + α d` inside the box.
fn step_cap(x: &[f64], d: &[f64], bounds: &[(f64, f64)]) -> f64 {
    let mut cap = f64::INFINITY;
    for i in 0..x.len() {
        let (lo, hi) = bounds[i];
        if d[i] > 0.0 {
            cap = cap.min((hi - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            cap = cap.min((lo - x[i]) / d[i]);
        }
    }
    cap.max(0.0)
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
    let bounds = rec.bounds.clone();
    let mut pairs = CurvaturePairs::new(config.memory);
    let mut failures = 0;
    loop {
        let fixed = active_set(&x, &grad, &bounds);
        let free: Vec<bool> = fixed.iter().map(|f| !f).collect();
        let mut d = two_loop(&grad, &pairs, &free);
        let mut slope = dot(&d, &grad);
        if !(slope < 0.0) {
            pairs.clear();
            d = two_loop(&grad, &pairs, &free);
            slope = dot(&d, &grad);
        }
        let cap = step_cap(&x, &d, &bounds);
        let dn = max_norm(&d);
        let alpha_init = if pairs.is_empty() {
            // No curvature information yet: bound the first trial step.
            (config.initial_step / dn).min(1.0)
        } else {
            1.0
        };
        let found = if cap > 0.0 && dn > 0.0 {
            strong_wolfe(
                |alpha| {
                    let mut xt: Vec<f64> =
                        x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
                    project(&mut xt, &bounds);
                    let (v, g) = rec.eval(&xt)?;
                    Ok((v, dot(&g, &d), xt, g))
                },
                value,
                slope,
                alpha_init,
                cap,
            )?
        } else {
            None
        };
        let Some(step) = found else {
            failures += 1;
            debug!("line search failed ({failures} in a row)");
            if failures >= LINE_SEARCH_FAILURES {
                return Ok(Termination::Stalled);
            }
            pairs.clear();
            continue;
        };
        failures = 0;
        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let step_norm = max_norm(&s);
        pairs.push(s, y);
        x = step.x;
        value = step.value;
        grad = step.grad;
        rec.record(&x, value, &grad, step_norm);
        if let Some(t) = stop_reason(rec, step_norm, config) {
            return Ok(t);
        }
    }
}
