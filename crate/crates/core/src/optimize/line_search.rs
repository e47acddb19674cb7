//! Strong-Wolfe line search with cubic interpolation.

use crate::error::Result;

pub const WOLFE_C1: f64 = 1e-4;
pub const WOLFE_C2: f64 = 0.9;
const MAX_TRIALS: usize = 30;

/// An accepted step along the search direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub value: f64,
    pub x: Vec<f64>,
    pub grad: Vec<f64>,
    /// False when only sufficient decrease could be established, either at
    /// the step cap or after the trial budget ran out.
    pub wolfe: bool,
}

struct Trial {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

impl Trial {
    fn accept(self, wolfe: bool) -> LineSearchResult {
        LineSearchResult {
            alpha: self.alpha,
            value: self.value,
            x: self.x,
            grad: self.grad,
            wolfe,
        }
    }
}

/// Searches `α ∈ (0, alpha_max]` for a point satisfying the strong Wolfe
/// conditions. `eval(α)` returns `(φ(α), φ'(α), x(α), ∇f(x(α)))`.
///
/// Returns `None` when no trial decreased the objective sufficiently.
pub fn strong_wolfe<E>(
    mut eval: E,
    f0: f64,
    slope0: f64,
    alpha_init: f64,
    alpha_max: f64,
) -> Result<Option<LineSearchResult>>
where
    E: FnMut(f64) -> Result<(f64, f64, Vec<f64>, Vec<f64>)>,
{
    if !(slope0 < 0.0) || !(alpha_max > 0.0) {
        return Ok(None);
    }
    let mut trial = |alpha: f64| -> Result<Trial> {
        let (value, slope, x, grad) = eval(alpha)?;
        Ok(Trial {
            alpha,
            value,
            slope,
            x,
            grad,
        })
    };
    let armijo = |t: &Trial| t.value <= f0 + WOLFE_C1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -WOLFE_C2 * slope0;

    let mut prev: Option<Trial> = None;
    let mut alpha = alpha_init.min(alpha_max);
    let mut budget = MAX_TRIALS;
    while budget > 0 {
        budget -= 1;
        let t = trial(alpha)?;
        let prev_value = prev.as_ref().map_or(f0, |p| p.value);
        if !armijo(&t) || (prev.is_some() && t.value >= prev_value) {
            return zoom(&mut trial, prev, t, f0, slope0, budget, &armijo, &curvature);
        }
        if curvature(&t) {
            return Ok(Some(t.accept(true)));
        }
        if t.slope >= 0.0 {
            let lo = t;
            return zoom_between(
                &mut trial, lo, prev, f0, slope0, budget, &armijo, &curvature,
            );
        }
        if alpha >= alpha_max {
            // Still descending at the cap: take the capped step.
            return Ok(Some(t.accept(false)));
        }
        alpha = (2.0 * alpha).min(alpha_max);
        prev = Some(t);
    }
    Ok(prev.map(|p| p.accept(false)))
}

/// `lo` is the best Armijo point so far (or the origin), `hi` bounds it.
#[allow(clippy::too_many_arguments)]
fn zoom<T>(
    trial: &mut T,
    lo: Option<Trial>,
    hi: Trial,
    f0: f64,
    slope0: f64,
    budget: usize,
    armijo: &dyn Fn(&Trial) -> bool,
    curvature: &dyn Fn(&Trial) -> bool,
) -> Result<Option<LineSearchResult>>
where
    T: FnMut(f64) -> Result<Trial>,
{
    search(trial, lo, Some(hi), f0, slope0, budget, armijo, curvature)
}

#[allow(clippy::too_many_arguments)]
fn zoom_between<T>(
    trial: &mut T,
    lo: Trial,
    hi: Option<Trial>,
    f0: f64,
    slope0: f64,
    budget: usize,
    armijo: &dyn Fn(&Trial) -> bool,
    curvature: &dyn Fn(&Trial) -> bool,
) -> Result<Option<LineSearchResult>>
where
    T: FnMut(f64) -> Result<Trial>,
{
    // The slope turned non-negative at `lo`, so the minimizer lies between
    // `lo` and the previous point (or the origin).
    let hi = hi.unwrap_or(Trial {
        alpha: 0.0,
        value: f0,
        slope: slope0,
        x: Vec::new(),
        grad: Vec::new(),
    });
    search(
        trial,
        Some(lo),
        Some(hi),
        f0,
        slope0,
        budget,
        armijo,
        curvature,
    )
}

#[allow(clippy::too_many_arguments)]
fn search<T>(
    trial: &mut T,
    lo: Option<Trial>,
    hi: Option<Trial>,
    f0: f64,
    slope0: f64,
    mut budget: usize,
    armijo: &dyn Fn(&Trial) -> bool,
    curvature: &dyn Fn(&Trial) -> bool,
) -> Result<Option<LineSearchResult>>
where
    T: FnMut(f64) -> Result<Trial>,
{
    // The origin stands in for a missing low end.
    let (mut a_lo, mut f_lo, mut s_lo) = lo
        .as_ref()
        .map_or((0.0, f0, slope0), |t| (t.alpha, t.value, t.slope));
    let mut best = lo;
    let hi = hi.expect("zoom needs an upper end");
    let (mut a_hi, mut f_hi, mut s_hi) = (hi.alpha, hi.value, hi.slope);
    while budget > 0 {
        budget -= 1;
        let width = (a_hi - a_lo).abs();
        if width <= 1e-14 * a_lo.abs().max(a_hi.abs()).max(1e-300) {
            break;
        }
        let a = cubic_min(a_lo, f_lo, s_lo, a_hi, f_hi, s_hi);
        let t = trial(a)?;
        if !armijo(&t) || t.value >= f_lo {
            a_hi = t.alpha;
            f_hi = t.value;
            s_hi = t.slope;
        } else {
            if curvature(&t) {
                return Ok(Some(t.accept(true)));
            }
            if t.slope * (a_hi - a_lo) >= 0.0 {
                a_hi = a_lo;
                f_hi = f_lo;
                s_hi = s_lo;
            }
            a_lo = t.alpha;
            f_lo = t.value;
            s_lo = t.slope;
            best = Some(t);
        }
    }
    Ok(best
        .filter(|t| t.alpha > 0.0 && t.value < f0)
        .map(|t| t.accept(false)))
}

/// Minimizer of the cubic through two points with slopes, kept at least
/// 10% of the interval away from either end.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let guard = 0.1 * (hi - lo);
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let candidate = if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2)
    } else {
        f64::NAN
    };
    if candidate.is_finite() && candidate >= lo + guard && candidate <= hi - guard {
        candidate
    } else if candidate.is_finite() && candidate > lo && candidate < hi {
        candidate.clamp(lo + guard, hi - guard)
    } else {
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(alpha: f64) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        // φ(α) = (α - 0.3)², φ'(0) = -0.6
        let v = (alpha - 0.3) * (alpha - 0.3);
        Ok((
            v,
            2.0 * (alpha - 0.3),
            vec![alpha],
            vec![2.0 * (alpha - 0.3)],
        ))
    }

    #[test]
    fn cubic_interpolation_is_exact_on_quadratics() {
        let a = cubic_min(0.0, 0.09, -0.6, 1.0, 0.49, 1.4);
        assert!((a - 0.3).abs() < 1e-12);
    }

    #[test]
    fn finds_the_minimum_of_a_parabola() {
        let r = strong_wolfe(quadratic, 0.09, -0.6, 1.0, 10.0)
            .unwrap()
            .unwrap();
        assert!(r.wolfe);
        assert!((r.alpha - 0.3).abs() < 1e-10);
    }

    #[test]
    fn expands_short_initial_steps() {
        let r = strong_wolfe(quadratic, 0.09, -0.6, 0.01, 10.0)
            .unwrap()
            .unwrap();
        assert!(r.wolfe);
        assert!(r.value <= 0.09 + WOLFE_C1 * r.alpha * -0.6);
        assert!(r.grad[0].abs() <= 0.9 * 0.6);
    }

    #[test]
    fn stops_at_the_cap() {
        let r = strong_wolfe(quadratic, 0.09, -0.6, 1.0, 0.01)
            .unwrap()
            .unwrap();
        assert!(!r.wolfe);
        assert_eq!(r.alpha, 0.01);
    }

    #[test]
    fn ascent_direction_fails() {
        assert!(strong_wolfe(quadratic, 0.09, 0.6, 1.0, 1.0)
            .unwrap()
            .is_none());
    }
}
