use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Second-derivative finite-difference operator on `n_points` equally spaced
/// samples: centered `[1, -2, 1]` stencils inside, the one-sided second-order
/// stencils `[2, -5, 4, -1]` and `[-1, 4, -5, 2]` in the first and last rows.
pub fn curvature_matrix(n_points: usize, spacing: f64) -> Result<DMatrix<f64>> {
    if n_points < 4 {
        return Err(Error::invalid(format!(
            "curvature stencil needs at least 4 points, got {n_points}"
        )));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::invalid(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let n = n_points;
    let mut c = DMatrix::zeros(n, n);
    for (j, v) in [2.0, -5.0, 4.0, -1.0].into_iter().enumerate() {
        c[(0, j)] = v;
        c[(n - 1, n - 1 - j)] = v;
    }
    for i in 1..n - 1 {
        c[(i, i - 1)] = 1.0;
        c[(i, i)] = -2.0;
        c[(i, i + 1)] = 1.0;
    }
    Ok(c / (spacing * spacing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn rows_annihilate_constants() {
        let c = curvature_matrix(9, 0.5).unwrap() * 0.25;
        for row in c.row_iter() {
            assert_eq!(row.sum(), 0.0);
        }
        assert_eq!(c[(8, 5)], -1.0);
        assert_eq!(c[(8, 8)], 2.0);
    }

    #[test]
    fn exact_on_quadratics_and_lines() {
        let h = 0.05;
        let c = curvature_matrix(21, h).unwrap();
        let x = DVector::from_fn(21, |i, _| i as f64 * h);
        let quad = (&c * x.map(|v| v * v)).map(|v| v - 2.0);
        assert!(quad.amax() < 1e-9);
        let line = &c * x.map(|v| 3.0 * v - 1.0);
        assert!(line.amax() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        assert!(curvature_matrix(3, 1.0).is_err());
        assert!(curvature_matrix(4, 0.0).is_err());
    }
}
