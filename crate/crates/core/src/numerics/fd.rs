//! Central finite differences for gradients and Hessians of scalar functions
//! of a parameter vector.
//!
//! Default steps balance truncation against roundoff: `eps^(1/3) max(1, |x_i|)`
//! for first derivatives and `eps^(1/4) max(1, |x_i|)` for second derivatives,
//! with `eps` the unit roundoff.

use crate::error::{Error, Result};
use crate::numerics::sym::SymMatrix;

pub fn default_gradient_step(xi: f64) -> f64 {
    f64::EPSILON.powf(1.0 / 3.0) * xi.abs().max(1.0)
}

pub fn default_hessian_step(xi: f64) -> f64 {
    f64::EPSILON.powf(0.25) * xi.abs().max(1.0)
}

fn check(v: f64, coord: usize, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!(
            "{what} evaluated to {v} at a stencil point of coordinate {coord}"
        )))
    }
}

/// Central-difference gradient. `step = None` uses the per-coordinate default;
/// `Some(h)` uses the absolute step `h` in every coordinate.
pub fn gradient<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    step: Option<f64>,
) -> Result<Vec<f64>> {
    let mut work = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = step.unwrap_or_else(|| default_gradient_step(x[i]));
        // Snap the step to a representable difference.
        let hp = (x[i] + h) - x[i];
        work[i] = x[i] + hp;
        let fp = check(f(&work), i, "gradient stencil")?;
        work[i] = x[i] - hp;
        let fm = check(f(&work), i, "gradient stencil")?;
        work[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * hp);
    }
    Ok(grad)
}

/// Central-difference Hessian with the 9-point symmetric stencil per
/// coordinate pair (3-point second differences on the diagonal, 4-corner
/// cross differences off the diagonal).
pub fn hessian<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x: &[f64],
    step: Option<f64>,
) -> Result<SymMatrix> {
    let d = x.len();
    let steps: Vec<f64> = (0..d)
        .map(|i| {
            let h = step.unwrap_or_else(|| default_hessian_step(x[i]));
            (x[i] + h) - x[i]
        })
        .collect();
    let mut work = x.to_vec();
    let f0 = check(f(&work), 0, "hessian center")?;
    let mut out = SymMatrix::zeros(d);
    for i in 0..d {
        work[i] = x[i] + steps[i];
        let fp = check(f(&work), i, "hessian stencil")?;
        work[i] = x[i] - steps[i];
        let fm = check(f(&work), i, "hessian stencil")?;
        work[i] = x[i];
        out.set(i, i, (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]));
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64, coord: usize| -> Result<f64> {
                work[i] = x[i] + si * steps[i];
                work[j] = x[j] + sj * steps[j];
                let v = check(f(&work), coord, "hessian stencil");
                work[i] = x[i];
                work[j] = x[j];
                v
            };
            let fpp = corner(1.0, 1.0, j)?;
            let fpm = corner(1.0, -1.0, j)?;
            let fmp = corner(-1.0, 1.0, j)?;
            let fmm = corner(-1.0, -1.0, j)?;
            out.set(i, j, (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j]));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic_gradient_is_exact_under_central_differences() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let g = gradient(f, &[1.0, 1.0], Some(1e-5)).unwrap();
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 3.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let g = gradient(|_| 4.2, &[0.3, -0.7, 5.0], None).unwrap();
        for v in g {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn hessian_of_quadratic_form() {
        // f = x0^2 + 4 x0 x1 + 3 x1^2 -> H = [[2, 4], [4, 6]]
        let f = |x: &[f64]| x[0] * x[0] + 4.0 * x[0] * x[1] + 3.0 * x[1] * x[1];
        let h = hessian(f, &[0.4, -1.3], None).unwrap();
        assert_abs_diff_eq!(h.get(0, 0), 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(h.get(0, 1), 4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(h.get(1, 1), 6.0, epsilon = 1e-6);
    }

    #[test]
    fn non_finite_stencil_names_the_coordinate() {
        let f = |x: &[f64]| if x[1] > 1.0 { f64::NAN } else { x[0] };
        let err = gradient(f, &[0.0, 1.0], Some(0.5)).unwrap_err();
        match err {
            Error::NonFinite(msg) => assert!(msg.contains("coordinate 1"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
