//! Adaptive one-dimensional quadrature built on a fixed-order Gauss-Legendre
//! panel rule with interval bisection.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Tolerances and the subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol.is_finite() && self.abs_tol > 0.0) {
            return Err(Error::domain("quadrature abs_tol must be finite and positive"));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::domain("quadrature rel_tol must be finite and positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::domain("quadrature max_subdivisions must be positive"));
        }
        Ok(())
    }
}

const PANEL_ORDER: usize = 15;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence. Exact for polynomials of degree <= 2n - 1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(z) and its derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> Result<f64> {
    let (nodes, weights) = panel_rule();
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        let u = c + h * x;
        let v = f(u);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "integrand evaluated to {v} at {u}"
            )));
        }
        acc += w * v;
    }
    Ok(acc * h)
}

/// Signed integral of `f` over `[a, b]`.
///
/// The interval is bisected until the panel-vs-halves discrepancy meets the
/// locally apportioned tolerance `max(abs_tol, rel_tol * |estimate|)`.
/// Antisymmetric in `(a, b)` by construction: the integration always runs
/// over the oriented interval and the sign is applied afterwards.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("integration bounds [{a}, {b}] must be finite")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let whole = panel(&mut f, lo, hi)?;
    let tol = spec.abs_tol.max(spec.rel_tol * whole.abs());
    let mut budget = spec.max_subdivisions;
    let value = refine(&mut f, lo, hi, whole, tol, &mut budget, spec.max_subdivisions)?;
    Ok(sign * value)
}

fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    lo: f64,
    hi: f64,
    whole: f64,
    tol: f64,
    budget: &mut usize,
    max_subdivisions: usize,
) -> Result<f64> {
    let mid = 0.5 * (lo + hi);
    let left = panel(f, lo, mid)?;
    let right = panel(f, mid, hi)?;
    let better = left + right;
    let err = (better - whole).abs();
    // Stop on the local tolerance or once the discrepancy is at rounding level.
    if err <= tol || err <= 16.0 * f64::EPSILON * better.abs() || mid <= lo || mid >= hi {
        return Ok(better);
    }
    if *budget == 0 {
        return Err(Error::QuadratureNonConvergence {
            estimate: better,
            error_bound: err,
            subdivisions: max_subdivisions,
        });
    }
    *budget -= 1;
    let lv = refine(f, lo, mid, left, 0.5 * tol, budget, max_subdivisions)?;
    let rv = refine(f, mid, hi, right, 0.5 * tol, budget, max_subdivisions)?;
    Ok(lv + rv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn constant_integrand() {
        let v = integrate(|_| 1.0, 0.0, 1.0, &spec()).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn polynomial_antiderivative() {
        let v = integrate(|u| u * u, 0.0, 3.0, &spec()).unwrap();
        assert_abs_diff_eq!(v, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn square_root_diffusion_transform_integrand() {
        // 1/(sigma sqrt(u)) has antiderivative 2 sqrt(u)/sigma.
        let sigma = 0.1817;
        let v = integrate(|u| 1.0 / (sigma * u.sqrt()), 0.09, 0.16, &spec()).unwrap();
        let exact = 2.0 * (0.16_f64.sqrt() - 0.09_f64.sqrt()) / sigma;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let v = integrate(|u| (10.0 * u).sin(), 0.0, 2.0, &spec()).unwrap();
        let exact = (1.0 - (20.0_f64).cos()) / 10.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_domain_error() {
        let err = integrate(|u| 1.0 / u, -1.0, 1.0, &spec()).unwrap_err();
        match err {
            Error::NonFinite(_) | Error::QuadratureNonConvergence { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn exhaustion_reports_best_estimate() {
        let tight = QuadratureSpec {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_subdivisions: 2,
        };
        // |x|^0.1 has an interior kink; two subdivisions cannot resolve it to 1e-15.
        let err = integrate(|u: f64| u.abs().powf(0.1), -1.0, 1.0, &tight).unwrap_err();
        match err {
            Error::QuadratureNonConvergence {
                estimate,
                error_bound,
                ..
            } => {
                assert!(estimate.is_finite());
                assert!(error_bound > 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gauss_legendre_rule_is_exact_for_high_degree_polynomials() {
        let (nodes, weights) = gauss_legendre(15);
        // degree 2*15 - 1 = 29: integrate x^28 over [-1,1] = 2/29
        let v: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * x.powi(28))
            .sum();
        assert_abs_diff_eq!(v, 2.0 / 29.0, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn antisymmetric_in_bounds(a in -3.0f64..3.0, b in -3.0f64..3.0,
                                   c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
            let f = |u: f64| c0 + c1 * u + c2 * u * u;
            let fwd = integrate(f, a, b, &spec()).unwrap();
            let bwd = integrate(f, b, a, &spec()).unwrap();
            // Exactly the same subdivision sequence is used in both directions.
            prop_assert!(fwd == -bwd);
        }
    }
}
