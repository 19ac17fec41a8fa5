//! The Cox-Ingersoll-Ross square-root model
//! `dX = kappa (alpha - X) dt + sigma sqrt(X) dB`, `theta = (kappa, alpha, sigma)`.
//!
//! `c X_{t+delta} | X_t` is noncentral chi-squared with `nu = 4 kappa alpha / sigma^2`
//! degrees of freedom and noncentrality `c X_t e^{-kappa delta}`, where
//! `c = 4 kappa / (sigma^2 (1 - e^{-kappa delta}))`. The parameter set is
//! restricted to `2 kappa alpha > sigma^2` so the origin is unattainable and
//! the Bessel order `q = 2 kappa alpha / sigma^2 - 1` stays nonnegative.

use rand::RngCore;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{ClosedFormTransform, DiffusionModel, ParamPartition};
use crate::models::{path_moments, reversion_from_autocorr, widened_range};
use crate::numerics::special::log_bessel_i;
use crate::numerics::stats::sample_noncentral_chisq;
use crate::numerics::sym::SymMatrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct Cir;

impl Cir {
    pub fn scale_c(kappa: f64, sigma: f64, delta: f64) -> f64 {
        4.0 * kappa / (sigma * sigma * (-(-kappa * delta).exp_m1()))
    }

    pub fn bessel_order(theta: &[f64]) -> f64 {
        2.0 * theta[0] * theta[1] / (theta[2] * theta[2]) - 1.0
    }

    fn stationary_shape_scale(theta: &[f64]) -> (f64, f64) {
        let (kappa, alpha, sigma) = (theta[0], theta[1], theta[2]);
        (
            2.0 * kappa * alpha / (sigma * sigma),
            sigma * sigma / (2.0 * kappa),
        )
    }
}

/// Exact transition log-density via the noncentral chi-squared law, using the
/// log-scaled Bessel function so large noncentralities do not overflow.
pub fn exact_logdensity(x: f64, x0: f64, delta: f64, theta: &[f64]) -> Result<f64> {
    let (kappa, alpha, sigma) = (theta[0], theta[1], theta[2]);
    if !(kappa > 0.0 && alpha > 0.0 && sigma > 0.0) {
        return Err(Error::domain(format!(
            "cir transition law requires positive parameters, got ({kappa}, {alpha}, {sigma})"
        )));
    }
    let q = Cir::bessel_order(theta);
    if q < 0.0 {
        return Err(Error::domain(format!(
            "cir boundary condition violated: 2 kappa alpha = {} <= sigma^2 = {}",
            2.0 * kappa * alpha,
            sigma * sigma
        )));
    }
    if !(x > 0.0 && x0 > 0.0) {
        return Err(Error::domain(format!(
            "cir states must be positive, got x={x}, x0={x0}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("sampling interval delta={delta} must be > 0")));
    }
    let c = Cir::scale_c(kappa, sigma, delta);
    let u = 0.5 * c * x0 * (-kappa * delta).exp();
    let v = 0.5 * c * x;
    let log_bessel = log_bessel_i(q, 2.0 * (u * v).sqrt())?;
    Ok((0.5 * c).ln() - u - v + 0.5 * q * (v / u).ln() + log_bessel)
}

impl DiffusionModel for Cir {
    fn id(&self) -> &str {
        "cir"
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn param_names(&self) -> Vec<&'static str> {
        vec!["kappa", "alpha", "sigma"]
    }

    fn partition(&self) -> ParamPartition {
        ParamPartition {
            drift: vec![0, 1],
            diffusion: vec![2],
        }
    }

    fn param_bounds(&self) -> Vec<(f64, f64)> {
        vec![(1e-4, 50.0), (1e-9, 1e12), (1e-9, 1e6)]
    }

    fn validate(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != 3 {
            return Err(Error::domain(format!(
                "parameter dimension {} does not match model 'cir' (expects 3)",
                theta.len()
            )));
        }
        for (i, (&t, (lo, hi))) in theta.iter().zip(self.param_bounds()).enumerate() {
            if !t.is_finite() || t < lo || t > hi {
                return Err(Error::domain(format!(
                    "parameter {} = {t} outside [{lo}, {hi}]",
                    self.param_names()[i]
                )));
            }
        }
        if 2.0 * theta[0] * theta[1] <= theta[2] * theta[2] {
            return Err(Error::domain(format!(
                "cir requires 2 kappa alpha > sigma^2 (got 2*{}*{} <= {}^2)",
                theta[0], theta[1], theta[2]
            )));
        }
        Ok(())
    }

    fn state_domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn drift(&self, x: f64, theta: &[f64]) -> f64 {
        theta[0] * (theta[1] - x)
    }

    fn diffusion(&self, x: f64, theta: &[f64]) -> f64 {
        theta[2] * x.sqrt()
    }

    fn drift_dx(&self, _x: f64, theta: &[f64]) -> f64 {
        -theta[0]
    }

    fn diffusion_dx(&self, x: f64, theta: &[f64]) -> f64 {
        0.5 * theta[2] / x.sqrt()
    }

    fn diffusion_dxx(&self, x: f64, theta: &[f64]) -> f64 {
        -0.25 * theta[2] / (x * x.sqrt())
    }

    fn drift_dp(&self, x: f64, theta: &[f64], i: usize) -> f64 {
        match i {
            0 => theta[1] - x,
            1 => theta[0],
            _ => 0.0,
        }
    }

    fn drift_dp2(&self, _x: f64, _theta: &[f64], i: usize, j: usize) -> f64 {
        if (i, j) == (0, 1) || (i, j) == (1, 0) {
            1.0
        } else {
            0.0
        }
    }

    fn drift_dx_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn diffusion_dp(&self, x: f64, _theta: &[f64], i: usize) -> f64 {
        if i == 2 {
            x.sqrt()
        } else {
            0.0
        }
    }

    fn diffusion_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn diffusion_dx_dp(&self, x: f64, _theta: &[f64], i: usize) -> f64 {
        if i == 2 {
            0.5 / x.sqrt()
        } else {
            0.0
        }
    }

    fn diffusion_dx_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn diffusion_dxx_dp(&self, x: f64, _theta: &[f64], i: usize) -> f64 {
        if i == 2 {
            -0.25 / (x * x.sqrt())
        } else {
            0.0
        }
    }

    fn diffusion_dxx_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn exact_transition_logdensity(
        &self,
        x: f64,
        x0: f64,
        delta: f64,
        theta: &[f64],
    ) -> Option<Result<f64>> {
        Some(exact_logdensity(x, x0, delta, theta))
    }

    fn exact_step(
        &self,
        rng: &mut dyn RngCore,
        x0: f64,
        delta: f64,
        theta: &[f64],
    ) -> Option<Result<f64>> {
        let (kappa, alpha, sigma) = (theta[0], theta[1], theta[2]);
        if 2.0 * kappa * alpha <= sigma * sigma {
            return Some(Err(Error::domain(
                "cir exact sampler requires 2 kappa alpha > sigma^2".into(),
            )));
        }
        let c = Cir::scale_c(kappa, sigma, delta);
        let nu = 4.0 * kappa * alpha / (sigma * sigma);
        let lambda = c * x0 * (-kappa * delta).exp();
        Some(sample_noncentral_chisq(rng, nu, lambda).map(|v| v / c))
    }

    fn stationary_sample(&self, rng: &mut dyn RngCore, theta: &[f64]) -> Option<Result<f64>> {
        let (shape, scale) = Cir::stationary_shape_scale(theta);
        let gamma = match rand_distr::Gamma::new(shape, scale) {
            Ok(g) => g,
            Err(e) => return Some(Err(Error::domain(format!("stationary gamma: {e}")))),
        };
        Some(Ok(rand_distr::Distribution::sample(&gamma, rng)))
    }

    fn stationary_mean(&self, theta: &[f64]) -> Option<f64> {
        Some(theta[1])
    }

    fn stationary_logpdf(&self, x: f64, theta: &[f64]) -> Option<f64> {
        if x <= 0.0 {
            return Some(f64::NEG_INFINITY);
        }
        let (shape, scale) = Cir::stationary_shape_scale(theta);
        Some((shape - 1.0) * x.ln() - x / scale - ln_gamma(shape) - shape * scale.ln())
    }

    fn stationary_support(&self, theta: &[f64]) -> Option<(f64, f64)> {
        let (shape, scale) = Cir::stationary_shape_scale(theta);
        let dist = GammaDist::new(shape, 1.0 / scale).ok()?;
        Some((dist.inverse_cdf(1e-13), dist.inverse_cdf(1.0 - 1e-13)))
    }

    fn transform(&self, theta: &[f64]) -> Option<Box<dyn ClosedFormTransform>> {
        Some(Box::new(CirTransform {
            kappa: theta[0],
            sigma: theta[2],
            b: 2.0 * theta[0] * theta[1] / (theta[2] * theta[2]) - 0.5,
        }))
    }

    fn moment_init(&self, observations: &[f64], delta: f64) -> Option<Vec<f64>> {
        let (mean, var, rho) = path_moments(observations);
        let alpha = mean.max(1e-8);
        let kappa = reversion_from_autocorr(rho, delta);
        // Stationary variance alpha sigma^2 / (2 kappa); keep the boundary
        // condition strictly satisfied.
        let mut sigma = (var.max(1e-16) * 2.0 * kappa / alpha).sqrt();
        let cap = 0.95 * (2.0 * kappa * alpha).sqrt();
        if sigma >= cap {
            sigma = cap;
        }
        Some(vec![kappa, alpha, sigma.max(1e-6)])
    }

    fn optimization_bounds(&self, observations: &[f64], _delta: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = widened_range(observations, 5.0);
        let (_, var, _) = path_moments(observations);
        vec![
            (1e-4, 50.0),
            (lo.max(1e-8), hi),
            (1e-6, 10.0 * var.sqrt().max(1e-6)),
        ]
    }
}

/// Unit-diffusion transform of the square-root model, referenced at the
/// origin: `y = 2 sqrt(x) / sigma`, `mu_Y(y) = b/y - kappa y / 2` with
/// `b = 2 kappa alpha / sigma^2 - 1/2`.
struct CirTransform {
    kappa: f64,
    sigma: f64,
    b: f64,
}

impl ClosedFormTransform for CirTransform {
    fn to_unit(&self, x: f64) -> f64 {
        2.0 * x.sqrt() / self.sigma
    }

    fn from_unit(&self, y: f64) -> f64 {
        let s = 0.5 * self.sigma * y;
        s * s
    }

    fn unit_drift(&self, y: f64) -> f64 {
        self.b / y - 0.5 * self.kappa * y
    }

    fn unit_drift_dy(&self, y: f64) -> f64 {
        -self.b / (y * y) - 0.5 * self.kappa
    }

    fn lambda(&self, y: f64) -> f64 {
        let (b, k) = (self.b, self.kappa);
        -0.5 * ((b * b - b) / (y * y) + 0.25 * k * k * y * y - b * k - 0.5 * k)
    }

    fn lambda_antideriv(&self, y: f64) -> f64 {
        let (b, k) = (self.b, self.kappa);
        -0.5 * (-(b * b - b) / y + k * k * y * y * y / 12.0 - (b * k + 0.5 * k) * y)
    }

    fn lambda_d2(&self, y: f64) -> f64 {
        let (b, k) = (self.b, self.kappa);
        -3.0 * (b * b - b) / (y * y * y * y) - 0.25 * k * k
    }

    fn unit_drift_integral(&self, y0: f64, y1: f64) -> f64 {
        self.b * (y1 / y0).ln() - 0.25 * self.kappa * (y1 * y1 - y0 * y0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate, QuadratureSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const THETA: [f64; 3] = [0.892, 0.09, 0.1817];

    #[test]
    fn transition_density_normalizes() {
        let delta = 1.0 / 12.0;
        let x0 = 0.09;
        let spec = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        let total = integrate(
            |x| exact_logdensity(x, x0, delta, &THETA).unwrap().exp(),
            1e-9,
            1.0,
            &spec,
        )
        .unwrap();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn conditional_mean_matches_mean_reversion() {
        let delta = 1.0 / 12.0;
        let x0 = 0.07;
        let spec = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        let mean = integrate(
            |x| x * exact_logdensity(x, x0, delta, &THETA).unwrap().exp(),
            1e-9,
            1.0,
            &spec,
        )
        .unwrap();
        let e = (-THETA[0] * delta).exp();
        assert_abs_diff_eq!(mean, x0 * e + THETA[1] * (1.0 - e), epsilon = 1e-6);
    }

    #[test]
    fn long_horizon_matches_stationary_gamma_moments() {
        // As delta grows the transition law forgets x0 and converges to
        // Gamma(2 kappa alpha / sigma^2, sigma^2 / (2 kappa)).
        let delta = 60.0;
        let x0 = 0.02;
        let spec = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        let m1 = integrate(
            |x| x * exact_logdensity(x, x0, delta, &THETA).unwrap().exp(),
            1e-9,
            1.5,
            &spec,
        )
        .unwrap();
        let m2 = integrate(
            |x| x * x * exact_logdensity(x, x0, delta, &THETA).unwrap().exp(),
            1e-9,
            1.5,
            &spec,
        )
        .unwrap();
        let (kappa, alpha, sigma) = (THETA[0], THETA[1], THETA[2]);
        assert_relative_eq!(m1, alpha, epsilon = 1e-6);
        assert_relative_eq!(
            m2 - m1 * m1,
            alpha * sigma * sigma / (2.0 * kappa),
            epsilon = 1e-4
        );
    }

    #[test]
    fn boundary_condition_is_enforced() {
        // 2 kappa alpha <= sigma^2
        let bad = [0.1, 0.05, 0.5];
        assert!(exact_logdensity(0.1, 0.1, 0.25, &bad).is_err());
        assert!(Cir.validate(&bad).is_err());
        assert!(Cir.validate(&THETA).is_ok());
    }

    #[test]
    fn nonpositive_state_is_domain_error() {
        assert!(exact_logdensity(-0.01, 0.09, 0.25, &THETA).is_err());
        assert!(exact_logdensity(0.09, 0.0, 0.25, &THETA).is_err());
    }

    #[test]
    fn finite_difference_partials_agree_with_closed_forms() {
        struct Fd;
        impl DiffusionModel for Fd {
            fn id(&self) -> &str {
                "cir-fd"
            }
            fn param_dim(&self) -> usize {
                3
            }
            fn param_names(&self) -> Vec<&'static str> {
                Cir.param_names()
            }
            fn partition(&self) -> ParamPartition {
                Cir.partition()
            }
            fn param_bounds(&self) -> Vec<(f64, f64)> {
                Cir.param_bounds()
            }
            fn state_domain(&self) -> (f64, f64) {
                Cir.state_domain()
            }
            fn drift(&self, x: f64, theta: &[f64]) -> f64 {
                Cir.drift(x, theta)
            }
            fn diffusion(&self, x: f64, theta: &[f64]) -> f64 {
                Cir.diffusion(x, theta)
            }
        }
        let fd = Fd;
        let x = 0.085;
        assert_abs_diff_eq!(
            Cir.diffusion_dx(x, &THETA),
            fd.diffusion_dx(x, &THETA),
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(
            Cir.diffusion_dxx(x, &THETA),
            fd.diffusion_dxx(x, &THETA),
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            Cir.diffusion_dp(x, &THETA, 2),
            fd.diffusion_dp(x, &THETA, 2),
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            Cir.diffusion_dx_dp(x, &THETA, 2),
            fd.diffusion_dx_dp(x, &THETA, 2),
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            Cir.diffusion_dxx_dp(x, &THETA, 2),
            fd.diffusion_dxx_dp(x, &THETA, 2),
            epsilon = 1e-3
        );
    }

    #[test]
    fn transform_identities() {
        let t = Cir.transform(&THETA).unwrap();
        let y = t.to_unit(0.09);
        assert_relative_eq!(y, 2.0 * 0.09_f64.sqrt() / THETA[2], epsilon = 1e-14);
        assert_relative_eq!(t.from_unit(y), 0.09, epsilon = 1e-14);
        // lambda should equal its definition from mu_Y.
        let m = t.unit_drift(y);
        let md = t.unit_drift_dy(y);
        assert_relative_eq!(t.lambda(y), -(m * m + md) / 2.0, epsilon = 1e-12);
        // Lambda' = lambda by central difference.
        let h = 1e-6;
        let dl = (t.lambda_antideriv(y + h) - t.lambda_antideriv(y - h)) / (2.0 * h);
        assert_relative_eq!(dl, t.lambda(y), epsilon = 1e-8);
        let d2 = (t.lambda(y + h) - 2.0 * t.lambda(y) + t.lambda(y - h)) / (h * h);
        assert_relative_eq!(d2, t.lambda_d2(y), epsilon = 1e-3);
    }
}
