//! The Vasicek (Ornstein-Uhlenbeck) model `dX = kappa (alpha - X) dt + sigma dB`
//! with parameters `theta = (kappa, alpha, sigma)`.
//!
//! The transition law is Gaussian, so the model carries the exact transition
//! density, an exact sampler, the stationary law `N(alpha, sigma^2 / 2 kappa)`,
//! the exact Fisher information of one transition, and closed forms for the
//! unit-diffusion transform including polynomial expansion coefficients of
//! every order.

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{
    polynomial_coeff_tower, ClosedFormTransform, DiffusionModel, ParamPartition,
};
use crate::models::{path_moments, reversion_from_autocorr, widened_range};
use crate::numerics::poly::Poly;
use crate::numerics::special::normal_logpdf;
use crate::numerics::sym::SymMatrix;

#[derive(Debug, Clone, Copy, Default)]
pub struct Vasicek;

pub const KAPPA_BOUNDS: (f64, f64) = (1e-4, 50.0);

impl Vasicek {
    /// Conditional mean and variance of `X_{t+delta}` given `X_t = x0`.
    pub fn transition_moments(x0: f64, delta: f64, theta: &[f64]) -> (f64, f64) {
        let (kappa, alpha, sigma) = (theta[0], theta[1], theta[2]);
        let e = (-kappa * delta).exp();
        let mean = x0 * e + alpha * (1.0 - e);
        let var = sigma * sigma * (-(-2.0 * kappa * delta).exp_m1()) / (2.0 * kappa);
        (mean, var)
    }
}

/// Exact Gaussian transition log-density.
pub fn exact_logdensity(x: f64, x0: f64, delta: f64, theta: &[f64]) -> Result<f64> {
    let (kappa, sigma) = (theta[0], theta[2]);
    if !(kappa > 0.0 && sigma > 0.0) {
        return Err(Error::domain(format!(
            "vasicek transition law requires kappa > 0 and sigma > 0, got ({kappa}, {sigma})"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::domain(format!("sampling interval delta={delta} must be > 0")));
    }
    let (mean, var) = Vasicek::transition_moments(x0, delta, theta);
    Ok(normal_logpdf(x, mean, var))
}

/// Exact Fisher information matrix of one transition at spacing `delta`.
///
/// Entries (with `e2 = e^{2 kappa delta} - 1`, computed by `exp_m1` so the
/// small-`delta` cancellations stay accurate):
/// `I_11 = 1/(2 kappa^2) + delta [kappa delta (2 + e2) - 2 e2] / (kappa e2^2)`,
/// `I_13 = (2 kappa delta - e2) / (sigma kappa e2)`,
/// `I_22 = 2 kappa (e^{kappa delta} - 1)^2 / (sigma^2 e2)`,
/// `I_33 = 2 / sigma^2`, `I_12 = I_23 = 0`.
pub fn fisher_exact(theta: &[f64], delta: f64) -> SymMatrix {
    let (kappa, _alpha, sigma) = (theta[0], theta[1], theta[2]);
    let e1 = (kappa * delta).exp_m1();
    let e2 = (2.0 * kappa * delta).exp_m1();
    let kd = kappa * delta;
    let mut m = SymMatrix::zeros(3);
    m.set(
        0,
        0,
        1.0 / (2.0 * kappa * kappa) + delta * (kd * (2.0 + e2) - 2.0 * e2) / (kappa * e2 * e2),
    );
    m.set(0, 2, (2.0 * kd - e2) / (sigma * kappa * e2));
    m.set(1, 1, 2.0 * kappa * e1 * e1 / (sigma * sigma * e2));
    m.set(2, 2, 2.0 / (sigma * sigma));
    m
}

/// Closed-form first-order approximation to the expected log-density Hessian
/// of one transition (leading order in `delta`).
pub fn first_order_information(theta: &[f64], delta: f64) -> SymMatrix {
    let (kappa, _alpha, sigma) = (theta[0], theta[1], theta[2]);
    let mut m = SymMatrix::zeros(3);
    m.set(0, 0, -delta / (2.0 * kappa));
    m.set(0, 2, delta / sigma);
    m.set(1, 1, -delta * kappa * kappa / (sigma * sigma));
    m.set(2, 2, -2.0 / (sigma * sigma));
    m
}

impl DiffusionModel for Vasicek {
    fn id(&self) -> &str {
        "vasicek"
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
        vec![KAPPA_BOUNDS, (-1e12, 1e12), (1e-9, 1e6)]
    }

    fn state_domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn drift(&self, x: f64, theta: &[f64]) -> f64 {
        theta[0] * (theta[1] - x)
    }

    fn diffusion(&self, _x: f64, theta: &[f64]) -> f64 {
        theta[2]
    }

    fn drift_dx(&self, _x: f64, theta: &[f64]) -> f64 {
        -theta[0]
    }

    fn diffusion_dx(&self, _x: f64, _theta: &[f64]) -> f64 {
        0.0
    }

    fn diffusion_dxx(&self, _x: f64, _theta: &[f64]) -> f64 {
        0.0
    }

    fn drift_dp(&self, x: f64, theta: &[f64], i: usize) -> f64 {
        match i {
            0 => theta[1] - x,
            1 => theta[0],
            _ => 0.0,
        }
    }

    fn drift_dp2(&self, _x: f64, _theta: &[f64], i: usize, j: usize) -> f64 {
        // mu_{kappa alpha} = 1; all other second parameter derivatives vanish.
        if (i, j) == (0, 1) || (i, j) == (1, 0) {
            1.0
        } else {
            0.0
        }
    }

    fn drift_dx_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn diffusion_dp(&self, _x: f64, _theta: &[f64], i: usize) -> f64 {
        if i == 2 {
            1.0
        } else {
            0.0
        }
    }

    fn diffusion_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn diffusion_dx_dp(&self, _x: f64, _theta: &[f64], _i: usize) -> f64 {
        0.0
    }

    fn diffusion_dx_dp2(&self, _x: f64, _theta: &[f64], _i: usize, _j: usize) -> f64 {
        0.0
    }

    fn diffusion_dxx_dp(&self, _x: f64, _theta: &[f64], _i: usize) -> f64 {
        0.0
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
        let (mean, var) = Vasicek::transition_moments(x0, delta, theta);
        let z: f64 = StandardNormal.sample(rng);
        Some(Ok(mean + var.sqrt() * z))
    }

    fn stationary_sample(&self, rng: &mut dyn RngCore, theta: &[f64]) -> Option<Result<f64>> {
        let sd = theta[2] / (2.0 * theta[0]).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        Some(Ok(theta[1] + sd * z))
    }

    fn stationary_mean(&self, theta: &[f64]) -> Option<f64> {
        Some(theta[1])
    }

    fn stationary_logpdf(&self, x: f64, theta: &[f64]) -> Option<f64> {
        let var = theta[2] * theta[2] / (2.0 * theta[0]);
        Some(normal_logpdf(x, theta[1], var))
    }

    fn stationary_support(&self, theta: &[f64]) -> Option<(f64, f64)> {
        let sd = theta[2] / (2.0 * theta[0]).sqrt();
        Some((theta[1] - 10.0 * sd, theta[1] + 10.0 * sd))
    }

    fn transform(&self, theta: &[f64]) -> Option<Box<dyn ClosedFormTransform>> {
        Some(Box::new(VasicekTransform {
            kappa: theta[0],
            alpha: theta[1],
            sigma: theta[2],
        }))
    }

    fn fisher_exact(&self, theta: &[f64], delta: f64) -> Option<SymMatrix> {
        Some(fisher_exact(theta, delta))
    }

    fn first_order_information(&self, theta: &[f64], delta: f64) -> Option<SymMatrix> {
        Some(first_order_information(theta, delta))
    }

    fn moment_init(&self, observations: &[f64], delta: f64) -> Option<Vec<f64>> {
        let (mean, var, rho) = path_moments(observations);
        let kappa = reversion_from_autocorr(rho, delta);
        let sigma = (var.max(1e-16) * 2.0 * kappa).sqrt();
        Some(vec![kappa, mean, sigma])
    }

    fn optimization_bounds(&self, observations: &[f64], _delta: f64) -> Vec<(f64, f64)> {
        let (lo, hi) = widened_range(observations, 5.0);
        let (_, var, _) = path_moments(observations);
        vec![
            KAPPA_BOUNDS,
            (lo, hi),
            (1e-6, 10.0 * var.sqrt().max(1e-6)),
        ]
    }
}

/// Unit-diffusion transform of the Vasicek model, referenced at the
/// stationary mean: `y = (x - alpha)/sigma`, `mu_Y(y) = -kappa y`.
struct VasicekTransform {
    kappa: f64,
    alpha: f64,
    sigma: f64,
}

impl ClosedFormTransform for VasicekTransform {
    fn to_unit(&self, x: f64) -> f64 {
        (x - self.alpha) / self.sigma
    }

    fn from_unit(&self, y: f64) -> f64 {
        self.alpha + self.sigma * y
    }

    fn unit_drift(&self, y: f64) -> f64 {
        -self.kappa * y
    }

    fn unit_drift_dy(&self, _y: f64) -> f64 {
        -self.kappa
    }

    fn lambda(&self, y: f64) -> f64 {
        let k = self.kappa;
        -(k * k * y * y - k) / 2.0
    }

    fn lambda_antideriv(&self, y: f64) -> f64 {
        let k = self.kappa;
        -k * k * y * y * y / 6.0 + k * y / 2.0
    }

    fn lambda_d2(&self, _y: f64) -> f64 {
        -self.kappa * self.kappa
    }

    fn unit_drift_integral(&self, y0: f64, y1: f64) -> f64 {
        -self.kappa * (y1 * y1 - y0 * y0) / 2.0
    }

    fn coeff_polys(&self, y0: f64, j_max: usize) -> Option<Vec<Poly>> {
        let k = self.kappa;
        // lambda(u + y0) expanded in u.
        let lambda_u = Poly(vec![
            -(k * k * y0 * y0 - k) / 2.0,
            -k * k * y0,
            -k * k / 2.0,
        ]);
        Some(polynomial_coeff_tower(&lambda_u, j_max))
    }
}
