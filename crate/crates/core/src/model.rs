//! The diffusion-model contract.
//!
//! A model supplies the drift `mu(x; theta)` and diffusion `sigma(x; theta)`
//! of `dX = mu dt + sigma dB`, their partial derivatives up to the orders the
//! information approximation consumes, and a set of optional capabilities
//! (exact transition law, exact sampler, stationary law, closed-form
//! transform). Partial derivatives default to central finite differences;
//! models ship closed forms where they matter.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::poly::Poly;
use crate::numerics::sym::SymMatrix;

/// Indices of the drift parameters and the diffusion parameters within the
/// full parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamPartition {
    pub drift: Vec<usize>,
    pub diffusion: Vec<usize>,
}

/// A parameter point together with its drift/diffusion index partition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub partition: ParamPartition,
}

impl ParamVector {
    /// Builds a validated parameter vector for `model`.
    pub fn for_model(model: &dyn DiffusionModel, values: Vec<f64>) -> Result<Self> {
        model.validate(&values)?;
        Ok(ParamVector {
            values,
            partition: model.partition(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn x_step(x: f64) -> f64 {
    f64::EPSILON.powf(1.0 / 3.0) * x.abs().max(1.0)
}

fn p_step(t: f64) -> f64 {
    f64::EPSILON.powf(1.0 / 3.0) * t.abs().max(1.0)
}

macro_rules! bump {
    ($theta:expr, $i:expr, $h:expr) => {{
        let mut t = $theta.to_vec();
        t[$i] += $h;
        t
    }};
}

/// Behavioral contract for a scalar diffusion model.
///
/// Required: parameter metadata, state domain, drift and diffusion. Everything
/// else has finite-difference defaults or is an optional capability reported
/// through `Option`.
pub trait DiffusionModel: Sync + Send {
    /// Stable identifier used in configs and reports ("vasicek", "cir", ...).
    fn id(&self) -> &str;

    fn param_dim(&self) -> usize;

    fn param_names(&self) -> Vec<&'static str>;

    fn partition(&self) -> ParamPartition;

    /// Hard box constraints each coordinate must satisfy.
    fn param_bounds(&self) -> Vec<(f64, f64)>;

    /// Full parameter validation: dimension, box bounds, and any joint
    /// constraints (e.g. boundary non-attainment conditions).
    fn validate(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::domain(format!(
                "parameter dimension {} does not match model '{}' (expects {})",
                theta.len(),
                self.id(),
                self.param_dim()
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
        Ok(())
    }

    /// Open interval on which the process lives.
    fn state_domain(&self) -> (f64, f64);

    fn in_domain(&self, x: f64) -> bool {
        let (lo, hi) = self.state_domain();
        x.is_finite() && x > lo && x < hi
    }

    fn drift(&self, x: f64, theta: &[f64]) -> f64;

    /// Diffusion coefficient; strictly positive on the state domain.
    fn diffusion(&self, x: f64, theta: &[f64]) -> f64;

    // ---- x-derivatives (finite-difference defaults) ----

    fn drift_dx(&self, x: f64, theta: &[f64]) -> f64 {
        let h = x_step(x);
        (self.drift(x + h, theta) - self.drift(x - h, theta)) / (2.0 * h)
    }

    fn diffusion_dx(&self, x: f64, theta: &[f64]) -> f64 {
        let h = x_step(x);
        (self.diffusion(x + h, theta) - self.diffusion(x - h, theta)) / (2.0 * h)
    }

    fn diffusion_dxx(&self, x: f64, theta: &[f64]) -> f64 {
        let h = f64::EPSILON.powf(0.25) * x.abs().max(1.0);
        (self.diffusion(x + h, theta) - 2.0 * self.diffusion(x, theta)
            + self.diffusion(x - h, theta))
            / (h * h)
    }

    // ---- parameter derivatives used by the first-order information
    // approximation. `i`, `j` are global parameter indices; drift derivatives
    // are taken with respect to drift parameters, diffusion derivatives with
    // respect to diffusion parameters (the models here have separated
    // parameters, so the cross terms vanish identically). ----

    fn drift_dp(&self, x: f64, theta: &[f64], i: usize) -> f64 {
        let h = p_step(theta[i]);
        (self.drift(x, &bump!(theta, i, h)) - self.drift(x, &bump!(theta, i, -h))) / (2.0 * h)
    }

    fn drift_dp2(&self, x: f64, theta: &[f64], i: usize, j: usize) -> f64 {
        let h = p_step(theta[j]);
        (self.drift_dp(x, &bump!(theta, j, h), i) - self.drift_dp(x, &bump!(theta, j, -h), i))
            / (2.0 * h)
    }

    fn drift_dx_dp2(&self, x: f64, theta: &[f64], i: usize, j: usize) -> f64 {
        let h = x_step(x);
        (self.drift_dp2(x + h, theta, i, j) - self.drift_dp2(x - h, theta, i, j)) / (2.0 * h)
    }

    fn diffusion_dp(&self, x: f64, theta: &[f64], i: usize) -> f64 {
        let h = p_step(theta[i]);
        (self.diffusion(x, &bump!(theta, i, h)) - self.diffusion(x, &bump!(theta, i, -h)))
            / (2.0 * h)
    }

    fn diffusion_dp2(&self, x: f64, theta: &[f64], i: usize, j: usize) -> f64 {
        let h = p_step(theta[j]);
        (self.diffusion_dp(x, &bump!(theta, j, h), i)
            - self.diffusion_dp(x, &bump!(theta, j, -h), i))
            / (2.0 * h)
    }

    fn diffusion_dx_dp(&self, x: f64, theta: &[f64], i: usize) -> f64 {
        let h = p_step(theta[i]);
        (self.diffusion_dx(x, &bump!(theta, i, h)) - self.diffusion_dx(x, &bump!(theta, i, -h)))
            / (2.0 * h)
    }

    fn diffusion_dx_dp2(&self, x: f64, theta: &[f64], i: usize, j: usize) -> f64 {
        let h = p_step(theta[j]);
        (self.diffusion_dx_dp(x, &bump!(theta, j, h), i)
            - self.diffusion_dx_dp(x, &bump!(theta, j, -h), i))
            / (2.0 * h)
    }

    fn diffusion_dxx_dp(&self, x: f64, theta: &[f64], i: usize) -> f64 {
        let h = p_step(theta[i]);
        (self.diffusion_dxx(x, &bump!(theta, i, h)) - self.diffusion_dxx(x, &bump!(theta, i, -h)))
            / (2.0 * h)
    }

    fn diffusion_dxx_dp2(&self, x: f64, theta: &[f64], i: usize, j: usize) -> f64 {
        let h = p_step(theta[j]);
        (self.diffusion_dxx_dp(x, &bump!(theta, j, h), i)
            - self.diffusion_dxx_dp(x, &bump!(theta, j, -h), i))
            / (2.0 * h)
    }

    // ---- optional capabilities ----

    /// Exact transition log-density of `X_{t+delta}` given `X_t = x0`.
    fn exact_transition_logdensity(
        &self,
        _x: f64,
        _x0: f64,
        _delta: f64,
        _theta: &[f64],
    ) -> Option<Result<f64>> {
        None
    }

    /// One exact draw of `X_{t+delta}` given `X_t = x0`.
    fn exact_step(
        &self,
        _rng: &mut dyn RngCore,
        _x0: f64,
        _delta: f64,
        _theta: &[f64],
    ) -> Option<Result<f64>> {
        None
    }

    /// One draw from the stationary law.
    fn stationary_sample(&self, _rng: &mut dyn RngCore, _theta: &[f64]) -> Option<Result<f64>> {
        None
    }

    fn stationary_mean(&self, _theta: &[f64]) -> Option<f64> {
        None
    }

    fn stationary_logpdf(&self, _x: f64, _theta: &[f64]) -> Option<f64> {
        None
    }

    /// Interval carrying all but a negligible sliver of stationary mass, used
    /// as the integration range for stationary expectations.
    fn stationary_support(&self, _theta: &[f64]) -> Option<(f64, f64)> {
        None
    }

    /// Closed-form unit-diffusion transform and associated quantities.
    fn transform(&self, _theta: &[f64]) -> Option<Box<dyn ClosedFormTransform>> {
        None
    }

    /// Exact Fisher information of one transition, when known analytically.
    fn fisher_exact(&self, _theta: &[f64], _delta: f64) -> Option<SymMatrix> {
        None
    }

    /// Closed-form first-order (one-term-expansion) approximation to the
    /// expected log-density Hessian of one transition.
    fn first_order_information(&self, _theta: &[f64], _delta: f64) -> Option<SymMatrix> {
        None
    }

    /// Cheap moment-matching starting values from an observed path.
    fn moment_init(&self, _observations: &[f64], _delta: f64) -> Option<Vec<f64>> {
        None
    }

    /// Box used by the optimizer: the hard bounds tightened around the data.
    fn optimization_bounds(&self, _observations: &[f64], _delta: f64) -> Vec<(f64, f64)> {
        self.param_bounds()
    }
}

/// Closed-form description of the transformed process `Y = gamma(X)` with
/// unit diffusion, `dY = mu_Y(Y) dt + dB`.
pub trait ClosedFormTransform: Sync + Send {
    /// `gamma(x) = int_{x_ref}^x du / sigma(u)`.
    fn to_unit(&self, x: f64) -> f64;

    fn from_unit(&self, y: f64) -> f64;

    fn unit_drift(&self, y: f64) -> f64;

    fn unit_drift_dy(&self, y: f64) -> f64;

    /// `lambda(y) = -(mu_Y^2 + mu_Y')/2`.
    fn lambda(&self, y: f64) -> f64 {
        let m = self.unit_drift(y);
        -(m * m + self.unit_drift_dy(y)) / 2.0
    }

    /// Antiderivative of `lambda`, i.e. `Lambda' = lambda`.
    fn lambda_antideriv(&self, y: f64) -> f64;

    /// Second derivative of `lambda`.
    fn lambda_d2(&self, y: f64) -> f64;

    /// `int_{y0}^{y1} mu_Y(v) dv`.
    fn unit_drift_integral(&self, y0: f64, y1: f64) -> f64;

    /// Expansion coefficients `c_0..c_{j_max}` as polynomials in `u = y - y0`
    /// for fixed `y0`, when the recursion stays polynomial (constant-diffusion
    /// models). `None` means only the `c_1`/`c_2` closed forms exist.
    fn coeff_polys(&self, _y0: f64, _j_max: usize) -> Option<Vec<Poly>> {
        None
    }
}

/// Builds the tower `c_0..c_{j_max}` in `u = y - y0` for a polynomial
/// `lambda(u + y0)`: each level integrates
/// `u^{j-1} (lambda c_{j-1} + c_{j-1}'' / 2)` and divides by `u^j / j`,
/// which is exact division for polynomials.
pub fn polynomial_coeff_tower(lambda_in_u: &Poly, j_max: usize) -> Vec<Poly> {
    let mut tower = Vec::with_capacity(j_max + 1);
    tower.push(Poly::constant(1.0));
    for j in 1..=j_max {
        let prev = &tower[j - 1];
        let integrand = lambda_in_u
            .mul(prev)
            .add(&prev.second_derivative().scale(0.5))
            .shift_up(j - 1);
        let c_j = integrand.antiderivative().shift_down(j).scale(j as f64);
        tower.push(c_j);
    }
    tower
}
