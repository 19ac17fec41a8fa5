//! Closed-form approximation to the transition density of a scalar diffusion.
//!
//! The density of `X_{t+delta} | X_t = x0` is approximated by transforming to
//! the unit-diffusion process `Y = gamma(X)`, expanding the transformed
//! density around its Gaussian leading term with recursively defined
//! coefficients `c_j`, and truncating after `J` terms:
//!
//! ```text
//! log f^(J)(x | x0) = -log sqrt(2 pi delta) + A1 + A2 + A3
//! A1 = -log sigma(x) - (gamma(x) - gamma(x0))^2 / (2 delta)
//! A2 = int_{x0}^{x} mu_Y(gamma(u)) / sigma(u) du
//! A3 = log sum_{j=0}^{J} c_j(gamma(x) | gamma(x0)) delta^j / j!
//! ```
//!
//! with `c_0 = 1` and, for `j >= 1`,
//!
//! ```text
//! c_j(y|y0) = j (y - y0)^{-j} int_{y0}^{y} (w - y0)^{j-1}
//!             [ lambda(w) c_{j-1}(w|y0) + c_{j-1}''(w|y0) / 2 ] dw ,
//! ```
//!
//! where `lambda = -(mu_Y^2 + mu_Y')/2`. The generic evaluator runs this
//! recursion by adaptive quadrature with finite-difference second derivatives.
//! Models with a closed-form transform get fast exact paths: `c_1` from the
//! antiderivative of `lambda`, `c_2` from the identity
//! `c_2 = c_1^2 + (lambda(y) + lambda(y0) - 2 c_1)/(y - y0)^2` (integration by
//! parts collapses the inner derivative terms), and full polynomial towers
//! when the recursion stays polynomial.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{ClosedFormTransform, DiffusionModel};
use crate::numerics::quad::{integrate, QuadratureSpec};

/// Deepest supported truncation order. The generic recursion nests quadrature
/// inside finite differences, so deeper orders are impractical; two terms
/// already suffice for sampling intervals up to a quarter of the time unit.
pub const MAX_ORDER: usize = 6;

/// Half-width of the removable singularity guard around `y = y0`.
const SINGULARITY_TOL: f64 = 1e-6;
/// Offset used to evaluate higher coefficients at the singular point.
const SINGULARITY_OFFSET: f64 = 1e-4;
/// Coefficient sums at or below this threshold are treated as a truncation
/// breakdown rather than a valid log argument.
pub const BREAKDOWN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct ExpansionOptions {
    /// Use the model's closed-form transform (`gamma`, `mu_Y`, `lambda`).
    pub closed_transform: bool,
    /// Use closed-form expansion coefficients where available.
    pub closed_coeffs: bool,
    pub quad: QuadratureSpec,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        ExpansionOptions {
            closed_transform: true,
            closed_coeffs: true,
            quad: QuadratureSpec::default(),
        }
    }
}

impl ExpansionOptions {
    /// Fully generic evaluation; closed forms only as test oracles.
    pub fn generic() -> Self {
        ExpansionOptions {
            closed_transform: false,
            closed_coeffs: false,
            ..Default::default()
        }
    }
}

/// Memoized transform values, keyed by the exact bit pattern of the input.
/// Single-writer: use one cache (one `Expansion`) per thread of work.
#[derive(Default)]
pub struct TransformCache {
    forward: HashMap<u64, f64>,
    inverse: HashMap<u64, f64>,
}

/// Evaluator for the `J`-term transition-density approximation at a fixed
/// `(model, theta)` pair.
pub struct Expansion<'m> {
    model: &'m dyn DiffusionModel,
    theta: Vec<f64>,
    x_ref: f64,
    closed: Option<Box<dyn ClosedFormTransform>>,
    opts: ExpansionOptions,
    cache: TransformCache,
}

impl<'m> Expansion<'m> {
    /// Builds an evaluator with the default reference point: the stationary
    /// mean when the model knows it, else a fixed interior point. The
    /// reference only shifts `gamma` by a constant; densities are invariant.
    pub fn new(model: &'m dyn DiffusionModel, theta: &[f64], opts: ExpansionOptions) -> Result<Self> {
        let x_ref = model.stationary_mean(theta).unwrap_or_else(|| {
            let (lo, hi) = model.state_domain();
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => 0.0,
            }
        });
        Self::with_x_ref(model, theta, x_ref, opts)
    }

    pub fn with_x_ref(
        model: &'m dyn DiffusionModel,
        theta: &[f64],
        x_ref: f64,
        opts: ExpansionOptions,
    ) -> Result<Self> {
        model.validate(theta)?;
        if !model.in_domain(x_ref) {
            return Err(Error::domain(format!(
                "reference point {x_ref} outside the state domain"
            )));
        }
        let closed = model.transform(theta);
        Ok(Expansion {
            model,
            theta: theta.to_vec(),
            x_ref,
            closed,
            opts,
            cache: TransformCache::default(),
        })
    }

    pub fn model(&self) -> &dyn DiffusionModel {
        self.model
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn closed_transform(&self) -> Option<&dyn ClosedFormTransform> {
        if self.opts.closed_transform {
            self.closed.as_deref()
        } else {
            None
        }
    }

    /// `gamma(x) = int_{x_ref}^x du / sigma(u)`; strictly increasing.
    pub fn transform(&mut self, x: f64) -> Result<f64> {
        if !self.model.in_domain(x) {
            return Err(Error::domain(format!("{x} outside the state domain")));
        }
        if let Some(t) = self.closed_transform() {
            return Ok(t.to_unit(x));
        }
        if let Some(&v) = self.cache.forward.get(&x.to_bits()) {
            return Ok(v);
        }
        let model = self.model;
        let theta = &self.theta;
        let v = integrate(
            |u| 1.0 / model.diffusion(u, theta),
            self.x_ref,
            x,
            &self.opts.quad,
        )?;
        self.cache.forward.insert(x.to_bits(), v);
        Ok(v)
    }

    /// Inverse of `gamma` by safeguarded Newton iteration (the derivative of
    /// `gamma` is `1/sigma`, so the Newton step is `x += (y - gamma(x)) sigma(x)`).
    pub fn inverse_transform(&mut self, y: f64) -> Result<f64> {
        if let Some(t) = self.closed_transform() {
            return Ok(t.from_unit(y));
        }
        if let Some(&v) = self.cache.inverse.get(&y.to_bits()) {
            return Ok(v);
        }
        let (dom_lo, dom_hi) = self.model.state_domain();
        let clip = |x: f64| {
            let mut v = x;
            if dom_lo.is_finite() {
                v = v.max(dom_lo + (dom_lo.abs() + 1.0) * 1e-14 + f64::MIN_POSITIVE);
            }
            if dom_hi.is_finite() {
                v = v.min(dom_hi - (dom_hi.abs() + 1.0) * 1e-14);
            }
            v
        };
        // Bracket the root by doubling steps away from the reference point.
        let mut lo = self.x_ref;
        let mut hi = self.x_ref;
        let mut step = self.model.diffusion(self.x_ref, &self.theta).max(1e-8);
        for _ in 0..200 {
            if self.transform(lo)? <= y {
                break;
            }
            lo = clip(lo - step);
            step *= 2.0;
        }
        step = self.model.diffusion(self.x_ref, &self.theta).max(1e-8);
        for _ in 0..200 {
            if self.transform(hi)? >= y {
                break;
            }
            hi = clip(hi + step);
            step *= 2.0;
        }
        if self.transform(lo)? > y || self.transform(hi)? < y {
            return Err(Error::RootFind {
                target: y,
                reason: "could not bracket the transform inverse".into(),
            });
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let g = self.transform(x)?;
            if (g - y).abs() <= 1e-12 * y.abs().max(1.0) {
                self.cache.inverse.insert(y.to_bits(), x);
                return Ok(x);
            }
            if g > y {
                hi = x;
            } else {
                lo = x;
            }
            let newton = clip(x + (y - g) * self.model.diffusion(x, &self.theta));
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::RootFind {
            target: y,
            reason: "transform inversion did not converge".into(),
        })
    }

    /// Drift of the transformed unit-diffusion process and the expansion
    /// potential `lambda(y) = -(mu_Y^2 + mu_Y')/2`, at a transformed point.
    pub fn unit_drift_lambda(&mut self, y: f64) -> Result<(f64, f64)> {
        if let Some(t) = self.closed_transform() {
            return Ok((t.unit_drift(y), t.lambda(y)));
        }
        let x = self.inverse_transform(y)?;
        let model = self.model;
        let theta = &self.theta;
        let s = model.diffusion(x, theta);
        let mu = model.drift(x, theta);
        let sx = model.diffusion_dx(x, theta);
        let mu_y = mu / s - 0.5 * sx;
        // d mu_Y / dy = sigma(x) * d/dx [ mu/sigma - sigma_x/2 ]
        let d_mu_y = s
            * ((model.drift_dx(x, theta) * s - mu * sx) / (s * s)
                - 0.5 * model.diffusion_dxx(x, theta));
        Ok((mu_y, -(mu_y * mu_y + d_mu_y) / 2.0))
    }

    fn lambda(&mut self, y: f64) -> Result<f64> {
        Ok(self.unit_drift_lambda(y)?.1)
    }

    /// Expansion coefficient `c_j(y | y0)`; `c_0 = 1` identically.
    pub fn coeff(&mut self, j: usize, y: f64, y0: f64) -> Result<f64> {
        if j > MAX_ORDER {
            return Err(Error::domain(format!(
                "expansion order {j} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        if j == 0 {
            return Ok(1.0);
        }
        if self.opts.closed_coeffs {
            if let Some(t) = self.closed.as_deref() {
                match j {
                    1 => return Ok(c1_closed(t, y, y0)),
                    2 => return Ok(c2_closed(t, y, y0)),
                    _ => {
                        if let Some(polys) = t.coeff_polys(y0, j) {
                            return Ok(polys[j].eval(y - y0));
                        }
                    }
                }
            }
        }
        self.generic_coeff(j, y, y0)
    }

    /// The quadrature-with-finite-differences route of the recursion.
    fn generic_coeff(&mut self, j: usize, y: f64, y0: f64) -> Result<f64> {
        let h = y - y0;
        if h.abs() < SINGULARITY_TOL {
            // The (y - y0)^{-j} prefactor is removable but numerically
            // explosive; evaluate the limit instead.
            if j == 1 {
                return self.lambda(y0);
            }
            let plus = self.generic_coeff(j, y0 + SINGULARITY_OFFSET, y0)?;
            let minus = self.generic_coeff(j, y0 - SINGULARITY_OFFSET, y0)?;
            return Ok(0.5 * (plus + minus));
        }
        let mut failure: Option<Error> = None;
        let quad = self.opts.quad;
        let integral = integrate(
            |w| match self.coeff_integrand(j, w, y0) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            },
            y0,
            y,
            &quad,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(j as f64 * integral? / h.powi(j as i32))
    }

    fn coeff_integrand(&mut self, j: usize, w: f64, y0: f64) -> Result<f64> {
        let lam = self.lambda(w)?;
        let prev = self.coeff(j - 1, w, y0)?;
        let d2 = if j == 1 {
            0.0
        } else {
            let h = SINGULARITY_OFFSET * w.abs().max(1.0);
            let plus = self.coeff(j - 1, w + h, y0)?;
            let minus = self.coeff(j - 1, w - h, y0)?;
            (plus - 2.0 * prev + minus) / (h * h)
        };
        Ok((w - y0).powi(j as i32 - 1) * (lam * prev + 0.5 * d2))
    }

    /// Partial sums `sum_{k=0}^{order} c_k(y|y0) delta^k / k!` for each
    /// requested order, sharing the coefficient evaluations.
    pub fn coeff_sums(&mut self, y: f64, y0: f64, delta: f64, orders: &[usize]) -> Result<Vec<f64>> {
        let max = orders.iter().copied().max().unwrap_or(0);
        let mut sum = 1.0;
        let mut factorial = 1.0;
        let mut partial = vec![0.0; max + 1];
        partial[0] = sum;
        for k in 1..=max {
            factorial *= k as f64;
            sum += self.coeff(k, y, y0)? * delta.powi(k as i32) / factorial;
            partial[k] = sum;
        }
        Ok(orders.iter().map(|&o| partial[o]).collect())
    }

    /// `A2`: the drift integral between the observation points (computed in
    /// the original coordinates; no transform inversion needed).
    pub fn drift_integral(&mut self, x: f64, x0: f64) -> Result<f64> {
        if let Some(t) = self.closed_transform() {
            let y0 = t.to_unit(x0);
            let y1 = t.to_unit(x);
            return Ok(t.unit_drift_integral(y0, y1));
        }
        let model = self.model;
        let theta = &self.theta;
        integrate(
            |u| {
                let s = model.diffusion(u, theta);
                (model.drift(u, theta) / s - 0.5 * model.diffusion_dx(u, theta)) / s
            },
            x0,
            x,
            &self.opts.quad,
        )
    }

    /// The `J`-term approximate log transition density of `x` given `x0`.
    pub fn log_density(&mut self, x: f64, x0: f64, delta: f64, j: usize) -> Result<f64> {
        let (a1, a2, a3) = self.log_density_parts(x, x0, delta, j)?;
        Ok(-0.5 * (2.0 * std::f64::consts::PI * delta).ln() + a1 + a2 + a3)
    }

    /// The three correction terms `(A1, A2, A3)` of the log density.
    pub fn log_density_parts(
        &mut self,
        x: f64,
        x0: f64,
        delta: f64,
        j: usize,
    ) -> Result<(f64, f64, f64)> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("sampling interval delta={delta} must be > 0")));
        }
        let y = self.transform(x)?;
        let y0 = self.transform(x0)?;
        let dy = y - y0;
        let a1 = -self.model.diffusion(x, &self.theta).ln() - dy * dy / (2.0 * delta);
        let a2 = self.drift_integral(x, x0)?;
        let sum = self.coeff_sums(y, y0, delta, &[j])?[0];
        if !(sum > BREAKDOWN_FLOOR) {
            return Err(Error::TruncationBreakdown { partial_sum: sum });
        }
        Ok((a1, a2, sum.ln()))
    }

    /// `A3` at two truncation orders `j <= j_star`, sharing coefficients; the
    /// difference proxies the tail of the coefficient series.
    pub fn a3_pair(
        &mut self,
        x: f64,
        x0: f64,
        delta: f64,
        j: usize,
        j_star: usize,
    ) -> Result<(f64, f64)> {
        debug_assert!(j <= j_star);
        let y = self.transform(x)?;
        let y0 = self.transform(x0)?;
        let sums = self.coeff_sums(y, y0, delta, &[j, j_star])?;
        if !(sums[0] > BREAKDOWN_FLOOR && sums[1] > BREAKDOWN_FLOOR) {
            return Err(Error::TruncationBreakdown {
                partial_sum: sums[0].min(sums[1]),
            });
        }
        Ok((sums[0].ln(), sums[1].ln()))
    }
}

fn c1_closed(t: &dyn ClosedFormTransform, y: f64, y0: f64) -> f64 {
    let h = y - y0;
    if h.abs() < SINGULARITY_TOL {
        t.lambda(0.5 * (y + y0))
    } else {
        (t.lambda_antideriv(y) - t.lambda_antideriv(y0)) / h
    }
}

fn c2_closed(t: &dyn ClosedFormTransform, y: f64, y0: f64) -> f64 {
    let h = y - y0;
    if h.abs() < 10.0 * SINGULARITY_TOL {
        let m = 0.5 * (y + y0);
        let lam = t.lambda(m);
        return lam * lam + t.lambda_d2(m) / 6.0;
    }
    let c1 = c1_closed(t, y, y0);
    c1 * c1 + (t.lambda(y) + t.lambda(y0) - 2.0 * c1) / (h * h)
}
