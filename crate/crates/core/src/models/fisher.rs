//! First-order approximation to the expected Hessian of the log transition
//! density of one transition, assembled from stationary expectations of
//! drift/diffusion partial derivatives.
//!
//! For a model with separated drift parameters `eta` and diffusion parameters
//! `xi`, the one-term density expansion gives, to `O(delta^2)`,
//!
//! ```text
//! E[d^2 log f / d eta_i d eta_j]  = delta * E[ -mu_i mu_j / s^2 - mu mu_ij / s^2
//!                                              + mu_ij s_x / s - mu_xij / 2 ]
//! E[d^2 log f / d eta_i d xi_j]   = delta * E[ 2 mu mu_i s_j / s^3
//!                                              - mu_i s_x s_j / s^2 + mu_i s_xj / s ]
//! E[d^2 log f / d xi_i d xi_j]    = -2 E[ s_i s_j / s^2 ] + delta * E[ ... ]
//! ```
//!
//! with expectations under the stationary law. The negative of this matrix is
//! a leading-order approximation to the Fisher information `I(delta)`.

use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::numerics::quad::{integrate, QuadratureSpec};
use crate::numerics::sym::SymMatrix;

fn stationary_expectation(
    model: &dyn DiffusionModel,
    theta: &[f64],
    quad: &QuadratureSpec,
    g: impl Fn(f64) -> f64,
) -> Result<f64> {
    let (lo, hi) = model
        .stationary_support(theta)
        .ok_or_else(|| Error::unsupported(model, "a stationary law (support)"))?;
    integrate(
        |x| {
            let logpdf = model
                .stationary_logpdf(x, theta)
                .expect("stationary_support implies stationary_logpdf");
            g(x) * logpdf.exp()
        },
        lo,
        hi,
        quad,
    )
}

/// The one-term-expansion approximation `N(theta, 1, delta)` to the expected
/// log-density Hessian, computed from the model's closed-form (or
/// finite-difference) partials and stationary-law expectations by quadrature.
pub fn first_order_information(
    model: &dyn DiffusionModel,
    theta: &[f64],
    delta: f64,
    quad: &QuadratureSpec,
) -> Result<SymMatrix> {
    model.validate(theta)?;
    let part = model.partition();
    let d = model.param_dim();
    let expect =
        |g: &dyn Fn(f64) -> f64| stationary_expectation(model, theta, quad, g);

    let mut n = SymMatrix::zeros(d);
    for a in 0..d {
        for b in a..d {
            let a_drift = part.drift.contains(&a);
            let b_drift = part.drift.contains(&b);
            let value = if a_drift && b_drift {
                delta
                    * expect(&|x| {
                        let s = model.diffusion(x, theta);
                        let mu = model.drift(x, theta);
                        let mi = model.drift_dp(x, theta, a);
                        let mj = model.drift_dp(x, theta, b);
                        let mij = model.drift_dp2(x, theta, a, b);
                        let mxij = model.drift_dx_dp2(x, theta, a, b);
                        -mi * mj / (s * s) - mu * mij / (s * s)
                            + mij * model.diffusion_dx(x, theta) / s
                            - 0.5 * mxij
                    })?
            } else if !a_drift && !b_drift {
                let leading = -2.0
                    * expect(&|x| {
                        let s = model.diffusion(x, theta);
                        model.diffusion_dp(x, theta, a) * model.diffusion_dp(x, theta, b)
                            / (s * s)
                    })?;
                let correction = expect(&|x| {
                    let s = model.diffusion(x, theta);
                    let mu = model.drift(x, theta);
                    let mx = model.drift_dx(x, theta);
                    let sx = model.diffusion_dx(x, theta);
                    let sxx = model.diffusion_dxx(x, theta);
                    let si = model.diffusion_dp(x, theta, a);
                    let sj = model.diffusion_dp(x, theta, b);
                    let sij = model.diffusion_dp2(x, theta, a, b);
                    let sxi = model.diffusion_dx_dp(x, theta, a);
                    let sxj = model.diffusion_dx_dp(x, theta, b);
                    let sxij = model.diffusion_dx_dp2(x, theta, a, b);
                    let sxxi = model.diffusion_dxx_dp(x, theta, a);
                    let sxxj = model.diffusion_dxx_dp(x, theta, b);
                    let sxxij = model.diffusion_dxx_dp2(x, theta, a, b);
                    -6.0 * mu * mu * si * sj / s.powi(4)
                        + 16.0 * mu * sx * si * sj / s.powi(3)
                        + 2.0 * mu * mu * sij / s.powi(3)
                        - 3.0 * mx * si * sj / (s * s)
                        - 9.5 * sx * sx * si * sj / (s * s)
                        - 4.5 * mu * sx * sij / (s * s)
                        - 5.0 * mu * sxi * sj / (s * s)
                        - 5.0 * mu * sxj * si / (s * s)
                        + mx * sij / s
                        + 4.0 * sxx * si * sj / s
                        + 5.5 * sx * sxi * sj / s
                        + 5.5 * sx * sxj * si / s
                        + 1.5 * sx * sx * sij / s
                        + 2.5 * mu * sxij / s
                        - 0.75 * sxx * sij
                        - 2.5 * sxi * sxj
                        - 1.5 * sx * sxij
                        - sxxi * sj
                        - sxxj * si
                        + 0.75 * s * sxxij
                })?;
                leading + delta * correction
            } else {
                // One drift index, one diffusion index.
                let (i, j) = if a_drift { (a, b) } else { (b, a) };
                delta
                    * expect(&|x| {
                        let s = model.diffusion(x, theta);
                        let mu = model.drift(x, theta);
                        let mi = model.drift_dp(x, theta, i);
                        let sj = model.diffusion_dp(x, theta, j);
                        2.0 * mu * mi * sj / s.powi(3)
                            - mi * model.diffusion_dx(x, theta) * sj / (s * s)
                            + mi * model.diffusion_dx_dp(x, theta, j) / s
                    })?
            };
            n.set(a, b, value);
        }
    }
    Ok(n)
}
