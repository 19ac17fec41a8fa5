//! Special functions: Hermite polynomials in the derivative-of-Gaussian
//! convention, the log-scaled modified Bessel function of the first kind, and
//! distribution functions used by the goodness-of-fit tests.

use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// Hermite polynomial `H_j(z) = phi(z)^{-1} d^j phi(z) / dz^j` where `phi` is
/// the standard normal density. Equals `(-1)^j` times the probabilists'
/// polynomial; satisfies `H_{j+1}(z) = -z H_j(z) - j H_{j-1}(z)`.
pub fn hermite(j: usize, z: f64) -> f64 {
    assert!(j <= 20, "hermite order {j} exceeds the supported maximum 20");
    if j == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = -z;
    for k in 1..j {
        let next = -z * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `log I_q(x)` for the modified Bessel function of the first kind with real
/// order `q >= 0`, accurate to ~1e-12 relative up to `x = 700` without
/// overflowing.
pub fn log_bessel_i(q: f64, x: f64) -> Result<f64> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::domain(format!("bessel order q={q} must be >= 0")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain(format!("bessel argument x={x} must be > 0")));
    }
    if x <= 50.0 {
        return Ok(series_log_bessel_i(q, x));
    }
    if let Some(v) = asymptotic_log_bessel_i(q, x) {
        return Ok(v);
    }
    Ok(scaled_series_log_bessel_i(q, x))
}

/// Ascending series in linear space; safe for x <= 50 where the term sum
/// stays far below the overflow threshold.
fn series_log_bessel_i(q: f64, x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=500 {
        term *= z / (k as f64 * (q + k as f64));
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    q * (0.5 * x).ln() - ln_gamma(q + 1.0) + sum.ln()
}

/// Large-argument expansion `I_q(x) ~ e^x / sqrt(2 pi x) * sum_k t_k`.
/// Returns `None` when the asymptotic terms stop decreasing before reaching
/// the target accuracy (large order relative to the argument).
fn asymptotic_log_bessel_i(q: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * q * q;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut prev_abs = f64::INFINITY;
    for k in 1..=60 {
        let two_k_minus_1 = (2 * k - 1) as f64;
        term *= -(mu - two_k_minus_1 * two_k_minus_1) / (8.0 * k as f64 * x);
        if term.abs() >= prev_abs {
            return None;
        }
        sum += term;
        prev_abs = term.abs();
        if term.abs() <= 1e-16 * sum.abs() {
            return Some(x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln());
        }
    }
    None
}

/// Log-sum-exp evaluation of the ascending series, valid for any magnitudes.
fn scaled_series_log_bessel_i(q: f64, x: f64) -> f64 {
    let log_z = 2.0 * (0.5 * x).ln();
    let log_term = |k: f64| k * log_z - ln_gamma(k + 1.0) - ln_gamma(q + k + 1.0);
    // Peak of the term sequence: k (k + q) = (x/2)^2.
    let z = 0.25 * x * x;
    let k_star = (0.5 * (-q + (q * q + 4.0 * z).sqrt())).max(0.0).floor();
    let m = log_term(k_star);
    let mut sum = 0.0;
    let mut k = k_star;
    loop {
        let lt = log_term(k) - m;
        if lt < -45.0 {
            break;
        }
        sum += lt.exp();
        if k == 0.0 {
            break;
        }
        k -= 1.0;
    }
    let mut k = k_star + 1.0;
    loop {
        let lt = log_term(k) - m;
        if lt < -45.0 {
            break;
        }
        sum += lt.exp();
        k += 1.0;
    }
    q * (0.5 * x).ln() + m + sum.ln()
}

/// Survival function of the asymptotic Kolmogorov distribution,
/// `Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)`, truncated at 100 terms.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.05 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kk = (k * k) as f64;
        sum += sign * (-2.0 * kk * t * t).exp();
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Chi-squared CDF with `k` degrees of freedom.
pub fn chi_squared_cdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * k, 0.5 * x)
    }
}

/// CDF of the gamma distribution with the given shape and scale.
pub fn gamma_cdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(shape, x / scale)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal log-density.
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * d * d / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate, QuadratureSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn hermite_low_orders() {
        for z in [-3.0, -0.5, 0.0, 1.7] {
            assert_eq!(hermite(0, z), 1.0);
        }
        // d phi/dz = -z phi
        assert_abs_diff_eq!(hermite(1, 2.0), -2.0);
        // d^3 phi/dz^3 = (3z - z^3) phi, at z = 1: 2
        assert_abs_diff_eq!(hermite(3, 1.0), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn hermite_recurrence_on_grid() {
        for j in 1..=15usize {
            let mut z = -5.0;
            while z <= 5.0 {
                let lhs = hermite(j + 1, z) + z * hermite(j, z) + j as f64 * hermite(j - 1, z);
                assert!(lhs.abs() <= 1e-10 * hermite(j + 1, z).abs().max(1.0), "j={j} z={z}");
                z += 0.25;
            }
        }
    }

    #[test]
    fn hermite_orthogonality_under_gaussian_weight() {
        let spec = QuadratureSpec::default();
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for j in 0..=6usize {
            for k in 0..=6usize {
                if j == k {
                    continue;
                }
                let v = integrate(|z| phi(z) * hermite(j, z) * hermite(k, z), -12.0, 12.0, &spec)
                    .unwrap();
                assert!(v.abs() <= 1e-8, "<H_{j}, H_{k}> = {v}");
            }
        }
    }

    #[test]
    fn bessel_order_zero_at_small_argument() {
        // I_0(x) -> 1 as x -> 0+
        let v = log_bessel_i(0.0, 1e-8).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bessel_half_integer_closed_form() {
        // I_{1/2}(x) = sqrt(2/(pi x)) sinh(x)
        let v = log_bessel_i(0.5, 1.0).unwrap();
        let exact = ((2.0 / std::f64::consts::PI).sqrt() * 1.0_f64.sinh()).ln();
        assert_relative_eq!(v, exact, epsilon = 1e-12);
    }

    #[test]
    fn bessel_matches_integral_representation() {
        // For integer order, I_q(x) = (1/pi) int_0^pi e^{x cos t} cos(q t) dt.
        let spec = QuadratureSpec::default();
        for (q, x) in [(2.0, 10.0), (0.0, 7.5), (5.0, 30.0)] {
            let oracle = integrate(
                |t: f64| (x * t.cos()).exp() * (q * t).cos(),
                0.0,
                std::f64::consts::PI,
                &spec,
            )
            .unwrap()
                / std::f64::consts::PI;
            let v = log_bessel_i(q, x).unwrap();
            assert_relative_eq!(v, oracle.ln(), epsilon = 1e-10);
        }
    }

    #[test]
    fn bessel_large_argument_no_overflow_and_consistent() {
        // Continuity across the series/asymptotic switch at x = 50.
        let below = log_bessel_i(3.8, 49.999999).unwrap();
        let above = log_bessel_i(3.8, 50.000001).unwrap();
        assert_relative_eq!(below, above, epsilon = 1e-9);
        let v = log_bessel_i(2.0, 700.0).unwrap();
        assert!(v.is_finite() && v > 690.0 && v < 700.0);
        // Large order forces the scaled-series fallback.
        let w = log_bessel_i(120.0, 60.0).unwrap();
        let series = series_log_bessel_i(120.0, 50.0);
        assert!(w.is_finite() && w > series);
        assert_relative_eq!(
            scaled_series_log_bessel_i(2.0, 40.0),
            series_log_bessel_i(2.0, 40.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bessel_rejects_bad_arguments() {
        assert!(log_bessel_i(1.0, 0.0).is_err());
        assert!(log_bessel_i(1.0, -3.0).is_err());
        assert!(log_bessel_i(-0.5, 1.0).is_err());
    }

    #[test]
    fn kolmogorov_sf_limits() {
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(0.5) > 0.9);
        assert!(kolmogorov_sf(10.0) < 1e-12);
        // Known value Q(1.0) ~ 0.26999967...
        assert_abs_diff_eq!(kolmogorov_sf(1.0), 0.2699996716773, epsilon = 1e-10);
    }

    #[test]
    fn chi_squared_cdf_median_region() {
        // chi^2_2 is Exp(1/2): CDF(x) = 1 - exp(-x/2)
        assert_relative_eq!(
            chi_squared_cdf(3.0, 2.0),
            1.0 - (-1.5_f64).exp(),
            epsilon = 1e-12
        );
    }
}
