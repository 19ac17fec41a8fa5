//! Random variates and goodness-of-fit testing.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::numerics::special::kolmogorov_sf;

/// One draw from the noncentral chi-squared law with `nu > 0` degrees of
/// freedom (non-integer allowed) and noncentrality `lambda >= 0`, via the
/// Poisson mixture of gammas: `K ~ Poisson(lambda/2)`, then
/// `Gamma(nu/2 + K, scale 2)`.
pub fn sample_noncentral_chisq<R: Rng + ?Sized>(rng: &mut R, nu: f64, lambda: f64) -> Result<f64> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::domain(format!("degrees of freedom nu={nu} must be > 0")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("noncentrality lambda={lambda} must be >= 0")));
    }
    let k = if lambda > 0.0 {
        let pois = Poisson::new(0.5 * lambda)
            .map_err(|e| Error::domain(format!("poisson(lambda/2) construction: {e}")))?;
        pois.sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * nu + k;
    let gamma = Gamma::new(shape, 2.0)
        .map_err(|e| Error::domain(format!("gamma({shape}, 2) construction: {e}")))?;
    Ok(gamma.sample(rng))
}

/// One-sample Kolmogorov-Smirnov test of `samples` against the continuous
/// CDF `cdf`. Returns the statistic `sup_x |F_n(x) - F(x)|` and the p-value
/// from the asymptotic Kolmogorov distribution.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::domain("ks_test requires a non-empty sample"));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN in ks_test sample"));
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::domain(format!("cdf({x}) = {f} outside [0, 1]")));
        }
        let upper = (i as f64 + 1.0) / n - f;
        let lower = f - i as f64 / n;
        d = d.max(upper).max(lower);
    }
    let p = kolmogorov_sf(n.sqrt() * d);
    Ok((d, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::Streams;
    use crate::numerics::special::{chi_squared_cdf, normal_cdf};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn noncentral_chisq_moments() {
        // mean = nu + lambda, variance = 2 (nu + 2 lambda)
        let mut rng = Streams::new(7).derive(&[1]);
        let (nu, lambda) = (3.0, 2.0);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = sample_noncentral_chisq(&mut rng, nu, lambda).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let true_var = 2.0 * (nu + 2.0 * lambda);
        // third/fourth central moments drive the standard errors
        let se_mean = (true_var / n as f64).sqrt();
        assert!((mean - (nu + lambda)).abs() <= 4.0 * se_mean, "mean={mean}");
        // SE of the sample variance ~ sqrt((mu4 - var^2)/n); bound loosely via 8/sqrt(n) * var
        let se_var = 8.0 * true_var / (n as f64).sqrt();
        assert!((var - true_var).abs() <= 4.0 * se_var, "var={var}");
    }

    #[test]
    fn noncentral_chisq_reduces_to_central() {
        let mut rng = Streams::new(11).derive(&[2]);
        let nu = 4.5;
        let samples: Vec<f64> = (0..2000)
            .map(|_| sample_noncentral_chisq(&mut rng, nu, 0.0).unwrap())
            .collect();
        let (_, p) = ks_test(&samples, |x| chi_squared_cdf(x, nu)).unwrap();
        assert!(p > 0.01, "p={p}");
    }

    #[test]
    fn noncentral_chisq_rejects_bad_parameters() {
        let mut rng = Streams::new(0).derive(&[0]);
        assert!(sample_noncentral_chisq(&mut rng, 0.0, 1.0).is_err());
        assert!(sample_noncentral_chisq(&mut rng, 1.0, -0.1).is_err());
    }

    #[test]
    fn ks_exact_distribution_accepts() {
        let mut rng = Streams::new(3).derive(&[5]);
        let samples: Vec<f64> = (0..1000)
            .map(|_| {
                let u1: f64 = rng.gen::<f64>();
                let u2: f64 = rng.gen::<f64>();
                // Box-Muller standard normal
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let (_, p) = ks_test(&samples, normal_cdf).unwrap();
        assert!(p > 0.01, "p={p}");
    }

    #[test]
    fn ks_point_mass_statistic() {
        let samples = vec![0.7; 50];
        let (d, _) = ks_test(&samples, |x| if x < 0.7 { 0.0 } else { 0.5 }).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ks_gross_misfit_rejects() {
        let mut rng = Streams::new(3).derive(&[6]);
        let samples: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let (_, p) = ks_test(&samples, |x| chi_squared_cdf(x, 3.0)).unwrap();
        assert!(p < 1e-6, "p={p}");
    }

    #[test]
    fn ks_empty_sample_is_error() {
        assert!(ks_test(&[], |_| 0.5).is_err());
    }
}
