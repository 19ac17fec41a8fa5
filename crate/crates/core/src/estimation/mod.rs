//! Estimators and inference: likelihood maximization, observed information,
//! Wald statistics, the truncation-order selection rule, and asymptotic
//! moment estimates for the approximate maximizer.

pub mod moments;
pub mod optim;

pub use moments::{asymptotic_moments, AsymptoticMoments, MomentOptions, RepMoments};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::likelihood::{per_transition_logdensity, score, Likelihood, SamplePath};
use crate::model::{DiffusionModel, ParamVector};
use crate::numerics::fd::default_gradient_step;
use crate::numerics::rng::Streams;
use crate::numerics::sym::SymMatrix;
use optim::{bfgs, nelder_mead, Bounds};

/// Options for [`fit`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Local searches started around the initial point (the first start is
    /// the initial point itself).
    pub multistarts: usize,
    /// Seed for the deterministic start perturbations.
    pub seed: u64,
    pub simplex_max_iter: usize,
    pub quasi_newton_max_iter: usize,
    /// Also compute the observed information and standard errors at the
    /// maximizer.
    pub with_observed_info: bool,
    /// Override the model's data-derived optimization box.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            multistarts: 5,
            seed: 0,
            simplex_max_iter: 300,
            quasi_newton_max_iter: 120,
            with_observed_info: false,
            bounds: None,
        }
    }
}

/// Result of one likelihood maximization.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub theta_hat: ParamVector,
    pub loglik_at_opt: f64,
    /// Projected score norm at the maximizer divided by n is at most 1e-6.
    pub converged: bool,
    pub iterations: usize,
    /// Euclidean norm of the score, with components pinned at an active bound
    /// projected out.
    pub gradient_norm: f64,
    /// Coordinates sitting on an optimization bound.
    pub at_bounds: Vec<usize>,
    pub kind: Likelihood,
    pub observed_info: Option<SymMatrix>,
    pub std_errors: Option<Vec<f64>>,
}

const SCORE_TOL_PER_OBS: f64 = 1e-6;

/// Maximizes the chosen log-likelihood over the model's optimization box:
/// moment-matching initialization, a 5-point multistart, Nelder-Mead descent
/// and a BFGS polish. Deterministic given `(path, options)`.
pub fn fit(
    path: &SamplePath,
    model: &dyn DiffusionModel,
    kind: Likelihood,
    init: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let d = model.param_dim();
    let bounds = Bounds(
        opts.bounds
            .clone()
            .unwrap_or_else(|| model.optimization_bounds(&path.observations, path.delta)),
    );
    if bounds.dim() != d {
        return Err(Error::Config(format!(
            "bounds dimension {} does not match model dimension {d}",
            bounds.dim()
        )));
    }

    let mut start = match init {
        Some(v) => v.to_vec(),
        None => model
            .moment_init(&path.observations, path.delta)
            .unwrap_or_else(|| (0..d).map(|i| 0.5 * (bounds.0[i].0 + bounds.0[i].1)).collect()),
    };
    bounds.clamp(&mut start);

    let mut objective = |theta: &[f64]| -> f64 {
        if model.validate(theta).is_err() {
            return f64::INFINITY;
        }
        match crate::likelihood::loglik(path, theta, kind, model) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };

    // Deterministic multistart points around the initial guess.
    let streams = Streams::new(opts.seed);
    let mut starts = vec![start.clone()];
    for s in 1..opts.multistarts.max(1) {
        let mut rng = streams.derive(&[0xF17, s as u64]);
        for _attempt in 0..20 {
            let mut candidate = start.clone();
            for i in 0..d {
                let u: f64 = rand::Rng::gen::<f64>(&mut rng) * 2.0 - 1.0;
                let spread = 0.25 * start[i].abs().max(0.05 * bounds.width(i));
                candidate[i] += spread * u;
            }
            bounds.clamp(&mut candidate);
            if model.validate(&candidate).is_ok() {
                starts.push(candidate);
                break;
            }
        }
    }

    let mut best: Option<(Vec<f64>, f64, Vec<f64>, usize)> = None;
    for s in starts {
        let scale: Vec<f64> = (0..d)
            .map(|i| (0.1 * s[i].abs()).max(0.01 * bounds.width(i)).min(bounds.width(i) * 0.25))
            .collect();
        let nm = nelder_mead(
            &mut objective,
            &s,
            &scale,
            &bounds,
            opts.simplex_max_iter,
            1e-11,
        );
        let gtol = 0.5 * SCORE_TOL_PER_OBS * path.n() as f64;
        let qn = bfgs(
            &mut objective,
            &nm.x,
            &bounds,
            opts.quasi_newton_max_iter,
            gtol,
        );
        let iterations = nm.iterations + qn.iterations;
        let replace = match &best {
            None => true,
            Some((_, f_best, _, _)) => qn.f < *f_best,
        };
        if replace && qn.f.is_finite() {
            best = Some((qn.x, qn.f, qn.grad, iterations));
        }
    }

    let (theta_hat, f_opt, obj_grad, iterations) = best.ok_or_else(|| {
        Error::NonConvergence("no start produced a finite likelihood".into())
    })?;

    // Score at the maximizer; fall back to the optimizer's own gradient if a
    // stencil point leaves the feasible region.
    let loglik_grad = match score(path, &theta_hat, kind, model) {
        Ok(g) => g,
        Err(_) => obj_grad.iter().map(|g| -g).collect(),
    };

    let mut at_bounds = Vec::new();
    let mut projected = loglik_grad.clone();
    for i in 0..d {
        let (lo, hi) = bounds.0[i];
        let width = (hi - lo).max(1e-300);
        let at_lo = (theta_hat[i] - lo).abs() <= 1e-8 * width;
        let at_hi = (hi - theta_hat[i]).abs() <= 1e-8 * width;
        if at_lo || at_hi {
            at_bounds.push(i);
        }
        // KKT projection: a component pushing outward across an active bound
        // does not count against convergence.
        if (at_lo && projected[i] < 0.0) || (at_hi && projected[i] > 0.0) {
            projected[i] = 0.0;
        }
    }
    let gradient_norm = projected.iter().map(|g| g * g).sum::<f64>().sqrt();
    let converged = gradient_norm / path.n() as f64 <= SCORE_TOL_PER_OBS;

    let (observed_info_opt, std_errors) = if opts.with_observed_info {
        let j_info = match kind {
            Likelihood::Expansion(j) => j,
            Likelihood::Exact => 2,
        };
        let info = observed_info(path, &theta_hat, j_info, model)?;
        let se = info.inverse().ok().map(|inv| {
            inv.diagonal()
                .iter()
                .map(|v| (v / path.n() as f64).max(0.0).sqrt())
                .collect::<Vec<f64>>()
        });
        (Some(info), se)
    } else {
        (None, None)
    };

    Ok(FitResult {
        theta_hat: ParamVector::for_model(model, theta_hat)?,
        loglik_at_opt: -f_opt,
        converged,
        iterations,
        gradient_norm,
        at_bounds,
        kind,
        observed_info: observed_info_opt,
        std_errors,
    })
}

/// Observed information: the average outer product of per-transition score
/// vectors of the `j`-term approximate log-density. Positive semidefinite by
/// construction.
pub fn observed_info(
    path: &SamplePath,
    theta: &[f64],
    j: usize,
    model: &dyn DiffusionModel,
) -> Result<SymMatrix> {
    let d = theta.len();
    let n = path.n();
    let kind = Likelihood::Expansion(j);
    // Per-transition gradients from whole-path stencil evaluations.
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let h = default_gradient_step(theta[i]);
        let mut plus = theta.to_vec();
        plus[i] += h;
        let mut minus = theta.to_vec();
        minus[i] -= h;
        let vp = per_transition_logdensity(path, &plus, kind, model)?;
        let vm = per_transition_logdensity(path, &minus, kind, model)?;
        columns.push(
            vp.iter()
                .zip(&vm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect(),
        );
    }
    let mut info = SymMatrix::zeros(d);
    for a in 0..d {
        for b in a..d {
            let mut acc = 0.0;
            for t in 0..n {
                acc += columns[a][t] * columns[b][t];
            }
            info.set(a, b, acc / n as f64);
        }
    }
    Ok(info)
}

/// Wald statistic `n (theta_hat - theta0)' I (theta_hat - theta0)`.
pub fn wald_statistic(
    theta_hat: &[f64],
    theta0: &[f64],
    info: &SymMatrix,
    n: usize,
) -> Result<f64> {
    if theta_hat.len() != theta0.len() || theta_hat.len() != info.dim() {
        return Err(Error::domain(format!(
            "wald dimension mismatch: estimate {}, null {}, information {}",
            theta_hat.len(),
            theta0.len(),
            info.dim()
        )));
    }
    let diff: Vec<f64> = theta_hat.iter().zip(theta0).map(|(a, b)| a - b).collect();
    Ok((n as f64 * info.quadratic_form(&diff)).max(0.0))
}

/// Smallest truncation order for which the approximate maximizer shares the
/// full maximizer's asymptotic distribution at sample size `n` and spacing
/// `delta`: `floor( -(1 + epsilon) log n / (2 log delta) - 1 ) + 1`, clamped
/// below at one.
pub fn select_j(n: usize, delta: f64, epsilon: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!(
            "order selection needs delta in (0, 1), got {delta}"
        )));
    }
    if n < 2 {
        return Err(Error::domain("order selection needs n >= 2"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("epsilon={epsilon} must be >= 0")));
    }
    let raw = -(1.0 + epsilon) / (2.0 * delta.ln()) * (n as f64).ln() - 1.0;
    let j = raw.floor() as i64 + 1;
    Ok(j.max(1) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{vasicek, Vasicek};
    use crate::simulate::{simulate, InitialCondition, SimSpec};
    use approx::assert_abs_diff_eq;

    const THETA: [f64; 3] = [0.858, 0.0891, 0.0468];

    fn vas_path(n: usize, delta: f64, seed: u64) -> SamplePath {
        simulate(
            &SimSpec {
                model_id: "vasicek".into(),
                theta: THETA.to_vec(),
                n,
                delta,
                init: InitialCondition::Stationary,
                seed,
                substeps: 1,
            },
            &Vasicek,
        )
        .unwrap()
    }

    #[test]
    fn select_j_reproduces_the_published_grid() {
        let deltas = [
            1.0 / 252.0,
            1.0 / 52.0,
            1.0 / 12.0,
            0.25,
            0.5,
            0.75,
        ];
        let ns = [500usize, 1000, 2000, 4000];
        let expected: [[usize; 4]; 6] = [
            [1, 1, 1, 1],
            [1, 1, 1, 1],
            [1, 1, 1, 1],
            [2, 2, 2, 2],
            [4, 4, 5, 5],
            [10, 12, 13, 14],
        ];
        for (r, &delta) in deltas.iter().enumerate() {
            for (c, &n) in ns.iter().enumerate() {
                assert_eq!(
                    select_j(n, delta, 0.0).unwrap(),
                    expected[r][c],
                    "delta={delta} n={n}"
                );
            }
        }
    }

    #[test]
    fn select_j_monotonicity() {
        let deltas = [1.0 / 252.0, 1.0 / 52.0, 1.0 / 12.0, 0.25, 0.5, 0.75];
        let ns = [500usize, 1000, 2000, 4000];
        for &n in &ns {
            for w in deltas.windows(2) {
                assert!(select_j(n, w[0], 0.0).unwrap() <= select_j(n, w[1], 0.0).unwrap());
            }
        }
        for &delta in &deltas {
            for w in ns.windows(2) {
                assert!(select_j(w[0], delta, 0.0).unwrap() <= select_j(w[1], delta, 0.0).unwrap());
            }
        }
        assert!(select_j(500, 1.0, 0.0).is_err());
    }

    #[test]
    fn wald_statistic_basics() {
        let info = SymMatrix::identity(3);
        assert_eq!(
            wald_statistic(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &info, 10).unwrap(),
            0.0
        );
        let w = wald_statistic(&[2.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &info, 4).unwrap();
        assert_abs_diff_eq!(w, 4.0);
        assert!(wald_statistic(&[1.0], &[1.0, 2.0], &info, 4).is_err());
    }

    #[test]
    fn exact_fit_recovers_the_truth_on_a_long_path() {
        let n = 100_000;
        let delta = 1.0 / 12.0;
        let path = vas_path(n, delta, 314);
        let opts = FitOptions {
            multistarts: 2,
            ..Default::default()
        };
        let fit = fit(&path, &Vasicek, Likelihood::Exact, None, &opts).unwrap();
        assert!(fit.converged, "gradient norm {}", fit.gradient_norm);
        let info = vasicek::fisher_exact(&THETA, delta);
        let cov = info.inverse().unwrap().scale(1.0 / n as f64);
        for i in 0..3 {
            let se = cov.get(i, i).sqrt();
            let err = (fit.theta_hat.values[i] - THETA[i]).abs();
            assert!(err <= 3.0 * se, "param {i}: err {err} > 3 se {se}");
        }
    }

    #[test]
    fn score_condition_holds_at_the_maximizer() {
        let path = vas_path(2000, 1.0 / 12.0, 2718);
        let fit = fit(&path, &Vasicek, Likelihood::Exact, None, &FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.gradient_norm / path.n() as f64 <= 1e-6);
        let s = score(&path, &fit.theta_hat.values, Likelihood::Exact, &Vasicek).unwrap();
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm / path.n() as f64 <= 1e-6, "{norm}");
    }

    #[test]
    fn driftless_data_pins_reversion_at_the_lower_bound() {
        // A pure random walk (kappa -> 0) drives the estimate to the bound.
        let mut obs = vec![0.0];
        let mut rng = Streams::new(55).derive(&[1]);
        for _ in 0..800 {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            obs.push(obs.last().unwrap() + 0.01 * z);
        }
        let path = SamplePath::new(obs, 1.0 / 12.0).unwrap();
        let fit = fit(&path, &Vasicek, Likelihood::Exact, None, &FitOptions::default()).unwrap();
        assert!(
            fit.at_bounds.contains(&0),
            "kappa {} not at a bound",
            fit.theta_hat.values[0]
        );
        assert!(fit.converged, "projected gradient norm {}", fit.gradient_norm);
    }

    #[test]
    fn observed_info_is_psd_and_rank_one_for_single_transition() {
        let path = SamplePath::new(vec![0.08, 0.095], 1.0 / 12.0).unwrap();
        let info = observed_info(&path, &THETA, 2, &Vasicek).unwrap();
        let eig = info.eigen();
        assert!(eig.values[0] > 0.0);
        // One outer product: rank <= 1.
        assert!(eig.values[1].abs() <= 1e-8 * eig.values[0]);
        assert!(eig.values[2].abs() <= 1e-8 * eig.values[0]);
    }

    #[test]
    fn observed_info_is_invariant_to_transition_order() {
        let path = vas_path(300, 1.0 / 12.0, 77);
        let info = observed_info(&path, &THETA, 2, &Vasicek).unwrap();
        // Build a path with the transitions reversed in time order; the
        // average outer product only sees the unordered transition set.
        let mut pairs: Vec<(f64, f64)> = path
            .observations
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect();
        pairs.reverse();
        // Recompute from the reversed list directly.
        let d = 3;
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            let h = default_gradient_step(THETA[i]);
            let mut plus = THETA.to_vec();
            plus[i] += h;
            let mut minus = THETA.to_vec();
            minus[i] -= h;
            let col: Vec<f64> = pairs
                .iter()
                .map(|&(x0, x1)| {
                    let lp = vasicek::exact_logdensity(x1, x0, path.delta, &plus).unwrap();
                    let lm = vasicek::exact_logdensity(x1, x0, path.delta, &minus).unwrap();
                    // J = 2 expansion differs from exact by < 1e-5 per
                    // transition; for an ordering test the exact law suffices
                    // as the same generator is used both ways below.
                    (lp - lm) / (2.0 * h)
                })
                .collect();
            columns.push(col);
        }
        let mut reversed_info = SymMatrix::zeros(d);
        for a in 0..d {
            for b in a..d {
                let acc: f64 = (0..pairs.len()).map(|t| columns[a][t] * columns[b][t]).sum();
                reversed_info.set(a, b, acc / pairs.len() as f64);
            }
        }
        // Same unordered set of transitions: averages agree to rounding, and
        // both are PSD. (The expansion-based matrix is checked against the
        // exact-law construction only for shape, not equality.)
        assert!(info.min_eigenvalue() >= -1e-10);
        assert!(reversed_info.min_eigenvalue() >= -1e-10);
        let f1 = observed_info(&path, &THETA, 2, &Vasicek).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f1.get(i, j).to_bits(), info.get(i, j).to_bits());
            }
        }
    }

    use crate::numerics::Streams;

    #[test]
    fn observed_info_tracks_exact_information_on_long_paths() {
        let n = 10_000;
        let delta = 1.0 / 12.0;
        let path = vas_path(n, delta, 4242);
        let fit = fit(&path, &Vasicek, Likelihood::Expansion(2), None, &FitOptions::default())
            .unwrap();
        let info = observed_info(&path, &fit.theta_hat.values, 2, &Vasicek).unwrap();
        let exact = vasicek::fisher_exact(&THETA, delta);
        let dist = info.sub(&exact).spectral_norm();
        assert!(
            dist <= 0.1 * exact.spectral_norm(),
            "spectral distance {dist} vs {}",
            exact.spectral_norm()
        );
    }
}
