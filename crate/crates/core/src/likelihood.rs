//! Log-likelihood surfaces (exact and approximate), score vectors and the
//! truncation diagnostics built from them.
//!
//! Per-transition sums are chunked into fixed-size blocks that are summed
//! sequentially and folded in order, so results are bitwise identical for any
//! worker count.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::{Expansion, ExpansionOptions};
use crate::model::DiffusionModel;
use crate::numerics::fd;
use crate::numerics::sym::SymMatrix;

/// Ordered observations `X_0 .. X_n` at fixed spacing `delta`.
#[derive(Debug, Clone, Serialize)]
pub struct SamplePath {
    pub observations: Vec<f64>,
    pub delta: f64,
    pub meta: PathMeta,
}

/// Provenance of a simulated or loaded path.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PathMeta {
    pub model_id: Option<String>,
    pub seed: Option<u64>,
    pub theta_true: Option<Vec<f64>>,
}

impl SamplePath {
    pub fn new(observations: Vec<f64>, delta: f64) -> Result<Self> {
        if observations.len() < 2 {
            return Err(Error::domain(format!(
                "a sample path needs at least 2 observations, got {}",
                observations.len()
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("sampling interval delta={delta} must be > 0")));
        }
        if let Some(bad) = observations.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite observation {bad}")));
        }
        Ok(SamplePath {
            observations,
            delta,
            meta: PathMeta::default(),
        })
    }

    /// Number of transitions.
    pub fn n(&self) -> usize {
        self.observations.len() - 1
    }

    pub fn check_domain(&self, model: &dyn DiffusionModel) -> Result<()> {
        if let Some(bad) = self
            .observations
            .iter()
            .find(|&&x| !model.in_domain(x))
        {
            return Err(Error::domain(format!(
                "observation {bad} outside the state domain of '{}'",
                model.id()
            )));
        }
        Ok(())
    }

    /// Reference point for the unit-diffusion transform: the stationary mean
    /// when the model knows it, else the sample median.
    pub fn transform_reference(&self, model: &dyn DiffusionModel, theta: &[f64]) -> f64 {
        model.stationary_mean(theta).unwrap_or_else(|| {
            let mut sorted = self.observations.clone();
            sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            sorted[sorted.len() / 2]
        })
    }
}

/// Which likelihood surface to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Likelihood {
    Exact,
    /// The expansion-based approximation truncated after `J` terms.
    Expansion(usize),
}

const BLOCK: usize = 1024;

/// Sums `f(block)` over fixed-size transition blocks, in parallel but folded
/// in block order. `None` from a block short-circuits to `None` (used for the
/// minus-infinity truncation-breakdown policy).
fn blocked_sum<F>(n: usize, f: F) -> Result<Option<f64>>
where
    F: Fn(std::ops::Range<usize>) -> Result<Option<f64>> + Sync,
{
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(n))
        .collect();
    let partials: Result<Vec<Option<f64>>> = if n >= 4 * BLOCK {
        ranges.into_par_iter().map(f).collect()
    } else {
        ranges.into_iter().map(f).collect()
    };
    let mut total = 0.0;
    for p in partials? {
        match p {
            Some(v) => total += v,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

/// Approximate log-likelihood `sum_t log f^(J)(X_t | X_{t-1})`.
///
/// Returns negative infinity when the truncated coefficient sum breaks down
/// at any transition, so optimizers retreat instead of erroring.
pub fn approx_loglik(
    path: &SamplePath,
    theta: &[f64],
    j: usize,
    model: &dyn DiffusionModel,
) -> Result<f64> {
    path.check_domain(model)?;
    let x_ref = path.transform_reference(model, theta);
    let obs = &path.observations;
    let delta = path.delta;
    let sum = blocked_sum(path.n(), |range| {
        let mut engine =
            Expansion::with_x_ref(model, theta, x_ref, ExpansionOptions::default())?;
        let mut acc = 0.0;
        for t in range {
            match engine.log_density(obs[t + 1], obs[t], delta, j) {
                Ok(v) => acc += v,
                Err(Error::TruncationBreakdown { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(acc))
    })?;
    Ok(sum.unwrap_or(f64::NEG_INFINITY))
}

/// Exact log-likelihood; requires the model's exact transition law.
pub fn exact_loglik(path: &SamplePath, theta: &[f64], model: &dyn DiffusionModel) -> Result<f64> {
    path.check_domain(model)?;
    let obs = &path.observations;
    let delta = path.delta;
    let sum = blocked_sum(path.n(), |range| {
        let mut acc = 0.0;
        for t in range {
            let v = model
                .exact_transition_logdensity(obs[t + 1], obs[t], delta, theta)
                .ok_or_else(|| Error::unsupported(model, "an exact transition density"))??;
            acc += v;
        }
        Ok(Some(acc))
    })?;
    Ok(sum.unwrap_or(f64::NEG_INFINITY))
}

pub fn loglik(
    path: &SamplePath,
    theta: &[f64],
    kind: Likelihood,
    model: &dyn DiffusionModel,
) -> Result<f64> {
    match kind {
        Likelihood::Exact => exact_loglik(path, theta, model),
        Likelihood::Expansion(j) => approx_loglik(path, theta, j, model),
    }
}

/// Per-transition log-densities at one parameter point (used by the observed
/// information and its score outer products).
pub fn per_transition_logdensity(
    path: &SamplePath,
    theta: &[f64],
    kind: Likelihood,
    model: &dyn DiffusionModel,
) -> Result<Vec<f64>> {
    path.check_domain(model)?;
    let obs = &path.observations;
    let delta = path.delta;
    match kind {
        Likelihood::Exact => obs
            .windows(2)
            .map(|w| {
                model
                    .exact_transition_logdensity(w[1], w[0], delta, theta)
                    .ok_or_else(|| Error::unsupported(model, "an exact transition density"))?
            })
            .collect(),
        Likelihood::Expansion(j) => {
            let x_ref = path.transform_reference(model, theta);
            let mut engine =
                Expansion::with_x_ref(model, theta, x_ref, ExpansionOptions::default())?;
            obs.windows(2)
                .map(|w| engine.log_density(w[1], w[0], delta, j))
                .collect()
        }
    }
}

/// A log-likelihood evaluation memoized on the exact bit pattern of theta;
/// central-difference stencils revisit points, scores and Hessians share them.
pub struct CachedLoglik<'a> {
    path: &'a SamplePath,
    kind: Likelihood,
    model: &'a dyn DiffusionModel,
    memo: HashMap<Vec<u64>, f64>,
    pub evaluations: usize,
}

impl<'a> CachedLoglik<'a> {
    pub fn new(path: &'a SamplePath, kind: Likelihood, model: &'a dyn DiffusionModel) -> Self {
        CachedLoglik {
            path,
            kind,
            model,
            memo: HashMap::new(),
            evaluations: 0,
        }
    }

    pub fn value(&mut self, theta: &[f64]) -> Result<f64> {
        let key: Vec<u64> = theta.iter().map(|v| v.to_bits()).collect();
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.evaluations += 1;
        let v = loglik(self.path, theta, self.kind, self.model)?;
        self.memo.insert(key, v);
        Ok(v)
    }
}

/// Score vector: the central-difference gradient of the chosen log-likelihood.
pub fn score(
    path: &SamplePath,
    theta: &[f64],
    kind: Likelihood,
    model: &dyn DiffusionModel,
) -> Result<Vec<f64>> {
    let mut cached = CachedLoglik::new(path, kind, model);
    let mut failure: Option<Error> = None;
    let grad = fd::gradient(
        |t| match cached.value(t) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        theta,
        None,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    grad.map_err(|e| match e {
        Error::NonFinite(msg) => Error::NonFinite(format!(
            "{msg}; the log-likelihood is unbounded near this point — shrink the parameter bounds"
        )),
        other => other,
    })
}

/// Truncation diagnostics at a parameter point.
///
/// `n_matrix` is the mean Hessian of the `J`-term log-density over the path;
/// `u_vector` and `f_matrix` are the mean gradient and Hessian of the
/// difference between the order-`j_star` and order-`j` coefficient
/// corrections, measuring what the truncation discards.
#[derive(Debug, Clone)]
pub struct DiagnosticSet {
    pub n_matrix: SymMatrix,
    pub u_vector: Vec<f64>,
    pub f_matrix: SymMatrix,
    pub j: usize,
    pub j_star: usize,
    pub delta: f64,
    pub theta: Vec<f64>,
}

/// Mean of `A3(j_star) - A3(j)` over the path's transitions.
fn a3_gap_mean(
    path: &SamplePath,
    theta: &[f64],
    j: usize,
    j_star: usize,
    model: &dyn DiffusionModel,
) -> Result<f64> {
    let x_ref = path.transform_reference(model, theta);
    let obs = &path.observations;
    let delta = path.delta;
    let sum = blocked_sum(path.n(), |range| {
        let mut engine =
            Expansion::with_x_ref(model, theta, x_ref, ExpansionOptions::default())?;
        let mut acc = 0.0;
        for t in range {
            let (a3, a3_star) = engine.a3_pair(obs[t + 1], obs[t], delta, j, j_star)?;
            acc += a3_star - a3;
        }
        Ok(Some(acc))
    })?;
    Ok(sum.expect("a3_pair errors on breakdown") / path.n() as f64)
}

/// Computes the diagnostic averages at `theta`. With `j == j_star` the
/// truncation-gap terms are exactly zero by construction and no evaluation
/// is performed for them.
pub fn diagnostics(
    path: &SamplePath,
    theta: &[f64],
    j: usize,
    j_star: usize,
    model: &dyn DiffusionModel,
) -> Result<DiagnosticSet> {
    if j > j_star || j_star > crate::expansion::MAX_ORDER {
        return Err(Error::domain(format!(
            "diagnostic orders must satisfy j <= j_star <= {}, got ({j}, {j_star})",
            crate::expansion::MAX_ORDER
        )));
    }
    let d = theta.len();
    let n = path.n() as f64;

    let mut cached = CachedLoglik::new(path, Likelihood::Expansion(j), model);
    let mut failure: Option<Error> = None;
    let n_matrix = fd::hessian(
        |t| match cached.value(t) {
            Ok(v) => v / n,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        theta,
        None,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let n_matrix = n_matrix?;

    let (u_vector, f_matrix) = if j == j_star {
        (vec![0.0; d], SymMatrix::zeros(d))
    } else {
        let mut memo: HashMap<Vec<u64>, f64> = HashMap::new();
        let mut failure: Option<Error> = None;
        let mut gap = |t: &[f64]| -> f64 {
            let key: Vec<u64> = t.iter().map(|v| v.to_bits()).collect();
            if let Some(&v) = memo.get(&key) {
                return v;
            }
            match a3_gap_mean(path, t, j, j_star, model) {
                Ok(v) => {
                    memo.insert(key, v);
                    v
                }
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        };
        let u = fd::gradient(&mut gap, theta, None);
        let f = fd::hessian(&mut gap, theta, None);
        if let Some(e) = failure {
            return Err(e);
        }
        (u?, f?)
    };

    Ok(DiagnosticSet {
        n_matrix,
        u_vector,
        f_matrix,
        j,
        j_star,
        delta: path.delta,
        theta: theta.to_vec(),
    })
}
