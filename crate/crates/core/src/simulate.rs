//! Path generation: exact transition samplers where the model provides them,
//! an Euler-Maruyama fallback, deterministic seeding, and CSV serialization.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{PathMeta, SamplePath};
use crate::model::DiffusionModel;
use crate::numerics::Streams;

/// Starting state of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    Fixed(f64),
    /// Draw `X_0` from the model's stationary law.
    Stationary,
}

/// Declarative description of one simulated path.
#[derive(Debug, Clone, Serialize)]
pub struct SimSpec {
    pub model_id: String,
    pub theta: Vec<f64>,
    /// Number of transitions; the path has `n + 1` observations.
    pub n: usize,
    pub delta: f64,
    pub init: InitialCondition,
    pub seed: u64,
    /// Euler substeps per observation interval (fallback sampler only).
    pub substeps: usize,
}

impl SimSpec {
    fn validate(&self, model: &dyn DiffusionModel) -> Result<()> {
        model.validate(&self.theta)?;
        if self.n < 1 {
            return Err(Error::domain("simulation needs n >= 1 transitions"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::domain(format!(
                "sampling interval delta={} must be > 0",
                self.delta
            )));
        }
        if self.substeps == 0 {
            return Err(Error::domain("substeps must be >= 1"));
        }
        self.n
            .checked_mul(self.substeps)
            .ok_or_else(|| Error::domain("n * substeps overflows"))?;
        if let InitialCondition::Fixed(x0) = self.init {
            if !model.in_domain(x0) {
                return Err(Error::domain(format!(
                    "initial state {x0} outside the state domain"
                )));
            }
        }
        Ok(())
    }

    fn initial(&self, model: &dyn DiffusionModel, rng: &mut ChaCha8Rng) -> Result<f64> {
        match self.init {
            InitialCondition::Fixed(x0) => Ok(x0),
            InitialCondition::Stationary => model
                .stationary_sample(rng, &self.theta)
                .ok_or_else(|| Error::unsupported(model, "a stationary sampler"))?,
        }
    }

    fn finish(&self, observations: Vec<f64>) -> Result<SamplePath> {
        let mut path = SamplePath::new(observations, self.delta)?;
        path.meta = PathMeta {
            model_id: Some(self.model_id.clone()),
            seed: Some(self.seed),
            theta_true: Some(self.theta.clone()),
        };
        Ok(path)
    }
}

/// Simulates with the spec's own seed. Identical specs produce bitwise
/// identical paths regardless of thread count or call order.
pub fn simulate(spec: &SimSpec, model: &dyn DiffusionModel) -> Result<SamplePath> {
    let mut rng = Streams::new(spec.seed).derive(&[]);
    simulate_exact(spec, model, &mut rng)
}

/// Iterates the model's exact transition sampler.
pub fn simulate_exact(
    spec: &SimSpec,
    model: &dyn DiffusionModel,
    rng: &mut ChaCha8Rng,
) -> Result<SamplePath> {
    spec.validate(model)?;
    let mut observations = Vec::with_capacity(spec.n + 1);
    let mut x = spec.initial(model, rng)?;
    observations.push(x);
    for _ in 0..spec.n {
        x = model
            .exact_step(rng, x, spec.delta, &spec.theta)
            .ok_or_else(|| Error::unsupported(model, "an exact transition sampler"))??;
        observations.push(x);
    }
    spec.finish(observations)
}

/// Euler-Maruyama fallback with `spec.substeps` steps per observation
/// interval. States that cross a finite domain edge are reflected at a floor
/// just inside it (a documented bias source; the exact samplers never need
/// this).
pub fn simulate_euler(
    spec: &SimSpec,
    model: &dyn DiffusionModel,
    rng: &mut ChaCha8Rng,
) -> Result<SamplePath> {
    spec.validate(model)?;
    let h = spec.delta / spec.substeps as f64;
    let sqrt_h = h.sqrt();
    let (dom_lo, dom_hi) = model.state_domain();
    let mut observations = Vec::with_capacity(spec.n + 1);
    let mut x = spec.initial(model, rng)?;
    observations.push(x);
    for step in 0..spec.n {
        for sub in 0..spec.substeps {
            let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
            x += model.drift(x, &spec.theta) * h + model.diffusion(x, &spec.theta) * sqrt_h * z;
            if dom_lo.is_finite() {
                let floor = dom_lo + 1e-12;
                if x < floor {
                    x = floor + (floor - x);
                }
            }
            if dom_hi.is_finite() {
                let ceil = dom_hi - 1e-12;
                if x > ceil {
                    x = ceil - (x - ceil);
                }
            }
            if x.abs() > 1e12 {
                return Err(Error::NonFinite(format!(
                    "euler path exploded to {x} at step {step}.{sub}"
                )));
            }
        }
        observations.push(x);
    }
    spec.finish(observations)
}

/// Sidecar metadata stored next to a path CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathMetaFile {
    pub model: String,
    pub theta: Vec<f64>,
    pub delta: f64,
    pub seed: u64,
    pub n: usize,
}

fn sidecar_path(file: &Path) -> std::path::PathBuf {
    let mut name = file.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    file.with_file_name(name)
}

/// Writes `t,x` rows (t is the observation index) plus a JSON sidecar with
/// the model, parameters, spacing and seed.
pub fn write_path_csv(path: &SamplePath, file: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(file)?);
    writeln!(out, "t,x")?;
    for (t, x) in path.observations.iter().enumerate() {
        writeln!(out, "{t},{x}")?;
    }
    out.flush()?;
    let meta = PathMetaFile {
        model: path.meta.model_id.clone().unwrap_or_default(),
        theta: path.meta.theta_true.clone().unwrap_or_default(),
        delta: path.delta,
        seed: path.meta.seed.unwrap_or_default(),
        n: path.n(),
    };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Config(format!("metadata serialization: {e}")))?;
    std::fs::write(sidecar_path(file), json)?;
    Ok(())
}

/// Reads a `t,x` CSV; the spacing comes from the sidecar unless overridden.
pub fn read_path_csv(file: &Path, delta_override: Option<f64>) -> Result<SamplePath> {
    let reader = std::io::BufReader::new(std::fs::File::open(file)?);
    let mut observations = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if idx == 0 {
            if trimmed != "t,x" {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header 't,x', found '{trimmed}'"),
                });
            }
            continue;
        }
        let mut fields = trimmed.split(',');
        let t_field = fields.next().unwrap_or_default();
        let x_field = fields.next().ok_or_else(|| Error::Parse {
            line: lineno,
            message: "missing x column".into(),
        })?;
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: lineno,
                message: "too many columns".into(),
            });
        }
        let t: usize = t_field.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid index '{t_field}'"),
        })?;
        if t != observations.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("index {t} out of order (expected {})", observations.len()),
            });
        }
        let x: f64 = x_field.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid value '{x_field}'"),
        })?;
        observations.push(x);
    }
    let sidecar = sidecar_path(file);
    let meta: Option<PathMetaFile> = if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)?;
        Some(
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("metadata parse ({}): {e}", sidecar.display())))?,
        )
    } else {
        None
    };
    let delta = delta_override
        .or_else(|| meta.as_ref().map(|m| m.delta))
        .ok_or_else(|| {
            Error::Config("no sampling interval: provide a sidecar metadata file or delta".into())
        })?;
    let mut path = SamplePath::new(observations, delta)?;
    if let Some(m) = meta {
        path.meta = PathMeta {
            model_id: Some(m.model),
            seed: Some(m.seed),
            theta_true: Some(m.theta),
        };
    }
    Ok(path)
}
