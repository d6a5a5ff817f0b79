use crate::prelude::*;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::coefficients::{FamilyTag, SdeCoefficients};
use crate::error::{ensure, Result};
use crate::grid::MAX_DIM;

pub const MAX_DT: f64 = 1e-2;
pub const MAX_PATHS: usize = 1_000_000;
/// Largest number of stored state entries in a [`PathEnsemble`].
pub const MAX_STORED_ENTRIES: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimulationConfig {
    pub x0: [f64; MAX_DIM],
    /// Start time.
    pub s: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dt > 0.0 && self.dt <= MAX_DT, || {
            format!("dt must lie in (0, {MAX_DT}] (got {})", self.dt)
        })?;
        ensure(
            self.s.is_finite() && self.t_final > self.s && self.t_final.is_finite(),
            || {
                format!(
                    "need a finite horizon with T > s (got s = {}, T = {})",
                    self.s, self.t_final
                )
            },
        )?;
        ensure((1..=MAX_PATHS).contains(&self.n_paths), || {
            format!("n_paths must lie in 1..={MAX_PATHS} (got {})", self.n_paths)
        })?;
        ensure(self.x0.iter().all(|v| v.is_finite()), || {
            "starting point must be finite".into()
        })?;
        let steps = (self.t_final - self.s) / self.dt;
        ensure(
            (steps - steps.round()).abs() <= 1e-9 * steps.max(1.0),
            || {
                format!(
                    "T - s = {} is not a whole number of steps dt = {}",
                    self.t_final - self.s,
                    self.dt
                )
            },
        )
    }

    pub fn steps(&self) -> usize {
        ((self.t_final - self.s) / self.dt).round() as usize
    }
}

/// Noise stream of one path: the master seed selects the key, the path index the
/// stream, so any subset of paths can be regenerated independently.
pub fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathStatus {
    /// First step whose update was not finite; the state is held from there on.
    pub frozen_at: Option<usize>,
    /// Evaluations that hit the raw-field floor.
    pub floored: u64,
}

/// Euler-Maruyama path `X_{k+1} = X_k + b dt + sqrt(2) sigma xi_k sqrt(dt)` from
/// `x0`, written into `states` as `(steps + 1) * d` values.
pub fn simulate_path(
    coeffs: &SdeCoefficients,
    cfg: &SimulationConfig,
    x0: &[f64; MAX_DIM],
    path: usize,
    states: &mut Vec<f64>,
) -> PathStatus {
    let d = coeffs.d;
    let steps = cfg.steps();
    states.clear();
    states.reserve((steps + 1) * d);
    states.extend_from_slice(&x0[..d]);
    let mut rng = path_rng(cfg.seed, path);
    let noise_scale = (2.0 * cfg.dt).sqrt();
    let mut x = [0.0; MAX_DIM];
    x[..d].copy_from_slice(&x0[..d]);
    let mut status = PathStatus::default();
    for k in 0..steps {
        let mut xi = [0.0; MAX_DIM];
        for v in xi.iter_mut().take(d) {
            *v = StandardNormal.sample(&mut rng);
        }
        if status.frozen_at.is_none() {
            let t = cfg.s + k as f64 * cfg.dt;
            status.floored += coeffs.floored(&x) as u64;
            let b = coeffs.drift(t, &x);
            let g = coeffs.apply_sigma(&x, &xi);
            let mut next = x;
            for i in 0..d {
                next[i] = x[i] + b[i] * cfg.dt + noise_scale * g[i];
            }
            if next[..d].iter().all(|v| v.is_finite()) {
                x = next;
            } else {
                status.frozen_at = Some(k);
            }
        }
        states.extend_from_slice(&x[..d]);
    }
    status
}

/// Output of one per-path job.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathRecord {
    pub values: Vec<f64>,
    pub frozen: bool,
    pub floored: u64,
}

/// Maps a per-path job over path indices, returning records in index order.
pub trait PathRunner {
    fn map_paths(
        &self,
        n_paths: usize,
        job: &(dyn Fn(usize) -> PathRecord + Sync),
    ) -> Vec<PathRecord>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SerialRunner;

impl PathRunner for SerialRunner {
    fn map_paths(
        &self,
        n_paths: usize,
        job: &(dyn Fn(usize) -> PathRecord + Sync),
    ) -> Vec<PathRecord> {
        (0..n_paths).map(job).collect()
    }
}

/// Stored paths, `paths[(i * (nt + 1) + k) * d + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub tag: FamilyTag,
    pub d: usize,
    pub nt: usize,
    pub t0: f64,
    pub dt: f64,
    pub seed: u64,
    pub paths: Vec<f64>,
    pub status: Vec<PathStatus>,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.status.len()
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let len = (self.nt + 1) * self.d;
        &self.paths[i * len..(i + 1) * len]
    }

    pub fn frozen_count(&self) -> usize {
        self.status.iter().filter(|s| s.frozen_at.is_some()).count()
    }

    pub fn floored_count(&self) -> u64 {
        self.status.iter().map(|s| s.floored).sum()
    }
}

pub fn euler_maruyama(coeffs: &SdeCoefficients, cfg: &SimulationConfig) -> Result<PathEnsemble> {
    cfg.validate()?;
    let len = (cfg.steps() + 1) * coeffs.d;
    ensure(
        len.saturating_mul(cfg.n_paths) <= MAX_STORED_ENTRIES,
        || {
            format!("{} paths of {len} entries exceed the stored-ensemble limit; use streamed statistics", cfg.n_paths)
        },
    )?;
    let mut paths = Vec::with_capacity(len * cfg.n_paths);
    let mut status = Vec::with_capacity(cfg.n_paths);
    let mut buf = Vec::new();
    for i in 0..cfg.n_paths {
        status.push(simulate_path(coeffs, cfg, &cfg.x0, i, &mut buf));
        paths.extend_from_slice(&buf);
    }
    Ok(PathEnsemble {
        tag: coeffs.tag,
        d: coeffs.d,
        nt: cfg.steps(),
        t0: cfg.s,
        dt: cfg.dt,
        seed: cfg.seed,
        paths,
        status,
    })
}
