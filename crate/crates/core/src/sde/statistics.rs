use crate::prelude::*;

use super::coefficients::SdeCoefficients;
use super::simulate::{simulate_path, PathEnsemble, PathRecord, PathRunner, SimulationConfig};
use crate::error::{ensure, Error, Result};
use crate::grid::{GridFunction, MAX_DIM};
use crate::stats::{linear_fit, log_log_slope, mean_stderr};

/// One sampled path, `states[k * d + j]` at time `t0 + k dt`.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub d: usize,
    pub t0: f64,
    pub dt: f64,
    pub states: &'a [f64],
}

impl PathView<'_> {
    pub fn nt(&self) -> usize {
        self.states.len() / self.d - 1
    }

    pub fn state(&self, k: usize) -> [f64; MAX_DIM] {
        let mut x = [0.0; MAX_DIM];
        x[..self.d].copy_from_slice(&self.states[k * self.d..(k + 1) * self.d]);
        x
    }
}

/// Function integrated along paths.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    Constant(f64),
    /// `1` on `[t_lo, t_hi] x closed ball`, `0` elsewhere.
    CylinderIndicator {
        t_lo: f64,
        t_hi: f64,
        centre: [f64; MAX_DIM],
        radius: f64,
    },
    /// Nearest-sample lookup, zero outside the grid.
    Grid(GridFunction),
}

impl Integrand {
    pub fn eval(&self, d: usize, t: f64, x: &[f64; MAX_DIM]) -> f64 {
        match self {
            Integrand::Constant(c) => *c,
            Integrand::CylinderIndicator {
                t_lo,
                t_hi,
                centre,
                radius,
            } => {
                let r2: f64 = (0..d).map(|i| (x[i] - centre[i]).powi(2)).sum();
                if t >= *t_lo && t <= *t_hi && r2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::Grid(g) => g.eval_nearest(t, &x[..d]),
        }
    }
}

/// Scalar functionals of a single path.
pub trait PathStatistic: Sync {
    fn width(&self) -> usize;
    fn evaluate(&self, path: &PathView, out: &mut Vec<f64>);
}

/// Left-point quadrature of `int_{t0}^{t1} f(t, X_t) dt`, one value per `t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovIntegral {
    pub integrand: Integrand,
    pub t0: f64,
    /// Increasing end times.
    pub t1s: Vec<f64>,
}

impl PathStatistic for KrylovIntegral {
    fn width(&self) -> usize {
        self.t1s.len()
    }

    fn evaluate(&self, path: &PathView, out: &mut Vec<f64>) {
        let tol = 1e-9 * path.dt;
        let mut sum = 0.0;
        let mut k = 0;
        for &t1 in &self.t1s {
            while k < path.nt() {
                let t = path.t0 + k as f64 * path.dt;
                if t >= t1 - tol {
                    break;
                }
                if t >= self.t0 - tol {
                    sum += self.integrand.eval(path.d, t, &path.state(k));
                }
                k += 1;
            }
            out.push(sum * path.dt);
        }
    }
}

/// `sup_t sup_{s <= delta} |X_{t+s} - X_t|^{1/2}` for each `delta = steps * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusSup {
    /// Increasing window lengths in steps.
    pub delta_steps: Vec<usize>,
}

impl PathStatistic for ModulusSup {
    fn width(&self) -> usize {
        self.delta_steps.len()
    }

    fn evaluate(&self, path: &PathView, out: &mut Vec<f64>) {
        let (d, nt) = (path.d, path.nt());
        let jmax = self.delta_steps.last().copied().unwrap_or(0).min(nt);
        // Largest squared increment over lags 1..=j, filled lag by lag.
        let mut best = vec![0.0f64; jmax + 1];
        let s = path.states;
        for j in 1..=jmax {
            let mut m = 0.0f64;
            for k in 0..=nt - j {
                let (a, b) = (&s[k * d..(k + 1) * d], &s[(k + j) * d..(k + j + 1) * d]);
                let mut r2 = 0.0;
                for i in 0..d {
                    let e = b[i] - a[i];
                    r2 += e * e;
                }
                m = m.max(r2);
            }
            best[j] = best[j - 1].max(m);
        }
        for &j in &self.delta_steps {
            out.push(best[j.min(jmax)].sqrt().sqrt());
        }
    }
}

/// `sup_k |X_k|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupNorm;

impl PathStatistic for SupNorm {
    fn width(&self) -> usize {
        1
    }

    fn evaluate(&self, path: &PathView, out: &mut Vec<f64>) {
        let m = path
            .states
            .chunks(path.d)
            .map(|x| x.iter().map(|v| v * v).sum::<f64>())
            .fold(0.0, f64::max);
        out.push(m.sqrt());
    }
}

/// Coordinates of the final state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminalState;

impl PathStatistic for TerminalState {
    fn width(&self) -> usize {
        usize::MAX
    }

    fn evaluate(&self, path: &PathView, out: &mut Vec<f64>) {
        out.extend_from_slice(&path.states[path.states.len() - path.d..]);
    }
}

/// `|X_T - X_0|²`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TerminalDisplacementSq;

impl PathStatistic for TerminalDisplacementSq {
    fn width(&self) -> usize {
        1
    }

    fn evaluate(&self, path: &PathView, out: &mut Vec<f64>) {
        let (first, last) = (path.state(0), path.state(path.nt()));
        out.push((0..path.d).map(|i| (last[i] - first[i]).powi(2)).sum());
    }
}

fn width_of(stat: &dyn PathStatistic, d: usize) -> usize {
    match stat.width() {
        usize::MAX => d,
        w => w,
    }
}

/// Per-path statistic values, `values[path * stride + offset]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatTable {
    pub offsets: Vec<usize>,
    pub stride: usize,
    pub values: Vec<f64>,
    pub frozen: Vec<bool>,
    pub floored: u64,
}

impl StatTable {
    fn from_records(records: Vec<PathRecord>, offsets: Vec<usize>, stride: usize) -> Self {
        let mut values = Vec::with_capacity(records.len() * stride);
        let mut frozen = Vec::with_capacity(records.len());
        let mut floored = 0;
        for r in records {
            values.extend_from_slice(&r.values);
            frozen.push(r.frozen);
            floored += r.floored;
        }
        StatTable {
            offsets,
            stride,
            values,
            frozen,
            floored,
        }
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|f| **f).count()
    }

    /// Column `j` of statistic `stat` over the paths that were not frozen.
    pub fn column(&self, stat: usize, j: usize) -> Vec<f64> {
        let c = self.offsets[stat] + j;
        self.frozen
            .iter()
            .enumerate()
            .filter(|(_, f)| !**f)
            .map(|(i, _)| self.values[i * self.stride + c])
            .collect()
    }

    pub fn estimate(&self, stat: usize, j: usize) -> Result<Estimate> {
        Estimate::from_samples(&self.column(stat, j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        ensure(!xs.is_empty(), || "no unfrozen paths to average".into())?;
        let (mean, stderr) = mean_stderr(xs);
        Ok(Estimate {
            mean,
            stderr,
            n: xs.len(),
        })
    }
}

/// Anything that can produce per-path statistics.
pub trait PathSource {
    fn d(&self) -> usize;
    fn dt(&self) -> f64;
    fn table(&self, stats: &[&dyn PathStatistic]) -> Result<StatTable>;
}

fn layout(stats: &[&dyn PathStatistic], d: usize) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(stats.len());
    let mut stride = 0;
    for s in stats {
        offsets.push(stride);
        stride += width_of(*s, d);
    }
    (offsets, stride)
}

fn evaluate_all(stats: &[&dyn PathStatistic], view: &PathView, stride: usize) -> Vec<f64> {
    let mut values = Vec::with_capacity(stride);
    for s in stats {
        s.evaluate(view, &mut values);
    }
    values
}

impl PathSource for PathEnsemble {
    fn d(&self) -> usize {
        self.d
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn table(&self, stats: &[&dyn PathStatistic]) -> Result<StatTable> {
        let (offsets, stride) = layout(stats, self.d);
        let records = (0..self.n_paths())
            .map(|i| {
                let view = PathView {
                    d: self.d,
                    t0: self.t0,
                    dt: self.dt,
                    states: self.path(i),
                };
                PathRecord {
                    values: evaluate_all(stats, &view, stride),
                    frozen: self.status[i].frozen_at.is_some(),
                    floored: self.status[i].floored,
                }
            })
            .collect();
        Ok(StatTable::from_records(records, offsets, stride))
    }
}

/// Paths simulated on demand and dropped after their statistics are taken.
pub struct Streamed<'a> {
    pub coeffs: &'a SdeCoefficients,
    pub cfg: SimulationConfig,
    pub runner: &'a (dyn PathRunner + Sync),
}

impl PathSource for Streamed<'_> {
    fn d(&self) -> usize {
        self.coeffs.d
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn table(&self, stats: &[&dyn PathStatistic]) -> Result<StatTable> {
        self.cfg.validate()?;
        let d = self.coeffs.d;
        let (offsets, stride) = layout(stats, d);
        let job = |i: usize| {
            let mut states = Vec::new();
            let status = simulate_path(self.coeffs, &self.cfg, &self.cfg.x0, i, &mut states);
            let view = PathView {
                d,
                t0: self.cfg.s,
                dt: self.cfg.dt,
                states: &states,
            };
            PathRecord {
                values: evaluate_all(stats, &view, stride),
                frozen: status.frozen_at.is_some(),
                floored: status.floored,
            }
        };
        Ok(StatTable::from_records(
            self.runner.map_paths(self.cfg.n_paths, &job),
            offsets,
            stride,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KrylovReport {
    pub t0: f64,
    pub t1s: Vec<f64>,
    pub estimates: Vec<Estimate>,
    /// Log-log slope of the estimate against `t1 - t0`.
    pub theta_fit: Option<f64>,
    /// Norm of the integrand supplied by the caller.
    pub f_norm: Option<f64>,
    /// `estimate / ((t1 - t0)^theta_fit |||f|||)`.
    pub ratios: Vec<f64>,
    pub frozen: usize,
}

/// Path average of `int_{t0}^{t1} f(t, X_t) dt` for each `t1`; a sweep of at least
/// two end times also fits the exponent of `t1 - t0`.
pub fn krylov_functional(
    source: &dyn PathSource,
    f: &Integrand,
    t0: f64,
    t1s: &[f64],
    f_norm: Option<f64>,
) -> Result<KrylovReport> {
    ensure(!t1s.is_empty(), || "need at least one end time".into())?;
    ensure(
        t1s.iter().all(|&t| t > t0) && t1s.windows(2).all(|w| w[0] < w[1]),
        || "end times must increase and exceed t0".into(),
    )?;
    let stat = KrylovIntegral {
        integrand: f.clone(),
        t0,
        t1s: t1s.to_vec(),
    };
    let table = source.table(&[&stat])?;
    let estimates = (0..t1s.len())
        .map(|j| table.estimate(0, j))
        .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = t1s.iter().map(|t| t - t0).collect();
    let means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let theta_fit =
        (t1s.len() >= 2 && means.iter().all(|m| *m > 0.0)).then(|| log_log_slope(&gaps, &means));
    let ratios = match (theta_fit, f_norm) {
        (Some(theta), Some(norm)) => gaps
            .iter()
            .zip(&means)
            .map(|(g, m)| m / (g.powf(theta) * norm))
            .collect(),
        _ => Vec::new(),
    };
    Ok(KrylovReport {
        t0,
        t1s: t1s.to_vec(),
        estimates,
        theta_fit,
        f_norm,
        ratios,
        frozen: table.frozen_count(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModulusReport {
    pub deltas: Vec<f64>,
    pub moments: Vec<Estimate>,
    pub slope: f64,
    pub intercept: f64,
    pub frozen: usize,
}

/// Smallest ratio between the largest and smallest window.
pub const MIN_DELTA_SPAN: f64 = 31.622776601683793;

/// `E sup_t sup_{s <= delta} |X_{t+s} - X_t|^{1/2}` per window and the least-squares
/// fit of its logarithm against `log delta`.
pub fn modulus_report(source: &dyn PathSource, delta_steps: &[usize]) -> Result<ModulusReport> {
    ensure(delta_steps.len() >= 3, || {
        format!("need at least 3 windows to fit (got {})", delta_steps.len())
    })?;
    ensure(
        delta_steps[0] >= 1 && delta_steps.windows(2).all(|w| w[0] < w[1]),
        || "windows must be increasing positive step counts".into(),
    )?;
    let span = *delta_steps.last().unwrap() as f64 / delta_steps[0] as f64;
    ensure(span >= MIN_DELTA_SPAN * (1.0 - 1e-12), || {
        format!("windows must span at least 1.5 decades (got a ratio of {span})")
    })?;
    let stat = ModulusSup {
        delta_steps: delta_steps.to_vec(),
    };
    let table = source.table(&[&stat])?;
    let moments = (0..delta_steps.len())
        .map(|j| table.estimate(0, j))
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<f64> = delta_steps
        .iter()
        .map(|&j| j as f64 * source.dt())
        .collect();
    ensure(moments.iter().all(|m| m.mean > 0.0), || {
        "modulus vanishes; the log-log fit is undefined".into()
    })?;
    let lx: Vec<f64> = deltas.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = moments.iter().map(|m| m.mean.ln()).collect();
    let fit = linear_fit(&lx, &ly);
    Ok(ModulusReport {
        deltas,
        moments,
        slope: fit.slope,
        intercept: fit.intercept,
        frozen: table.frozen_count(),
    })
}

/// `E sup_{t <= T} |X_t|`.
pub fn sup_moment(source: &dyn PathSource) -> Result<Estimate> {
    source.table(&[&SupNorm])?.estimate(0, 0)
}

/// `E |X_T - X_0|²`.
pub fn terminal_second_moment(source: &dyn PathSource) -> Result<Estimate> {
    source.table(&[&TerminalDisplacementSq])?.estimate(0, 0)
}

/// Wasserstein-1 distance between two empirical measures on the line.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    ensure(!a.is_empty() && !b.is_empty(), || {
        "empirical measures must be nonempty".into()
    })?;
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::numerical(
            "non-finite sample in distance computation",
        ));
    }
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() == b.len() {
        return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64);
    }
    // Integrate |F_a - F_b| over the merged sample points.
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut last = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - last);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        last = next;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, SpaceGrid, TimeGrid};
    use crate::pde::Drift;
    use crate::sde::coefficients::{build_coefficients, FamilySpec};
    use crate::sde::simulate::{euler_maruyama, SerialRunner};

    fn brownian_cfg(d: usize, n_paths: usize, dt: f64) -> (SdeCoefficients, SimulationConfig) {
        let c = build_coefficients(&FamilySpec::brownian(d)).unwrap();
        (
            c,
            SimulationConfig {
                x0: [0.0; 3],
                s: 0.0,
                t_final: 1.0,
                dt,
                n_paths,
                seed: 42,
            },
        )
    }

    #[test]
    fn constant_integrand_gives_elapsed_time() {
        let (c, cfg) = brownian_cfg(2, 50, 1.0 / 256.0);
        let ens = euler_maruyama(&c, &cfg).unwrap();
        let r =
            krylov_functional(&ens, &Integrand::Constant(1.0), 0.25, &[0.5, 1.0], None).unwrap();
        assert_eq!((r.estimates[0].mean, r.estimates[1].mean), (0.25, 0.75));
        assert_eq!(r.estimates[1].stderr, 0.0);
        assert!((r.theta_fit.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn krylov_is_linear_and_positive() {
        let (c, cfg) = brownian_cfg(2, 200, 1.0 / 128.0);
        let ens = euler_maruyama(&c, &cfg).unwrap();
        let space = SpaceGrid::cube(2, -2.0, 0.25, 16).unwrap();
        let g = GridFunction::from_fn(
            TimeGrid::new(0.0, 0.125, 8).unwrap(),
            space,
            Boundary::ZeroExtension,
            |t, x| (1.0 + t) * (-(x[0] * x[0] + x[1] * x[1])).exp(),
        )
        .unwrap();
        let one = krylov_functional(&ens, &Integrand::Grid(g.clone()), 0.0, &[1.0], None).unwrap();
        let two =
            krylov_functional(&ens, &Integrand::Grid(g.scale(2.0)), 0.0, &[1.0], None).unwrap();
        assert!(one.estimates[0].mean > 0.0);
        assert_eq!(two.estimates[0].mean, 2.0 * one.estimates[0].mean);
    }

    #[test]
    fn deterministic_modulus_has_slope_one_half() {
        let c =
            SdeCoefficients::custom(2, [[0.0; 3]; 3], Drift::Constant([3.0, 4.0, 0.0])).unwrap();
        let cfg = SimulationConfig {
            x0: [0.0; 3],
            s: 0.0,
            t_final: 1.0,
            dt: 1.0 / 256.0,
            n_paths: 2,
            seed: 0,
        };
        let ens = euler_maruyama(&c, &cfg).unwrap();
        let r = modulus_report(&ens, &[1, 2, 4, 8, 16, 32]).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-12, "{}", r.slope);
        for (m, delta) in r.moments.iter().zip(&r.deltas) {
            assert!((m.mean - (5.0 * delta).sqrt()).abs() < 1e-12);
        }
        assert!(modulus_report(&ens, &[1, 32]).is_err());
        assert!(modulus_report(&ens, &[1, 2, 4]).is_err());
    }

    #[test]
    fn brownian_second_moment() {
        let (c, cfg) = brownian_cfg(3, 20_000, 1.0 / 100.0);
        let src = Streamed {
            coeffs: &c,
            cfg,
            runner: &SerialRunner,
        };
        let m = terminal_second_moment(&src).unwrap();
        assert!((m.mean - 6.0).abs() <= 3.0 * m.stderr, "{m:?}");
    }

    #[test]
    fn streamed_matches_stored() {
        let (c, cfg) = brownian_cfg(3, 64, 1.0 / 128.0);
        let ens = euler_maruyama(&c, &cfg).unwrap();
        let src = Streamed {
            coeffs: &c,
            cfg,
            runner: &SerialRunner,
        };
        assert_eq!(sup_moment(&ens).unwrap(), sup_moment(&src).unwrap());
        assert_eq!(
            ens.table(&[&TerminalState]).unwrap(),
            src.table(&[&TerminalState]).unwrap()
        );
    }

    #[test]
    fn still_process_sup_is_start_norm() {
        let c = SdeCoefficients::custom(3, [[0.0; 3]; 3], Drift::Zero).unwrap();
        let cfg = SimulationConfig {
            x0: [3.0, 0.0, 4.0],
            s: 0.0,
            t_final: 1.0,
            dt: 0.01,
            n_paths: 3,
            seed: 0,
        };
        let est = sup_moment(&euler_maruyama(&c, &cfg).unwrap()).unwrap();
        assert_eq!((est.mean, est.stderr), (5.0, 0.0));
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!((wasserstein1(&[0.0, 1.0], &[0.5, 1.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!((wasserstein1(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(
            (wasserstein1(&[0.0, 0.0, 3.0], &[1.0]).unwrap() - (2.0 / 3.0 + 2.0 / 3.0)).abs()
                < 1e-15
        );
    }
}
