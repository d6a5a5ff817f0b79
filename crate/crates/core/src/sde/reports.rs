use crate::prelude::*;

use super::coefficients::{build_coefficients, FamilySpec, SdeCoefficients};
use super::simulate::{simulate_path, PathRecord, PathRunner, SimulationConfig};
use super::statistics::{wasserstein1, Estimate, PathSource, Streamed, SupNorm, TerminalState};
use crate::error::{ensure, Result};
use crate::grid::MAX_DIM;
use crate::stats::{linear_fit, spearman};

/// Noise used by the two members of a Cauchy pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Pairing {
    /// Both indices are driven by the same noise streams.
    Shared,
    /// The `2n` member uses the next master seed.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CauchyRow {
    pub n: u32,
    /// Largest coordinate-wise Wasserstein-1 distance between `X^n_T` and `X^{2n}_T`.
    pub distance: f64,
    /// `E sup_t |X^n_t|`.
    pub sup_moment: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CauchyReport {
    pub rows: Vec<CauchyRow>,
    /// Spearman correlation of distance against `n`.
    pub rank_correlation: f64,
    pub trend_non_increasing: bool,
    /// Fitted change of the sup moment across the sweep (slope in `log2 n` times its span).
    pub sup_growth: f64,
    /// Largest standard error of the sup moments.
    pub sup_stderr: f64,
    /// `sup_growth <= 2 sup_stderr`.
    pub sup_stable: bool,
    pub frozen: usize,
    pub floored: u64,
}

/// Coordinate-sliced distances between the laws at indices `n` and `2n` of a
/// mollified family, for each `n` in `n_list`.
pub fn approximation_cauchy_report(
    family: &FamilySpec,
    n_list: &[u32],
    cfg: &SimulationConfig,
    pairing: Pairing,
    runner: &(dyn PathRunner + Sync),
) -> Result<CauchyReport> {
    ensure(n_list.len() >= 3, || {
        format!("need at least 3 indices (got {})", n_list.len())
    })?;
    ensure(
        n_list[0] >= 1 && n_list.windows(2).all(|w| w[0] < w[1]),
        || "indices must increase from 1".into(),
    )?;
    let d = family.d;
    let mut rows = Vec::with_capacity(n_list.len());
    let (mut frozen, mut floored) = (0, 0);
    for &n in n_list {
        let fine = n
            .checked_mul(2)
            .ok_or_else(|| crate::Error::validation("index overflow"))?;
        let coarse = build_coefficients(&family.with_n(Some(n)))?;
        let fine = build_coefficients(&family.with_n(Some(fine)))?;
        let fine_cfg = match pairing {
            Pairing::Shared => *cfg,
            Pairing::Independent => SimulationConfig {
                seed: cfg.seed.wrapping_add(1),
                ..*cfg
            },
        };
        let a = Streamed {
            coeffs: &coarse,
            cfg: *cfg,
            runner,
        }
        .table(&[&TerminalState, &SupNorm])?;
        let b = Streamed {
            coeffs: &fine,
            cfg: fine_cfg,
            runner,
        }
        .table(&[&TerminalState])?;
        let mut distance = 0.0f64;
        for j in 0..d {
            distance = distance.max(wasserstein1(&a.column(0, j), &b.column(0, j))?);
        }
        frozen += a.frozen_count() + b.frozen_count();
        floored += a.floored + b.floored;
        rows.push(CauchyRow {
            n,
            distance,
            sup_moment: a.estimate(1, 0)?,
        });
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let dist: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let rank_correlation = spearman(&ns, &dist);
    let logs: Vec<f64> = ns.iter().map(|n| n.log2()).collect();
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_moment.mean).collect();
    let sup_growth = linear_fit(&logs, &sups).slope * (logs[logs.len() - 1] - logs[0]);
    let sup_stderr = rows.iter().map(|r| r.sup_moment.stderr).fold(0.0, f64::max);
    Ok(CauchyReport {
        rows,
        rank_correlation,
        trend_non_increasing: rank_correlation <= 0.0,
        sup_growth,
        sup_stderr,
        sup_stable: sup_growth <= 2.0 * sup_stderr,
        frozen,
        floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationRow {
    pub eps: f64,
    /// `E sup_t |X^{x0}_t - X^{x0 + eps e_1}_t|` with shared noise.
    pub divergence: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
    /// Divergence never grows as `eps` decreases.
    pub monotone: bool,
    pub frozen: usize,
}

/// Sensitivity of paths to the starting point: pairs of paths from `x0` and
/// `x0 + eps e_1` driven by identical noise.
pub fn uniqueness_perturbation_report(
    coeffs: &SdeCoefficients,
    cfg: &SimulationConfig,
    eps_list: &[f64],
    runner: &(dyn PathRunner + Sync),
) -> Result<PerturbationReport> {
    cfg.validate()?;
    ensure(!eps_list.is_empty(), || {
        "need at least one perturbation size".into()
    })?;
    ensure(eps_list.iter().all(|e| *e >= 0.0 && e.is_finite()), || {
        "perturbations must be nonnegative".into()
    })?;
    ensure(eps_list.windows(2).all(|w| w[0] > w[1]), || {
        "perturbations must decrease".into()
    })?;
    let d = coeffs.d;
    let job = |i: usize| {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        let base = simulate_path(coeffs, cfg, &cfg.x0, i, &mut xs);
        let mut values = Vec::with_capacity(eps_list.len());
        let mut frozen = base.frozen_at.is_some();
        let mut floored = base.floored;
        for &eps in eps_list {
            let mut y0: [f64; MAX_DIM] = cfg.x0;
            y0[0] += eps;
            let other = simulate_path(coeffs, cfg, &y0, i, &mut ys);
            frozen |= other.frozen_at.is_some();
            floored += other.floored;
            let gap = xs
                .chunks(d)
                .zip(ys.chunks(d))
                .map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>())
                .fold(0.0, f64::max);
            values.push(gap.sqrt());
        }
        PathRecord {
            values,
            frozen,
            floored,
        }
    };
    let records = runner.map_paths(cfg.n_paths, &job);
    let kept: Vec<&PathRecord> = records.iter().filter(|r| !r.frozen).collect();
    let frozen = records.len() - kept.len();
    let rows = eps_list
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let col: Vec<f64> = kept.iter().map(|r| r.values[j]).collect();
            Ok(PerturbationRow {
                eps,
                divergence: Estimate::from_samples(&col)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].divergence.mean <= w[0].divergence.mean);
    Ok(PerturbationReport {
        rows,
        monotone,
        frozen,
    })
}
