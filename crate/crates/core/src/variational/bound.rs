use crate::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{brute_force_infimum, VariationalProblem};
use crate::error::{ensure, Result};
use crate::stats::log_log_slope;

/// `max_i (alpha_i - 1)/p_i + 1/min_i beta_i`.
pub fn sa3_exponent(alphas: &[f64], ps: &[f64], betas: &[f64]) -> f64 {
    let a = alphas
        .iter()
        .zip(ps)
        .map(|(&a, &p)| (a - 1.0) / p)
        .fold(f64::NEG_INFINITY, f64::max);
    let b = betas.iter().cloned().fold(f64::INFINITY, f64::min);
    a + 1.0 / b
}

/// `sum_i (int |f_i|^{beta_i})^{1/beta_i}`.
fn data_mass(prob: &VariationalProblem) -> f64 {
    let w = prob.gap() / prob.cells() as f64;
    prob.densities
        .iter()
        .zip(&prob.betas)
        .map(|(f, &b)| (f.iter().map(|&v| v.powf(b)).sum::<f64>() * w).powf(1.0 / b))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sa3Report {
    /// Numerical infimum of the functional.
    pub lhs: f64,
    pub rhs_exponent: f64,
    /// `(delta - tau)^{-rhs_exponent} sum_i (int |f_i|^{beta_i})^{1/beta_i}`.
    pub rhs_value: f64,
    pub c_fit: f64,
    pub holds: bool,
}

/// Compares the numerical infimum with the power-law bound scaled by `c_fit`.
pub fn sa3_bound_report(prob: &VariationalProblem, c_fit: f64) -> Result<Sa3Report> {
    prob.validate()?;
    let (lhs, _) = brute_force_infimum(prob, prob.cells() + 1)?;
    let rhs_exponent = sa3_exponent(&prob.alphas, &prob.ps, &prob.betas);
    let rhs_value = prob.gap().powf(-rhs_exponent) * data_mass(prob);
    let holds = lhs <= c_fit * rhs_value * (1.0 + 1e-12);
    Ok(Sa3Report {
        lhs,
        rhs_exponent,
        rhs_value,
        c_fit,
        holds,
    })
}

/// Frozen calibration family: 24 seeded problems with up to three components and
/// gaps in `[1/8, 1]`.
pub fn sa3_calibration_family() -> Vec<VariationalProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a3_f17);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let cells = 24;
    (0..24)
        .map(|k| {
            let n = 1 + k % 3;
            let gap = [1.0, 0.5, 0.25, 0.125][k % 4];
            let mut alphas = Vec::new();
            let mut ps = Vec::new();
            let mut betas = Vec::new();
            let mut dens = Vec::new();
            for _ in 0..n {
                alphas.push(1.0 + 2.0 * unit());
                ps.push(1.0 + 2.0 * unit());
                betas.push(0.25 + 0.75 * unit());
                let level = 0.2 + 2.0 * unit();
                dens.push((0..cells).map(|_| level * (0.1 + unit())).collect());
            }
            VariationalProblem::new(1.0, 1.0 + gap, alphas, ps, betas, dens)
                .expect("valid calibration problem")
        })
        .collect()
}

/// Largest `lhs / rhs_value` over the family.
pub fn calibrate_sa3(family: &[VariationalProblem]) -> Result<f64> {
    let mut c = 0.0f64;
    for prob in family {
        let r = sa3_bound_report(prob, f64::INFINITY)?;
        if r.rhs_value > 0.0 {
            c = c.max(r.lhs / r.rhs_value);
        }
    }
    Ok(c)
}

/// Infimum across shrinking gaps for constant unit densities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapSweep {
    pub gaps: Vec<f64>,
    pub lhs: Vec<f64>,
    pub data_mass: Vec<f64>,
    /// Log-log slope of the infimum against the gap.
    pub lhs_slope: f64,
    /// Log-log slope of the infimum divided by the data mass; the bound predicts
    /// `-rhs_exponent`.
    pub normalized_slope: f64,
    pub rhs_exponent: f64,
}

pub fn sa3_gap_sweep(
    alpha: &[f64],
    p: &[f64],
    beta: &[f64],
    gaps: &[f64],
    cells: usize,
) -> Result<GapSweep> {
    ensure(gaps.len() >= 2, || {
        "gap sweep needs at least two gaps".into()
    })?;
    let mut lhs = Vec::new();
    let mut mass = Vec::new();
    for &h in gaps {
        let prob = VariationalProblem::new(
            1.0,
            1.0 + h,
            alpha.to_vec(),
            p.to_vec(),
            beta.to_vec(),
            vec![vec![1.0; cells]; alpha.len()],
        )?;
        lhs.push(brute_force_infimum(&prob, cells + 1)?.0);
        mass.push(data_mass(&prob));
    }
    let ratio: Vec<f64> = lhs.iter().zip(&mass).map(|(a, b)| a / b).collect();
    Ok(GapSweep {
        gaps: gaps.to_vec(),
        lhs_slope: log_log_slope(gaps, &lhs),
        normalized_slope: log_log_slope(gaps, &ratio),
        lhs,
        data_mass: mass,
        rhs_exponent: sa3_exponent(alpha, p, beta),
    })
}

/// Single-density bound `sum_i 2^{theta alpha_i / beta} (delta-tau)^{1-alpha_i-1/beta} (int f^beta)^{1/beta}`
/// with `theta = 1/min alpha_i`, valid for `beta` in `(0, 1]`.
pub fn sa1_bound(alphas: &[f64], beta: f64, tau: f64, delta: f64, density: &[f64]) -> f64 {
    let gap = delta - tau;
    let theta = 1.0 / alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let w = gap / density.len() as f64;
    let mass = (density.iter().map(|&f| f.powf(beta)).sum::<f64>() * w).powf(1.0 / beta);
    alphas
        .iter()
        .map(|&a| 2.0f64.powf(theta * a / beta) * gap.powf(1.0 - a - 1.0 / beta))
        .sum::<f64>()
        * mass
}
