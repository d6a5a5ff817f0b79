use crate::prelude::*;

use super::{CutoffProfile, VariationalProblem};
use crate::error::{ensure, Result};

/// Profile `l(r) = A^{-1} int_r^delta g^{-theta}` with `g = f + eps` and
/// `eps = ((delta - tau)^{-1} int f^beta)^{1/beta}`, for a cellwise constant
/// density `f` on `[tau, delta]`. Knots sit on the cell boundaries.
///
/// A vanishing density yields the linear profile.
pub fn step_one_cutoff(
    density: &[f64],
    theta: f64,
    beta: f64,
    tau: f64,
    delta: f64,
) -> Result<CutoffProfile> {
    ensure(!density.is_empty(), || {
        "density needs at least one cell".into()
    })?;
    ensure(theta > 0.0 && beta > 0.0, || {
        "theta and beta must be positive".into()
    })?;
    let m = density.len() as f64;
    let mean = density.iter().map(|&f| f.powf(beta)).sum::<f64>() / m;
    let eps = mean.powf(1.0 / beta);
    if eps == 0.0 || !eps.is_finite() {
        return CutoffProfile::linear(tau, delta, density.len() + 1);
    }
    let dec: Vec<f64> = density.iter().map(|&f| (f + eps).powf(-theta)).collect();
    CutoffProfile::from_decrements(tau, delta, &dec)
}

/// Explicit near-minimizer of the multi-component functional.
///
/// Components are merged into `F = sum_i |f_i|^p` with `p = max p_i`, which turns
/// the problem into a single-density one with slope exponents
/// `(alpha_i - 1) p / p_i + 1`; then [`step_one_cutoff`] runs with
/// `theta = 1 / min_i ((alpha_i - 1) p / p_i + 1)` and `beta = min_i beta_i / p`.
pub fn explicit_cutoff(prob: &VariationalProblem) -> Result<CutoffProfile> {
    prob.validate()?;
    let p = prob.ps.iter().cloned().fold(1.0, f64::max);
    let min_alpha = prob
        .alphas
        .iter()
        .zip(&prob.ps)
        .map(|(&a, &pi)| (a - 1.0) * p / pi + 1.0)
        .fold(f64::INFINITY, f64::min);
    let beta = prob.betas.iter().cloned().fold(f64::INFINITY, f64::min) / p;
    let merged: Vec<f64> = (0..prob.cells())
        .map(|c| {
            prob.densities
                .iter()
                .map(|f| crate::norms::abs_pow(f[c], p))
                .sum()
        })
        .collect();
    step_one_cutoff(&merged, 1.0 / min_alpha, beta, prob.tau, prob.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_density_gives_linear_profile() {
        let prob = VariationalProblem::constant(0.25, 1.0, 2.0, 1.5, 0.5, 3.0, 12).unwrap();
        let ell = explicit_cutoff(&prob).unwrap();
        for (j, v) in ell.values.iter().enumerate() {
            assert!((v - (12 - j) as f64 / 12.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_density_slopes() {
        // theta = 1, beta = 1: eps = 1/2, g = 1/2 on the left and 3/2 on the right.
        let mut f = vec![0.0; 8];
        f[4..].iter_mut().for_each(|v| *v = 1.0);
        let prob =
            VariationalProblem::new(0.0, 1.0, vec![1.0], vec![1.0], vec![1.0], vec![f]).unwrap();
        let ell = explicit_cutoff(&prob).unwrap();
        let dec = ell.decrements();
        assert!((dec[0] / dec[7] - 3.0).abs() < 1e-12);
        assert!((dec[0] - dec[3]).abs() < 1e-15);
    }

    #[test]
    fn zero_density_gives_linear_profile() {
        let prob = VariationalProblem::constant(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 5).unwrap();
        let ell = explicit_cutoff(&prob).unwrap();
        assert_eq!(ell, CutoffProfile::linear(0.0, 1.0, 6).unwrap());
    }
}
