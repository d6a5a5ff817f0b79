//! One-dimensional cutoff problems: monotone profiles `l` on `[tau, delta]` with
//! `l(tau) = 1`, `l(delta) = 0`, and functionals
//! `sum_i (int |l'|^{alpha_i} |f_i|^{p_i})^{1/p_i}`.

mod bound;
mod descent;
mod explicit;
mod iteration;
mod radial;

pub use bound::{
    calibrate_sa3, sa1_bound, sa3_bound_report, sa3_calibration_family, sa3_exponent,
    sa3_gap_sweep, GapSweep, Sa3Report,
};
pub use descent::{brute_force_infimum, DESCENT_SEED, DESCENT_STARTS, MAX_KNOTS};
pub use explicit::{explicit_cutoff, step_one_cutoff};
pub use iteration::{iteration_constant, iteration_lemma_check, IterationOutcome};
pub use radial::{radial_embedding_infimum, RadialReport};

use crate::prelude::*;

use crate::error::{ensure, Error, Result};

/// Piecewise linear profile on a uniform knot grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CutoffProfile {
    pub tau: f64,
    pub delta: f64,
    pub values: Vec<f64>,
}

impl CutoffProfile {
    pub fn new(tau: f64, delta: f64, values: Vec<f64>) -> Result<Self> {
        let prof = CutoffProfile { tau, delta, values };
        prof.check()?;
        Ok(prof)
    }

    pub fn linear(tau: f64, delta: f64, knots: usize) -> Result<Self> {
        ensure(knots >= 2, || {
            format!("a profile needs at least 2 knots (got {knots})")
        })?;
        CutoffProfile::from_decrements(tau, delta, &vec![1.0; knots - 1])
    }

    /// Profile whose drop over interval `j` is proportional to `dec[j] >= 0`.
    pub fn from_decrements(tau: f64, delta: f64, dec: &[f64]) -> Result<Self> {
        ensure(!dec.is_empty(), || {
            "a profile needs at least one interval".into()
        })?;
        ensure(dec.iter().all(|&x| x >= 0.0 && x.is_finite()), || {
            "decrements must be finite and nonnegative".into()
        })?;
        let mut tails = vec![0.0; dec.len() + 1];
        for j in (0..dec.len()).rev() {
            tails[j] = tails[j + 1] + dec[j];
        }
        let total = tails[0];
        ensure(total > 0.0, || "decrements must not all vanish".into())?;
        let values = tails.iter().map(|t| t / total).collect();
        CutoffProfile::new(tau, delta, values)
    }

    pub fn check(&self) -> Result<()> {
        ensure(
            self.tau.is_finite() && self.delta.is_finite() && self.tau < self.delta,
            || format!("need tau < delta (got {}, {})", self.tau, self.delta),
        )?;
        ensure(self.values.len() >= 2, || {
            "a profile needs at least 2 knots".into()
        })?;
        ensure(
            self.values[0] == 1.0 && *self.values.last().unwrap() == 0.0,
            || "profile must equal 1 at tau and 0 at delta".into(),
        )?;
        if let Some(j) = self.values.windows(2).position(|w| !(w[1] <= w[0])) {
            return Err(Error::validation(format!(
                "profile increases on interval {j}"
            )));
        }
        Ok(())
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn width(&self) -> f64 {
        (self.delta - self.tau) / self.intervals() as f64
    }

    pub fn knot(&self, j: usize) -> f64 {
        self.tau + j as f64 * self.width()
    }

    /// Drops `l(knot_j) - l(knot_{j+1})`.
    pub fn decrements(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[0] - w[1]).collect()
    }

    /// Linear interpolation; 1 left of `tau`, 0 right of `delta`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.tau {
            return 1.0;
        }
        if r >= self.delta {
            return 0.0;
        }
        let u = (r - self.tau) / self.width();
        let j = (u.floor() as usize).min(self.intervals() - 1);
        let w = u - j as f64;
        self.values[j] * (1.0 - w) + self.values[j + 1] * w
    }

    /// `(knot, value)` pairs.
    pub fn table(&self) -> Vec<(f64, f64)> {
        (0..self.values.len())
            .map(|j| (self.knot(j), self.values[j]))
            .collect()
    }
}

/// Densities `f_i` sampled as cell averages on a uniform grid of `[tau, delta]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariationalProblem {
    pub tau: f64,
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    pub betas: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

pub const MAX_COMPONENTS: usize = 4;

impl VariationalProblem {
    pub fn new(
        tau: f64,
        delta: f64,
        alphas: Vec<f64>,
        ps: Vec<f64>,
        betas: Vec<f64>,
        densities: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let prob = VariationalProblem {
            tau,
            delta,
            alphas,
            ps,
            betas,
            densities,
        };
        prob.validate()?;
        Ok(prob)
    }

    /// Single component with constant density `c` on `cells` cells.
    pub fn constant(
        tau: f64,
        delta: f64,
        alpha: f64,
        p: f64,
        beta: f64,
        c: f64,
        cells: usize,
    ) -> Result<Self> {
        VariationalProblem::new(
            tau,
            delta,
            vec![alpha],
            vec![p],
            vec![beta],
            vec![vec![c; cells]],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.alphas.len();
        ensure((1..=MAX_COMPONENTS).contains(&n), || {
            format!("need 1..=4 components (got {n})")
        })?;
        ensure(
            self.ps.len() == n && self.betas.len() == n && self.densities.len() == n,
            || "alphas, ps, betas and densities must have equal length".into(),
        )?;
        let gap = self.delta - self.tau;
        ensure(gap > 0.0 && gap <= 1.0 && self.tau.is_finite(), || {
            format!("need 0 < delta - tau <= 1 (got {gap})")
        })?;
        for i in 0..n {
            ensure(self.alphas[i] >= 1.0 && self.alphas[i].is_finite(), || {
                format!("alpha_{i} must be >= 1")
            })?;
            ensure(self.ps[i] >= 1.0 && self.ps[i].is_finite(), || {
                format!("p_{i} must be >= 1")
            })?;
            ensure(self.betas[i] > 0.0 && self.betas[i].is_finite(), || {
                format!("beta_{i} must be > 0")
            })?;
        }
        let m = self.densities[0].len();
        ensure(m >= 1, || "densities need at least one cell".into())?;
        for (i, f) in self.densities.iter().enumerate() {
            ensure(f.len() == m, || {
                format!("density {i} has {} cells, expected {m}", f.len())
            })?;
            ensure(f.iter().all(|&v| v >= 0.0 && v.is_finite()), || {
                format!("density {i} must be finite and nonnegative")
            })?;
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.alphas.len()
    }

    pub fn cells(&self) -> usize {
        self.densities[0].len()
    }

    pub fn gap(&self) -> f64 {
        self.delta - self.tau
    }

    /// `int_{I_j} |f_i|^{p_i}` over `j` equal intervals, exact for cellwise constant densities.
    fn discretize(&self, intervals: usize) -> Discretized {
        let m = self.cells();
        let unit = self.gap() / (m * intervals) as f64;
        let masses = (0..self.components())
            .map(|i| {
                let pw: Vec<f64> = self.densities[i]
                    .iter()
                    .map(|&v| crate::norms::abs_pow(v, self.ps[i]))
                    .collect();
                let mut w = vec![0.0; intervals];
                for (j, wj) in w.iter_mut().enumerate() {
                    let (a, b) = (j * m, (j + 1) * m);
                    let first = a / intervals;
                    let last = ((b - 1) / intervals).min(m - 1);
                    for (c, &v) in pw.iter().enumerate().take(last + 1).skip(first) {
                        let (ca, cb) = (c * intervals, (c + 1) * intervals);
                        let overlap = b.min(cb).saturating_sub(a.max(ca));
                        *wj += v * (overlap as f64 * unit);
                    }
                }
                w
            })
            .collect();
        Discretized {
            alphas: self.alphas.clone(),
            ps: self.ps.clone(),
            h: self.gap() / intervals as f64,
            masses,
        }
    }
}

/// Functional reduced to per-interval masses, a function of the profile drops.
#[derive(Debug, Clone)]
pub(crate) struct Discretized {
    pub alphas: Vec<f64>,
    pub ps: Vec<f64>,
    pub h: f64,
    pub masses: Vec<Vec<f64>>,
}

#[inline]
pub(crate) fn slope_pow(dec: f64, h: f64, alpha: f64) -> f64 {
    let s = dec / h;
    if alpha == 1.0 {
        s
    } else if alpha == 2.0 {
        s * s
    } else {
        s.powf(alpha)
    }
}

impl Discretized {
    pub(crate) fn intervals(&self) -> usize {
        self.masses[0].len()
    }

    pub(crate) fn sums(&self, dec: &[f64]) -> Vec<f64> {
        self.masses
            .iter()
            .zip(&self.alphas)
            .map(|(w, &a)| {
                w.iter()
                    .zip(dec)
                    .map(|(&wj, &dj)| {
                        if wj == 0.0 {
                            0.0
                        } else {
                            slope_pow(dj, self.h, a) * wj
                        }
                    })
                    .sum()
            })
            .collect()
    }

    pub(crate) fn value_from_sums(&self, sums: &[f64]) -> f64 {
        sums.iter()
            .zip(&self.ps)
            .map(|(&s, &p)| crate::norms::root(s, p))
            .sum()
    }

    pub(crate) fn value(&self, dec: &[f64]) -> f64 {
        self.value_from_sums(&self.sums(dec))
    }
}

/// Value of the functional at a feasible profile.
pub fn functional_value(prob: &VariationalProblem, ell: &CutoffProfile) -> Result<f64> {
    prob.validate()?;
    ell.check()?;
    let scale = 1.0 + prob.tau.abs().max(prob.delta.abs());
    ensure(
        (ell.tau - prob.tau).abs() <= 1e-12 * scale
            && (ell.delta - prob.delta).abs() <= 1e-12 * scale,
        || "profile and problem live on different intervals".into(),
    )?;
    Ok(prob.discretize(ell.intervals()).value(&ell.decrements()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn total_variation_identity() {
        let prob = VariationalProblem::constant(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 16).unwrap();
        let lin = CutoffProfile::linear(0.0, 1.0, 17).unwrap();
        assert!((functional_value(&prob, &lin).unwrap() - 1.0).abs() < 1e-14);
        let bent = CutoffProfile::from_decrements(0.0, 1.0, &[5.0, 0.0, 1.0, 2.0]).unwrap();
        assert!((functional_value(&prob, &bent).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_on_short_gap() {
        let h = 0.25;
        let prob = VariationalProblem::constant(1.0, 1.0 + h, 2.0, 1.0, 1.0, 1.0, 8).unwrap();
        let lin = CutoffProfile::linear(1.0, 1.0 + h, 9).unwrap();
        assert!((functional_value(&prob, &lin).unwrap() - 1.0 / h).abs() < 1e-12);
    }

    #[test]
    fn zero_density_gives_zero() {
        let prob = VariationalProblem::constant(0.0, 1.0, 2.0, 1.5, 1.0, 0.0, 8).unwrap();
        let lin = CutoffProfile::linear(0.0, 1.0, 5).unwrap();
        assert_eq!(functional_value(&prob, &lin).unwrap(), 0.0);
    }

    #[test]
    fn infeasible_profiles_are_rejected() {
        assert!(CutoffProfile::new(0.0, 1.0, vec![1.0, 0.5, 0.6, 0.0]).is_err());
        assert!(CutoffProfile::new(0.0, 1.0, vec![0.9, 0.5, 0.0]).is_err());
        assert!(CutoffProfile::new(0.0, 1.0, vec![1.0, 0.5, 0.1]).is_err());
        let prob = VariationalProblem::constant(0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 4).unwrap();
        let bad = CutoffProfile {
            tau: 0.0,
            delta: 1.0,
            values: vec![1.0, 1.2, 0.0],
        };
        assert!(functional_value(&prob, &bad).is_err());
    }

    #[test]
    fn masses_handle_misaligned_grids() {
        let prob = VariationalProblem::new(
            0.0,
            1.0,
            vec![1.0],
            vec![1.0],
            vec![1.0],
            vec![vec![1.0, 2.0, 3.0]],
        )
        .unwrap();
        let disc = prob.discretize(2);
        // Cells [0,1/3),[1/3,2/3),[2/3,1) with values 1, 2, 3.
        assert!((disc.masses[0][0] - (1.0 / 3.0 + 2.0 / 6.0)).abs() < 1e-15);
        assert!((disc.masses[0][1] - (2.0 / 6.0 + 3.0 / 3.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn profiles_from_decrements_are_feasible(dec in proptest::collection::vec(0.0f64..3.0, 1..40)) {
            prop_assume!(dec.iter().any(|&d| d > 0.0));
            let prof = CutoffProfile::from_decrements(0.5, 1.5, &dec).unwrap();
            prop_assert!(prof.check().is_ok());
            prop_assert_eq!(prof.eval(0.5), 1.0);
            prop_assert_eq!(prof.eval(1.5), 0.0);
        }
    }
}
