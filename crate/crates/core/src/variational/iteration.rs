use crate::prelude::*;

use crate::error::{ensure, Result};

/// Constant of the iteration lemma.
///
/// The proof runs along `t_0 = tau1`, `t_{i+1} = t_i + (1 - lam) lam^i (tau2 - tau1)`
/// with `lam^alpha = (1 + theta)/2`, so that `theta lam^{-alpha} = 2 theta/(1 + theta) < 1`.
/// Summing the geometric series gives
/// `h(tau1) <= (1-lam)^{-alpha} (1+theta)/(1-theta) (tau2-tau1)^{-alpha} A + B/(1-theta)`,
/// and the returned constant is the larger of the two factors.
pub fn iteration_constant(alpha: f64, theta: f64) -> f64 {
    let b_factor = 1.0 / (1.0 - theta);
    if alpha == 0.0 {
        return b_factor;
    }
    let lam = (0.5 * (1.0 + theta)).powf(1.0 / alpha);
    let a_factor = (1.0 - lam).powf(-alpha) * (1.0 + theta) / (1.0 - theta);
    a_factor.max(b_factor)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IterationOutcome {
    /// The hypothesis fails for the sample pair `(i, j)`, `i < j`.
    HypothesisFails { i: usize, j: usize },
    Checked {
        lhs: f64,
        bound: f64,
        constant: f64,
        holds: bool,
    },
}

/// Checks the hypothesis `h(t) <= theta h(t') + (t' - t)^{-alpha} A + B` on every
/// sample pair and then the conclusion `h(tau1) <= C ((tau2 - tau1)^{-alpha} A + B)`.
pub fn iteration_lemma_check(
    taus: &[f64],
    h: &[f64],
    alpha: f64,
    theta: f64,
    a: f64,
    b: f64,
) -> Result<IterationOutcome> {
    ensure(taus.len() >= 2 && taus.len() == h.len(), || {
        "need at least two samples with matching lengths".into()
    })?;
    ensure(taus.windows(2).all(|w| w[0] < w[1]), || {
        "sample points must increase strictly".into()
    })?;
    ensure(h.iter().all(|&v| v >= 0.0 && v.is_finite()), || {
        "samples must be finite and nonnegative".into()
    })?;
    ensure(theta > 0.0 && theta < 1.0, || {
        format!("theta must lie in (0, 1) (got {theta})")
    })?;
    ensure(alpha >= 0.0 && a >= 0.0 && b >= 0.0, || {
        "alpha, A and B must be nonnegative".into()
    })?;
    for i in 0..taus.len() {
        for j in i + 1..taus.len() {
            let rhs = theta * h[j] + (taus[j] - taus[i]).powf(-alpha) * a + b;
            if h[i] > rhs * (1.0 + 1e-12) {
                return Ok(IterationOutcome::HypothesisFails { i, j });
            }
        }
    }
    let constant = iteration_constant(alpha, theta);
    let span = taus[taus.len() - 1] - taus[0];
    let bound = constant * (span.powf(-alpha) * a + b);
    Ok(IterationOutcome::Checked {
        lhs: h[0],
        bound,
        constant,
        holds: h[0] <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1.0 + i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_function() {
        let t = grid(11);
        let h = [0.0; 11];
        match iteration_lemma_check(&t, &h, 1.0, 0.5, 0.0, 0.0).unwrap() {
            IterationOutcome::Checked { holds, .. } => assert!(holds),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_case_needs_two() {
        assert!(iteration_constant(1.0, 0.5) >= 2.0);
        assert!(iteration_constant(0.0, 0.5) >= 2.0);
        let t = grid(9);
        let h = [3.0; 9];
        match iteration_lemma_check(&t, &h, 1.0, 0.5, 0.0, 1.5).unwrap() {
            IterationOutcome::Checked { holds, .. } => assert!(holds),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn synthetic_power_profile() {
        let t = grid(21);
        let (alpha, a) = (1.5, 0.3);
        let h: Vec<f64> = t
            .iter()
            .map(|&s| (2.0 + 1e-3 - s).powf(-alpha) * a)
            .collect();
        match iteration_lemma_check(&t, &h, alpha, 0.25, a, 0.0).unwrap() {
            IterationOutcome::Checked { holds, .. } => assert!(holds),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn violated_hypothesis_is_reported() {
        let t = grid(5);
        let h = [10.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            iteration_lemma_check(&t, &h, 1.0, 0.5, 0.1, 0.1).unwrap(),
            IterationOutcome::HypothesisFails { i: 0, .. }
        ));
    }
}
