use crate::prelude::*;

use crate::error::{ensure, Result};

/// Relative slack allowed when comparing iterates with the decay bound.
pub const DECAY_SLACK: f64 = 1e-12;

/// Worst-case superlinear recursion `a_{n+1} = C0 lambda^n a_n sum_j a_n^{delta_j}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecursionParams {
    pub c0: f64,
    pub lambda: f64,
    pub deltas: Vec<f64>,
    pub a1: f64,
    pub n_max: usize,
}

impl RecursionParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.c0 > 1.0 && self.c0.is_finite(), || {
            format!("C0 must exceed 1 (got {})", self.c0)
        })?;
        ensure(self.lambda > 1.0 && self.lambda.is_finite(), || {
            format!("lambda must exceed 1 (got {})", self.lambda)
        })?;
        ensure(!self.deltas.is_empty(), || {
            "at least one exponent delta_j is needed".into()
        })?;
        for &d in &self.deltas {
            ensure(d > 0.0 && d.is_finite(), || {
                format!("exponents delta_j must be positive (got {d})")
            })?;
        }
        ensure(self.a1 >= 0.0 && self.a1.is_finite(), || {
            format!("a1 must be nonnegative (got {})", self.a1)
        })?;
        ensure(self.n_max >= 1, || "n_max must be at least 1".into())
    }

    pub fn delta(&self) -> f64 {
        self.deltas.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `ln` of `(m C0 lambda^{(1+delta)/delta})^{-1/delta}`.
    pub fn ln_threshold(&self) -> f64 {
        let delta = self.delta();
        let m = self.deltas.len() as f64;
        -(m.ln() + self.c0.ln() + (1.0 + delta) / delta * self.lambda.ln()) / delta
    }

    /// Evaluated directly when that stays in range, so exact inputs give exact
    /// thresholds.
    pub fn threshold(&self) -> f64 {
        let delta = self.delta();
        let m = self.deltas.len() as f64;
        let direct = (m * self.c0 * self.lambda.powf((1.0 + delta) / delta)).powf(-1.0 / delta);
        if direct.is_finite() && direct >= f64::MIN_POSITIVE {
            direct
        } else {
            self.ln_threshold().exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RecursionReport {
    /// `ln a_n` for `n = 1..=len`; `-inf` encodes `a_n = 0`.
    pub ln_values: Vec<f64>,
    pub threshold: f64,
    pub below_threshold: bool,
    /// First `n` with `a_n > (1 + DECAY_SLACK) a1 lambda^{-(n-1)/delta}`; only
    /// checked below the threshold.
    pub first_bound_violation: Option<usize>,
    /// Set when `a_n` leaves the `f64` range; the sequence stops there.
    pub diverged: bool,
}

impl RecursionReport {
    /// `a_n`, with underflow to zero.
    pub fn values(&self) -> Vec<f64> {
        self.ln_values.iter().map(|l| l.exp()).collect()
    }

    /// Decay bound verdict, `None` above the threshold.
    pub fn decay_bound_holds(&self) -> Option<bool> {
        self.below_threshold
            .then_some(self.first_bound_violation.is_none())
    }
}

/// Iterates the recursion up to `n_max` terms. Iterates are kept in linear form
/// while they are normal floating-point numbers, so inputs that are powers of two
/// stay exact, and continue in log space after underflow or overflow so that
/// neither the fast decay below the threshold nor the blow-up above it is lost.
pub fn recursion_simulate(params: &RecursionParams) -> Result<RecursionReport> {
    params.validate()?;
    let threshold = params.threshold();
    let ln_a1 = params.a1.ln();
    let below_threshold = if threshold > 0.0 {
        params.a1 <= threshold
    } else {
        ln_a1 <= params.ln_threshold()
    };
    let (ln_c0, ln_lambda, delta) = (params.c0.ln(), params.lambda.ln(), params.delta());
    let ln_slack = DECAY_SLACK.ln_1p();
    let normal = |x: f64| x.is_finite() && x >= f64::MIN_POSITIVE;
    let mut ln_values = Vec::with_capacity(params.n_max);
    let mut first_bound_violation = None;
    let mut diverged = false;
    let mut ln_a = ln_a1;
    let mut linear = normal(params.a1).then_some(params.a1);
    for n in 1..=params.n_max {
        ln_values.push(ln_a);
        if below_threshold && first_bound_violation.is_none() && ln_a > f64::NEG_INFINITY {
            let decay = -((n - 1) as f64) / delta;
            let bound = params.a1 * params.lambda.powf(decay);
            let violated = match linear {
                Some(a) if normal(bound) => a > bound * (1.0 + DECAY_SLACK),
                _ => ln_a - (ln_a1 + decay * ln_lambda) > ln_slack,
            };
            if violated {
                first_bound_violation = Some(n);
            }
        }
        if ln_a > f64::MAX.ln() {
            diverged = true;
            break;
        }
        if ln_a == f64::NEG_INFINITY {
            continue;
        }
        let next = linear.map(|a| {
            params.c0
                * params.lambda.powi(n as i32)
                * a
                * params.deltas.iter().map(|d| a.powf(*d)).sum::<f64>()
        });
        match next {
            Some(x) if normal(x) => {
                linear = Some(x);
                ln_a = x.ln();
            }
            _ => {
                linear = None;
                ln_a = ln_c0
                    + n as f64 * ln_lambda
                    + ln_a
                    + log_sum_exp(params.deltas.iter().map(|d| d * ln_a));
            }
        }
    }
    Ok(RecursionReport {
        ln_values,
        threshold,
        below_threshold,
        first_bound_violation,
        diverged,
    })
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.map(|x| (x - top).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn params(a1: f64) -> RecursionParams {
        RecursionParams {
            c0: 2.0,
            lambda: 2.0,
            deltas: vec![1.0],
            a1,
            n_max: 50,
        }
    }

    #[test]
    fn worked_example() {
        let p = params(0.1);
        assert!((p.threshold() - 0.125).abs() < 1e-15);
        let r = recursion_simulate(&p).unwrap();
        let a = r.values();
        assert!((a[1] - 0.04).abs() < 1e-15 && a[1] <= 0.05);
        assert_eq!(r.decay_bound_holds(), Some(true));
    }

    #[test]
    fn zero_start_stays_zero() {
        let r = recursion_simulate(&params(0.0)).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
        assert_eq!(r.decay_bound_holds(), Some(true));
    }

    #[test]
    fn threshold_start_meets_bound_with_equality() {
        let p = params(0.125);
        let r = recursion_simulate(&p).unwrap();
        assert_eq!(r.decay_bound_holds(), Some(true));
        for (n, l) in r.ln_values.iter().enumerate() {
            let bound = p.a1.ln() - n as f64 * 2f64.ln();
            assert!((l - bound).abs() < 1e-12 * bound.abs().max(1.0));
        }
    }

    #[test]
    fn far_above_threshold_diverges() {
        let r = recursion_simulate(&params(1.25)).unwrap();
        assert!(!r.below_threshold && r.diverged && r.decay_bound_holds().is_none());
    }

    fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn randomized_sweep_below_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let mut checked = 0;
        for _ in 0..1000 {
            let m = 1 + (rng.next_u32() % 3) as usize;
            let mut p = RecursionParams {
                c0: uniform(&mut rng, 1.1, 10.0),
                lambda: uniform(&mut rng, 1.1, 4.0),
                deltas: (0..m).map(|_| uniform(&mut rng, 0.1, 2.0)).collect(),
                a1: 0.0,
                n_max: 50,
            };
            p.a1 = p.threshold() * uniform(&mut rng, 0.0, 1.0);
            let r = recursion_simulate(&p).unwrap();
            assert_eq!(r.decay_bound_holds(), Some(true), "{p:?}");
            checked += 1;
        }
        assert_eq!(checked, 1000);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(recursion_simulate(&RecursionParams {
            c0: 1.0,
            ..params(0.1)
        })
        .is_err());
        assert!(recursion_simulate(&RecursionParams {
            deltas: vec![],
            ..params(0.1)
        })
        .is_err());
    }
}
