use crate::prelude::*;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{ensure, Result};
use crate::grid::Cylinder;

/// Level and radius schedule of the truncation iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelSchedule {
    /// Limit level.
    pub kappa: f64,
    /// Limit radius.
    pub tau: f64,
    /// Starting radius.
    pub sigma: f64,
    pub n_max: usize,
}

/// `(kappa_n, tau_n, tau_tilde_n)` at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelStep {
    pub kappa: f64,
    pub tau: f64,
    pub tau_tilde: f64,
}

impl LevelSchedule {
    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa > 0.0 && self.kappa.is_finite(), || {
            format!(
                "base level must be positive and finite (got {})",
                self.kappa
            )
        })?;
        ensure(
            1.0 <= self.tau && self.tau < self.sigma && self.sigma <= 2.0,
            || {
                format!(
                    "need 1 <= tau < sigma <= 2 (got {}, {})",
                    self.tau, self.sigma
                )
            },
        )?;
        ensure(self.n_max >= 1, || "n_max must be at least 1".into())
    }

    /// `kappa_n = kappa (1 - 2^{1-n})`, `tau_n = tau + (sigma - tau) 2^{1-n}` and
    /// `tau_tilde_n = tau + 3 (sigma - tau) 2^{-n-1}`.
    pub fn step(&self, n: usize) -> Result<LevelStep> {
        self.validate()?;
        ensure(n >= 1, || "schedule index starts at 1".into())?;
        let gap = self.sigma - self.tau;
        let h = pow2(1 - n as i32);
        Ok(LevelStep {
            kappa: self.kappa * (1.0 - h),
            tau: self.tau + gap * h,
            tau_tilde: self.tau + 3.0 * gap * pow2(-(n as i32) - 1),
        })
    }

    /// `Gamma_n = Q_{tau_n}` around `(s, z)`.
    pub fn cylinder(&self, n: usize, s: f64, z: &[f64]) -> Result<Cylinder> {
        Ok(Cylinder::new(s, z, self.step(n)?.tau))
    }

    /// Intermediate cylinder `Q_{tau_tilde_n}` around `(s, z)`.
    pub fn tilde_cylinder(&self, n: usize, s: f64, z: &[f64]) -> Result<Cylinder> {
        Ok(Cylinder::new(s, z, self.step(n)?.tau_tilde))
    }
}

pub fn schedule(sched: &LevelSchedule, n: usize) -> Result<LevelStep> {
    sched.step(n)
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

fn exact_pow2(e: i64) -> BigRational {
    let p = BigRational::from_integer(BigInt::one() << e.unsigned_abs() as usize);
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

/// First index `n <= n_max` at which the exact schedule (computed in rational
/// arithmetic from the binary inputs) fails one of: `kappa_n < kappa_{n+1}`,
/// `tau_{n+1} < tau_tilde_n < tau_n`, `kappa_n < kappa`, `tau < tau_n`.
pub fn schedule_violation(sched: &LevelSchedule) -> Result<Option<usize>> {
    sched.validate()?;
    let (kappa, tau, sigma) = (exact(sched.kappa), exact(sched.tau), exact(sched.sigma));
    let gap = &sigma - &tau;
    let three = BigRational::from_integer(BigInt::from(3));
    let at = |n: usize| {
        let h = exact_pow2(1 - n as i64);
        let k = &kappa * (BigRational::one() - &h);
        let t = &tau + &gap * &h;
        let tt = &tau + &three * &gap * exact_pow2(-(n as i64) - 1);
        (k, t, tt)
    };
    let (mut k, mut t, mut tt) = at(1);
    if k != BigRational::zero() || t != sigma {
        return Ok(Some(1));
    }
    for n in 1..=sched.n_max {
        let (k1, t1, tt1) = at(n + 1);
        let ok = k < k1 && t1 < tt && tt < t && k < kappa && tau < t;
        if !ok {
            return Ok(Some(n));
        }
        (k, t, tt) = (k1, t1, tt1);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched() -> LevelSchedule {
        LevelSchedule {
            kappa: 3.0,
            tau: 1.0,
            sigma: 2.0,
            n_max: 30,
        }
    }

    #[test]
    fn first_steps() {
        let s = sched();
        let one = s.step(1).unwrap();
        assert_eq!((one.kappa, one.tau, one.tau_tilde), (0.0, 2.0, 1.75));
        assert_eq!(s.step(2).unwrap().kappa, 1.5);
        let far = s.step(30).unwrap();
        assert!((far.kappa - 3.0).abs() <= 1e-8 * 3.0 && (far.tau - 1.0).abs() <= 1e-8);
        assert!(s.step(0).is_err());
    }

    #[test]
    fn exact_interleaving() {
        assert_eq!(schedule_violation(&sched()).unwrap(), None);
        let odd = LevelSchedule {
            kappa: 0.1,
            tau: 1.1,
            sigma: 1.3,
            n_max: 200,
        };
        assert_eq!(schedule_violation(&odd).unwrap(), None);
        assert!(schedule_violation(&LevelSchedule {
            tau: 2.0,
            ..sched()
        })
        .is_err());
    }

    #[test]
    fn cylinders_shrink() {
        let s = sched();
        for n in 1..10 {
            let (a, b) = (
                s.cylinder(n + 1, 0.0, &[0.0]).unwrap(),
                s.tilde_cylinder(n, 0.0, &[0.0]).unwrap(),
            );
            assert!(a.r < b.r && b.r < s.cylinder(n, 0.0, &[0.0]).unwrap().r);
        }
    }
}
