//! Admissible exponent sets and the space-time interpolation inequalities built
//! on them.
//!
//! Every admissibility predicate is evaluated in exact rational arithmetic on the
//! binary value of the given `f64` exponents, so algebraically equivalent forms of
//! a condition always agree, including on the boundary of the admissible set.

mod interpolation;

pub use interpolation::{
    calibrate_localized_gn, gn_ratio, localized_gn_check, LocalizedGnCheck, CALIBRATION_MARGIN,
};

use alloc::format;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{ensure, Error, Result};

/// Integrability exponents of the coefficients and of the forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExponentConfig {
    pub d: usize,
    /// Integrability of the inverse lower ellipticity bound.
    pub p0: f64,
    /// Integrability of the upper ellipticity bound.
    pub p1: f64,
    /// Space and time exponents of the first drift.
    pub p2: f64,
    pub q2: f64,
    /// Space and time exponents of the second drift.
    pub p3: f64,
    pub q3: f64,
    /// Space and time exponents of the forcing.
    pub p4: f64,
    pub q4: f64,
}

impl ExponentConfig {
    /// Configuration for uniformly elliptic, bounded coefficients and no drift.
    pub fn uniform(d: usize) -> Self {
        let inf = f64::INFINITY;
        ExponentConfig {
            d,
            p0: inf,
            p1: inf,
            p2: inf,
            q2: inf,
            p3: inf,
            q3: inf,
            p4: inf,
            q4: inf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure((1..=3).contains(&self.d), || {
            format!("dimension must be 1..=3 (got {})", self.d)
        })?;
        for (name, v) in [
            ("p0", self.p0),
            ("p1", self.p1),
            ("p2", self.p2),
            ("q2", self.q2),
            ("p3", self.p3),
            ("q3", self.q3),
            ("p4", self.p4),
            ("q4", self.q4),
        ] {
            check_exponent(name, v)?;
        }
        ensure(2.0 * self.p0 > self.d as f64, || {
            format!("p0 must exceed d/2 (got p0={}, d={})", self.p0, self.d)
        })
    }

    pub fn kappa(&self) -> Result<f64> {
        kappa_from_p0(self.p0, self.d)
    }

    /// `(1 - (d-1)/(2 p0))^{-1}`.
    pub fn theta1(&self) -> f64 {
        1.0 / (1.0 - (self.d as f64 - 1.0) / (2.0 * self.p0))
    }

    /// `(1 - d/(2 p0))^{-1}`.
    pub fn theta2(&self) -> f64 {
        1.0 / (1.0 - self.d as f64 / (2.0 * self.p0))
    }
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    ensure(v == f64::INFINITY || (v.is_finite() && v >= 1.0), || {
        format!("{name} must lie in [1, inf] (got {v})")
    })
}

/// Exact value of `1/p`, with `1/inf = 0`.
fn recip(p: f64) -> BigRational {
    if p == f64::INFINITY {
        BigRational::zero()
    } else {
        BigRational::from_float(p).expect("finite exponent").recip()
    }
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn half() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2))
}

/// `kappa` defined by `2/kappa = 1/p0 + 1`.
pub fn kappa_from_p0(p0: f64, d: usize) -> Result<f64> {
    check_exponent("p0", p0)?;
    ensure(2.0 * p0 > d as f64, || {
        format!("p0 must exceed d/2 (got p0={p0}, d={d})")
    })?;
    if p0 == f64::INFINITY {
        return Ok(2.0);
    }
    Ok(2.0 * p0 / (p0 + 1.0))
}

/// Exact `2/kappa = 1/p0 + 1`.
fn two_over_kappa(p0: f64) -> BigRational {
    recip(p0) + BigRational::one()
}

/// Membership of `(p, q)` in the forcing-type set: `1/p < (1 - 1/q)(2/d - 1/p0)`.
pub fn in_forcing_set(d: usize, p0: f64, p: f64, q: f64) -> Result<bool> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    check_exponent("p0", p0)?;
    let rhs = (BigRational::one() - recip(q)) * (int(2) / int(d as i64) - recip(p0));
    Ok(recip(p) < rhs)
}

/// Membership of `(r, s)` in the energy-embedding set:
/// `1/2 - 1/r < (1/s)(2/d + 1 - 2/kappa)` with `r >= 2`, `s >= 1`.
pub fn in_energy_set(d: usize, kappa: f64, r: f64, s: f64) -> Result<bool> {
    ensure(kappa >= 1.0, || {
        format!("kappa must be at least 1 (got {kappa})")
    })?;
    let two_over_k = int(2) * recip(kappa);
    energy_set_exact(d, two_over_k, r, s)
}

/// Same predicate with `kappa` derived exactly from `p0`.
pub fn in_energy_set_for_p0(d: usize, p0: f64, r: f64, s: f64) -> Result<bool> {
    check_exponent("p0", p0)?;
    energy_set_exact(d, two_over_kappa(p0), r, s)
}

fn energy_set_exact(d: usize, two_over_k: BigRational, r: f64, s: f64) -> Result<bool> {
    ensure(r >= 2.0, || format!("r must be at least 2 (got {r})"))?;
    ensure(s >= 1.0, || format!("s must be at least 1 (got {s})"))?;
    let lhs = half() - recip(r);
    let rhs = recip(s) * (int(2) / int(d as i64) + BigRational::one() - two_over_k);
    Ok(lhs < rhs)
}

/// Outcome of the first drift condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftCondition {
    Holds(bool),
    /// `p0 <= d`: the condition has no room and the first drift must vanish.
    DriftMustVanish,
}

/// First drift condition `1/(2 p0) + 1/p2 < (1/2 - 1/q2)(2/d - 1/p0)`, meaningful for `p0 > d`.
pub fn check_drift_condition(cfg: &ExponentConfig) -> Result<DriftCondition> {
    cfg.validate()?;
    if cfg.p0 <= cfg.d as f64 {
        return Ok(DriftCondition::DriftMustVanish);
    }
    let lhs = recip(cfg.p0) * half() + recip(cfg.p2);
    let rhs = (half() - recip(cfg.q2)) * (int(2) / int(cfg.d as i64) - recip(cfg.p0));
    Ok(DriftCondition::Holds(lhs < rhs))
}

/// Second drift condition
/// `(d-1) t1/p3 + (2 + t1 + d (t2 - t1))/q3 < 2` with `t1 = (1 - (d-1)/(2 p0))^{-1}`,
/// `t2 = (1 - d/(2 p0))^{-1}`.
pub fn check_divergence_drift_condition(cfg: &ExponentConfig) -> Result<bool> {
    cfg.validate()?;
    let d = int(cfg.d as i64);
    let ip0 = recip(cfg.p0);
    let t1 = (BigRational::one() - (d.clone() - int(1)) * ip0.clone() * half()).recip();
    let t2 = (BigRational::one() - d.clone() * ip0 * half()).recip();
    let lhs = (d.clone() - int(1)) * t1.clone() * recip(cfg.p3)
        + (int(2) + t1.clone() + d * (t2 - t1)) * recip(cfg.q3);
    Ok(lhs < int(2))
}

/// Joint ellipticity integrability `1/p0 + 1/p1 < 2/(d-1)`; always true for `d = 1`.
pub fn check_ellipticity_condition(cfg: &ExponentConfig) -> Result<bool> {
    cfg.validate()?;
    if cfg.d == 1 {
        return Ok(true);
    }
    Ok(recip(cfg.p0) + recip(cfg.p1) < int(2) / int(cfg.d as i64 - 1))
}

/// One row of an exponent sweep table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub d: usize,
    pub p0: f64,
    pub p: f64,
    pub q: f64,
    pub predicate: alloc::string::String,
    pub value: bool,
}

/// Evaluates a named predicate on `(d, p0, p, q)`; names are `forcing`, `energy`,
/// `drift` and `divergence-drift`.
pub fn evaluate_predicate(name: &str, d: usize, p0: f64, p: f64, q: f64) -> Result<bool> {
    let mut cfg = ExponentConfig::uniform(d);
    cfg.p0 = p0;
    match name {
        "forcing" => in_forcing_set(d, p0, p, q),
        "energy" => in_energy_set_for_p0(d, p0, p, q),
        "drift" => {
            cfg.p2 = p;
            cfg.q2 = q;
            match check_drift_condition(&cfg)? {
                DriftCondition::Holds(b) => Ok(b),
                DriftCondition::DriftMustVanish => Ok(false),
            }
        }
        "divergence-drift" => {
            cfg.p3 = p;
            cfg.q3 = q;
            check_divergence_drift_condition(&cfg)
        }
        other => Err(Error::validation(format!("unknown predicate {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn kappa_values() {
        assert_eq!(kappa_from_p0(INF, 3).unwrap(), 2.0);
        assert!((kappa_from_p0(3.0, 3).unwrap() - 1.5).abs() < 1e-15);
        assert!(kappa_from_p0(1.5, 3).is_err());
        assert!(kappa_from_p0(1.0, 1).is_ok());
    }

    #[test]
    fn forcing_set_examples() {
        assert!(in_forcing_set(3, INF, INF, INF).unwrap());
        // Boundary 1/p = 2/d with q = inf is excluded.
        assert!(!in_forcing_set(2, INF, 1.0, INF).unwrap());
        assert!(in_forcing_set(2, INF, 1.25, INF).unwrap());
    }

    #[test]
    fn energy_set_examples() {
        assert!(in_energy_set(3, 2.0, 2.0, 1.0).unwrap());
        assert!(in_energy_set(3, 2.0, 2.0, 7.0).unwrap());
        assert!(!in_energy_set(3, 2.0, INF, INF).unwrap());
        // 1/2 - 1/r = 1/2 against (1/s)(2/3) with s = 1: true; s = 2: false (1/3 < 1/2).
        assert!(in_energy_set(3, 2.0, INF, 1.0).unwrap());
        assert!(!in_energy_set(3, 2.0, INF, 2.0).unwrap());
        assert!(in_energy_set(1, 2.0, 4.0, 1.0).unwrap());
    }

    #[test]
    fn drift_condition_examples() {
        let mut cfg = ExponentConfig::uniform(3);
        assert_eq!(
            check_drift_condition(&cfg).unwrap(),
            DriftCondition::Holds(true)
        );
        // d/p2 + 2/q2 = 3/4 + 1/4 = 1 is the excluded boundary.
        cfg.p2 = 4.0;
        cfg.q2 = 8.0;
        assert_eq!(
            check_drift_condition(&cfg).unwrap(),
            DriftCondition::Holds(false)
        );
        cfg.p0 = 2.0;
        assert_eq!(
            check_drift_condition(&cfg).unwrap(),
            DriftCondition::DriftMustVanish
        );
    }

    #[test]
    fn divergence_drift_examples() {
        let mut cfg = ExponentConfig::uniform(3);
        assert!(check_divergence_drift_condition(&cfg).unwrap());
        // (d-1)/p3 + 3/q3 = 2/2 + 3/3 = 2 is the excluded boundary.
        cfg.p3 = 2.0;
        cfg.q3 = 3.0;
        assert!(!check_divergence_drift_condition(&cfg).unwrap());
        cfg.q3 = 3.5;
        assert!(check_divergence_drift_condition(&cfg).unwrap());
    }

    #[test]
    fn ellipticity_condition() {
        let mut cfg = ExponentConfig::uniform(3);
        cfg.p0 = 2.0;
        cfg.p1 = 2.0;
        assert!(!check_ellipticity_condition(&cfg).unwrap());
        cfg.p1 = 3.0;
        assert!(check_ellipticity_condition(&cfg).unwrap());
    }

    #[test]
    fn predicate_names() {
        assert!(evaluate_predicate("forcing", 3, INF, INF, INF).unwrap());
        assert!(evaluate_predicate("nope", 3, INF, INF, INF).is_err());
    }

    #[test]
    fn theta_values_at_infinity() {
        let cfg = ExponentConfig::uniform(3);
        assert_eq!(cfg.theta1(), 1.0);
        assert_eq!(cfg.theta2(), 1.0);
    }
}
