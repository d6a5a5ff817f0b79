use crate::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::grid::{Cylinder, GridFunction};
use crate::norms::{gradient_magnitude, mixed_norm, windowed_norm, MixedNormSpec};

/// Factor applied to the largest residual ratio seen during calibration.
pub const CALIBRATION_MARGIN: f64 = 2.0;

fn energy_denominator(d: usize, kappa: f64) -> f64 {
    2.0 / d as f64 + 1.0 - 2.0 / kappa
}

/// Quotient `||f||_{s,r} / (||grad f||_{2,kappa}^theta ||f||_{m,2}^(1-theta))`, all
/// norms time-outer, with `m = 2(1-theta)s/(2-s theta)`.
///
/// Requires the scaling relation `1/2 - 1/r = (theta/2)(2/d + 1 - 2/kappa)` to
/// within `1e-12` and `s theta <= 2`.
pub fn gn_ratio(f: &GridFunction, r: f64, s: f64, theta: f64, kappa: f64) -> Result<f64> {
    let d = f.d();
    ensure((0.0..=1.0).contains(&theta), || {
        format!("theta must lie in [0, 1] (got {theta})")
    })?;
    let mismatch = 0.5 - 1.0 / r - 0.5 * theta * energy_denominator(d, kappa);
    ensure(mismatch.abs() <= 1e-12, || {
        format!("scaling relation 1/2 - 1/r = (theta/2)(2/d + 1 - 2/kappa) fails by {mismatch:e}")
    })?;
    ensure(s * theta <= 2.0 + 1e-12, || {
        format!("need s*theta <= 2 (got {})", s * theta)
    })?;
    let lhs = mixed_norm(f, &MixedNormSpec::time_space(s, r))?;
    let m = low_exponent(s, theta);
    let low = if theta == 1.0 {
        1.0
    } else {
        mixed_norm(f, &MixedNormSpec::time_space(m, 2.0))?.powf(1.0 - theta)
    };
    let grad = if theta == 0.0 {
        1.0
    } else {
        mixed_norm(
            &gradient_magnitude(f)?,
            &MixedNormSpec::time_space(2.0, kappa),
        )?
        .powf(theta)
    };
    let rhs = grad * low;
    if rhs == 0.0 {
        return Err(Error::numerical(
            "interpolation quotient has a vanishing denominator",
        ));
    }
    Ok(lhs / rhs)
}

fn low_exponent(s: f64, theta: f64) -> f64 {
    let den = 2.0 - s * theta;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * (1.0 - theta) * s / den
    }
}

/// Interpolation weight fixed by `(r, kappa, d)`.
fn theta_for(d: usize, r: f64, kappa: f64) -> Result<f64> {
    let den = energy_denominator(d, kappa);
    ensure(den > 0.0, || {
        format!("kappa={kappa} leaves no admissible (r, s) in dimension {d}")
    })?;
    Ok((1.0 - 2.0 / r) / den)
}

/// Terms of the localized interpolation bound on `Q_tau = [-tau^2, tau^2] x B_tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedGnCheck {
    /// `||1_{Q_tau1} f||_{s,r}`.
    pub lhs: f64,
    /// `||1_{Q_tau2} grad f||_{2,kappa}`.
    pub gradient_term: f64,
    /// `(tau2 - tau1)^{-1} ||1_{Q_tau2} f||_{beta,2}`.
    pub lower_term: f64,
    /// Time exponent of the lower-order term.
    pub beta: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn localized_terms(
    f: &GridFunction,
    tau1: f64,
    tau2: f64,
    r: f64,
    s: f64,
    kappa: f64,
) -> Result<(f64, f64, f64, f64)> {
    ensure(1.0 <= tau1 && tau1 < tau2 && tau2 <= 2.0, || {
        format!("need 1 <= tau1 < tau2 <= 2 (got {tau1}, {tau2})")
    })?;
    let d = f.d();
    ensure(crate::embeddings::in_energy_set(d, kappa, r, s)?, || {
        format!("(r, s) = ({r}, {s}) is not admissible for kappa={kappa}, d={d}")
    })?;
    let theta = theta_for(d, r, kappa)?;
    // Hoelder on the bounded cylinder merges the two lower-order norms of the proof.
    let beta = low_exponent(s, theta).max(2.0);
    let inner = Cylinder::centred(tau1);
    let outer = Cylinder::centred(tau2);
    let lhs = windowed_norm(f, &MixedNormSpec::time_space(s, r), &inner)?;
    let grad = windowed_norm(
        &gradient_magnitude(f)?,
        &MixedNormSpec::time_space(2.0, kappa),
        &outer,
    )?;
    let lower = windowed_norm(f, &MixedNormSpec::time_space(beta, 2.0), &outer)? / (tau2 - tau1);
    Ok((lhs, grad, lower, beta))
}

/// Checks `lhs <= eps * gradient_term + c_eps * lower_term`.
#[allow(clippy::too_many_arguments)]
pub fn localized_gn_check(
    f: &GridFunction,
    tau1: f64,
    tau2: f64,
    r: f64,
    s: f64,
    kappa: f64,
    eps: f64,
    c_eps: f64,
) -> Result<LocalizedGnCheck> {
    ensure(eps > 0.0 && eps < 1.0, || {
        format!("eps must lie in (0, 1) (got {eps})")
    })?;
    let (lhs, gradient_term, lower_term, beta) = localized_terms(f, tau1, tau2, r, s, kappa)?;
    let rhs = eps * gradient_term + c_eps * lower_term;
    Ok(LocalizedGnCheck {
        lhs,
        gradient_term,
        lower_term,
        beta,
        rhs,
        holds: lhs <= rhs,
    })
}

/// Smallest constant making the bound hold on every (function, radius pair) of the
/// calibration family, times [`CALIBRATION_MARGIN`].
pub fn calibrate_localized_gn(
    family: &[GridFunction],
    pairs: &[(f64, f64)],
    r: f64,
    s: f64,
    kappa: f64,
    eps: f64,
) -> Result<f64> {
    ensure(eps > 0.0 && eps < 1.0, || {
        format!("eps must lie in (0, 1) (got {eps})")
    })?;
    let mut c = 0.0f64;
    for f in family {
        for &(tau1, tau2) in pairs {
            let (lhs, grad, lower, _) = localized_terms(f, tau1, tau2, r, s, kappa)?;
            let excess = lhs - eps * grad;
            if excess > 0.0 {
                if lower == 0.0 {
                    return Err(Error::numerical(
                        "calibration function has no lower-order mass",
                    ));
                }
                c = c.max(excess / lower);
            }
        }
    }
    Ok(CALIBRATION_MARGIN * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, SpaceGrid, TimeGrid};
    use alloc::vec::Vec;

    fn bump(width: f64, scale_t: f64, scale_x: f64) -> GridFunction {
        GridFunction::from_fn(
            TimeGrid::new(-3.0, 1.0 / 32.0, 192).unwrap(),
            SpaceGrid::cube(1, -3.0, 1.0 / 64.0, 384).unwrap(),
            Boundary::ZeroExtension,
            |t, x| {
                let (tt, xx) = (t * scale_t, x[0] * scale_x);
                let e = (tt * tt + xx * xx) / (width * width);
                if e < 1.0 {
                    (1.0 - e).powi(4)
                } else {
                    0.0
                }
            },
        )
        .unwrap()
    }

    #[test]
    fn theta_zero_gives_exactly_one() {
        let f = bump(1.0, 1.0, 1.0);
        assert_eq!(gn_ratio(&f, 2.0, 3.0, 0.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_broken_scaling_relation() {
        let f = bump(1.0, 1.0, 1.0);
        assert!(gn_ratio(&f, 4.0, 2.0, 0.5, 2.0).is_err());
        assert!(gn_ratio(&f, 4.0, 9.0, 0.25, 2.0).is_err());
    }

    #[test]
    fn quotient_is_scale_invariant() {
        // d = 1, kappa = 2: 1/2 - 1/r = theta.  theta = 1/4 gives r = 4.
        let base = gn_ratio(&bump(1.0, 1.0, 1.0), 4.0, 2.0, 0.25, 2.0).unwrap();
        for lam in [0.5, 2.0] {
            let scaled = bump(1.0, lam * lam, lam);
            let v = gn_ratio(&scaled, 4.0, 2.0, 0.25, 2.0).unwrap();
            assert!(
                v > 0.25 * base && v < 4.0 * base,
                "lambda={lam}: {v} vs {base}"
            );
            assert!((v / base - 1.0).abs() < 0.05, "lambda={lam}: {v} vs {base}");
        }
    }

    #[test]
    fn calibrated_constant_covers_fresh_functions() {
        let pairs = [(1.0, 2.0), (1.0, 1.5), (1.5, 2.0)];
        let family: Vec<GridFunction> = [0.6, 1.1, 1.7, 2.5, 10.0]
            .iter()
            .map(|&w| bump(w, 1.0, 1.0))
            .collect();
        let c = calibrate_localized_gn(&family, &pairs, 4.0, 2.0, 2.0, 0.5).unwrap();
        assert!(c > 0.0);
        for w in [0.8, 1.4, 2.1, 4.0] {
            for &(a, b) in &pairs {
                let chk =
                    localized_gn_check(&bump(w, 1.0, 1.0), a, b, 4.0, 2.0, 2.0, 0.5, c).unwrap();
                assert!(chk.holds, "width {w}, pair ({a}, {b}): {chk:?}");
            }
        }
    }
}
