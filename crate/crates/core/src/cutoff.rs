//! Truncate-and-shift family that turns power-law coefficients into bounded,
//! smooth ones: `phi_R(r) = r` for `r <= R`, `phi_R(r) = R + 1` for `r >= 2R`,
//! `f_R^(alpha)(r) = phi_R(r)^alpha` and `f_{R,n}^(alpha)(r) = phi_R(r + 1/n)^alpha`.
//!
//! The blend on `[R, 2R]` keeps `0 <= phi_R' <= 1`: slope 1 up to `max(R, 2)`, then
//! a slope decreasing linearly to 0, reaching `R + 1` at `min(R + 2, 2R)`. It is C¹
//! for `R > 1`; at `R = 1` the blend has zero width and `phi_1` has a kink at 2.

use crate::prelude::*;

use crate::error::{ensure, Result};

/// Start and length of the slope ramp.
fn ramp(big_r: f64) -> (f64, f64) {
    if big_r >= 2.0 {
        (big_r, 2.0)
    } else {
        (2.0, 2.0 * (big_r - 1.0))
    }
}

pub fn phi_r(r: f64, big_r: f64) -> f64 {
    let (start, len) = ramp(big_r);
    if r <= start {
        r
    } else if r >= start + len {
        big_r + 1.0
    } else {
        let s = r - start;
        start + s - s * s / (2.0 * len)
    }
}

pub fn phi_r_prime(r: f64, big_r: f64) -> f64 {
    let (start, len) = ramp(big_r);
    if r <= start {
        1.0
    } else if r >= start + len {
        0.0
    } else {
        1.0 - (r - start) / len
    }
}

/// `phi_R` together with the shift `1/n`; `n = None` is the unshifted field.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CutoffFamily {
    pub big_r: f64,
    pub n: Option<u32>,
}

impl CutoffFamily {
    pub fn new(big_r: f64, n: Option<u32>) -> Result<Self> {
        ensure(big_r >= 1.0 && big_r.is_finite(), || {
            format!("cutoff radius R must be finite and at least 1 (got {big_r})")
        })?;
        ensure(n != Some(0), || {
            "mollification index n must be at least 1".into()
        })?;
        Ok(CutoffFamily { big_r, n })
    }

    pub fn shift(&self) -> f64 {
        self.n.map_or(0.0, |n| 1.0 / n as f64)
    }

    /// `f_{R,n}^(alpha)(r)`.
    pub fn power(&self, alpha: f64, r: f64) -> f64 {
        phi_r(r + self.shift(), self.big_r).powf(alpha)
    }

    /// Derivative of `r -> f_{R,n}^(alpha)(r)`.
    pub fn power_prime(&self, alpha: f64, r: f64) -> f64 {
        let rho = r + self.shift();
        alpha * phi_r(rho, self.big_r).powf(alpha - 1.0) * phi_r_prime(rho, self.big_r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_values() {
        for big_r in [1.0, 1.5, 2.0, 4.0, 10.0] {
            assert_eq!(phi_r(big_r / 2.0, big_r), big_r / 2.0);
            assert_eq!(phi_r(3.0 * big_r, big_r), big_r + 1.0);
            assert_eq!(phi_r(2.0 * big_r, big_r), big_r + 1.0);
        }
    }

    #[test]
    fn monotone_and_c1() {
        for big_r in [1.25, 2.0, 3.0, 5.0, 16.0] {
            let (start, len) = ramp(big_r);
            for k in 0..1000 {
                let r = 3.0 * big_r * k as f64 / 999.0;
                let h = 1e-7;
                let fd = (phi_r(r + h, big_r) - phi_r(r, big_r)) / h;
                assert!(fd >= -1e-12 && phi_r_prime(r, big_r) >= 0.0);
            }
            for knot in [start, start + len] {
                let jump = phi_r_prime(knot + 1e-12, big_r) - phi_r_prime(knot - 1e-12, big_r);
                assert!(jump.abs() < 1e-8, "R={big_r} jump {jump}");
            }
        }
    }

    #[test]
    fn shift_caps_negative_powers() {
        let fam = CutoffFamily::new(4.0, Some(8)).unwrap();
        for k in 0..1000 {
            let r = (4.0 - 0.125) * k as f64 / 999.0;
            assert!(fam.power(-0.4, r) <= 8f64.powf(0.4) * (1.0 + 1e-15));
        }
        assert!(CutoffFamily::new(0.5, None).is_err());
        assert!(CutoffFamily::new(2.0, Some(0)).is_err());
    }
}
