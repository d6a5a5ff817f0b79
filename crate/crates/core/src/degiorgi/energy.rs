use crate::prelude::*;

use crate::embeddings::{in_energy_set_for_p0, ExponentConfig, CALIBRATION_MARGIN};
use crate::error::{ensure, Error, Result};
use crate::grid::{Cylinder, GridFunction, MAX_DIM};
use crate::norms::{gradient_magnitude, windowed_norm, MixedNormSpec};
use crate::pde::CoefficientField;
use crate::stats::log_log_slope;

use super::levels::{cut_after, level_truncate, support_indicator};

/// Space-time point around which the cylinders `Q_tau = [s - tau², s + tau²] x B_tau(z)`
/// are placed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Centre {
    pub s: f64,
    pub z: [f64; MAX_DIM],
}

impl Centre {
    pub fn origin() -> Self {
        Centre {
            s: 0.0,
            z: [0.0; MAX_DIM],
        }
    }

    pub fn cylinder(&self, tau: f64) -> Cylinder {
        Cylinder {
            s: self.s,
            z: self.z,
            r: tau,
        }
    }

    /// Errors unless `Q_tau` lies inside the sampled times and the grid box.
    pub fn check_inside(&self, u: &GridFunction, tau: f64) -> Result<()> {
        let tol = 1e-9 * (1.0 + tau);
        let (first, last) = (u.time.time(0), u.time.time(u.time.nt - 1));
        ensure(
            self.s - tau * tau >= first - tol && self.s + tau * tau <= last + tol,
            || {
                format!(
                    "cylinder time range [{}, {}] leaves the samples [{first}, {last}]",
                    self.s - tau * tau,
                    self.s + tau * tau
                )
            },
        )?;
        for i in 0..u.d() {
            ensure(
                self.z[i] - tau >= u.space.lo(i) - tol && self.z[i] + tau <= u.space.hi(i) + tol,
                || format!("cylinder of radius {tau} leaves the grid box on axis {i}"),
            )?;
        }
        Ok(())
    }
}

fn recip(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else {
        1.0 / x
    }
}

fn from_recip(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

/// The three `(r, s)` pairs of the energy estimate: `(2, 2)` for the cutoff terms,
/// `1/(2 p0) + 1/p2 + 1/r = 1/2`, `1/q2 + 1/s = 1/2` for the first drift, and
/// `1/p4 + 1/r = 1/2`, `1/q4 + 1/s = 1` for the forcing. Each must lie in the
/// energy-embedding set.
pub fn energy_pairs(cfg: &ExponentConfig) -> Result<[(f64, f64); 3]> {
    cfg.validate()?;
    let drift_r = 0.5 - 0.5 * recip(cfg.p0) - recip(cfg.p2);
    let drift_s = 0.5 - recip(cfg.q2);
    let force_r = 0.5 - recip(cfg.p4);
    let force_s = 1.0 - recip(cfg.q4);
    ensure(
        drift_r >= 0.0 && drift_s >= 0.0 && force_r >= 0.0 && force_s >= 0.0,
        || "drift or forcing exponents are too small for an energy pair".into(),
    )?;
    let pairs = [
        (2.0, 2.0),
        (from_recip(drift_r), from_recip(drift_s)),
        (from_recip(force_r), from_recip(force_s)),
    ];
    for (i, &(r, s)) in pairs.iter().enumerate() {
        ensure(in_energy_set_for_p0(cfg.d, cfg.p0, r, s)?, || {
            format!(
                "energy pair {} = ({r}, {s}) is outside the admissible set",
                i + 1
            )
        })?;
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyDiagnostic {
    /// `tau2 - tau1`.
    pub gap: f64,
    /// `||w 1_{t' <= t}||²` in the energy norm on `Q_{tau1}`.
    pub lhs: f64,
    /// Squared `L^{s_i, r_i}` norms of `1_{Q_{tau2}} w` for the first two pairs and
    /// `||f 1_{Q_{tau2}}||² ||1_{{w != 0} ∩ Q_{tau2}}||²` for the forcing pair.
    pub terms: [f64; 3],
}

impl EnergyDiagnostic {
    /// `gap^{-gamma} (terms[0] + terms[1]) + terms[2]`.
    pub fn rhs(&self, gamma: f64) -> f64 {
        self.gap.powf(-gamma) * (self.terms[0] + self.terms[1]) + self.terms[2]
    }
}

/// Both sides of the local energy estimate for `w = (u - kappa)^+` cut off after
/// time `t_cut`, on `Q_{tau1} ⊂ Q_{tau2}` around `centre`.
#[allow(clippy::too_many_arguments)]
pub fn energy_estimate_diagnostic(
    u: &GridFunction,
    field: &CoefficientField,
    kappa: f64,
    tau1: f64,
    tau2: f64,
    cfg: &ExponentConfig,
    centre: &Centre,
    t_cut: f64,
) -> Result<EnergyDiagnostic> {
    ensure(kappa >= 0.0, || {
        format!("level must be nonnegative (got {kappa})")
    })?;
    ensure(1.0 <= tau1 && tau1 < tau2 && tau2 <= 2.0, || {
        format!("need 1 <= tau1 < tau2 <= 2 (got {tau1}, {tau2})")
    })?;
    ensure(cfg.d == u.d() && field.d == u.d(), || {
        "dimensions of u, field and exponents differ".into()
    })?;
    centre.check_inside(u, tau2)?;
    let pairs = energy_pairs(cfg)?;
    let (q1, q2) = (centre.cylinder(tau1), centre.cylinder(tau2));
    let w = cut_after(&level_truncate(u, kappa), t_cut);
    let grad = cut_after(&gradient_magnitude(&level_truncate(u, kappa))?, t_cut);
    let sup = windowed_norm(&w, &MixedNormSpec::time_space(f64::INFINITY, 2.0), &q1)?;
    let dw = windowed_norm(&grad, &MixedNormSpec::space_time(cfg.kappa()?, 2.0), &q1)?;
    let ell = |(r, s): (f64, f64)| windowed_norm(&w, &MixedNormSpec::time_space(s, r), &q2);
    let f = field.forcing_grid(u.time, u.space, u.boundary)?;
    let f_norm = windowed_norm(&f, &MixedNormSpec::time_space(cfg.q4, cfg.p4), &q2)?;
    let (r3, s3) = pairs[2];
    let support = windowed_norm(
        &support_indicator(&w),
        &MixedNormSpec::time_space(s3, r3),
        &q2,
    )?;
    let out = EnergyDiagnostic {
        gap: tau2 - tau1,
        lhs: (sup + dw).powi(2),
        terms: [
            ell(pairs[0])?.powi(2),
            ell(pairs[1])?.powi(2),
            (f_norm * support).powi(2),
        ],
    };
    if !(out.lhs.is_finite() && out.terms.iter().all(|t| t.is_finite())) {
        return Err(Error::numerical(
            "energy diagnostic produced non-finite norms",
        ));
    }
    Ok(out)
}

/// Exponent and constant of the energy estimate fitted on a frozen family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyFit {
    pub gamma: f64,
    pub constant: f64,
}

impl EnergyFit {
    /// `gamma` is minus the log-log slope of `lhs / (sum of terms)` against the gap;
    /// the constant is `CALIBRATION_MARGIN` times the largest `lhs / rhs(gamma)`.
    pub fn from_family(family: &[EnergyDiagnostic]) -> Result<Self> {
        let used: Vec<&EnergyDiagnostic> = family.iter().filter(|e| e.lhs > 0.0).collect();
        for e in family {
            if e.lhs > 0.0 && e.terms.iter().sum::<f64>() == 0.0 {
                return Err(Error::numerical(
                    "positive energy with vanishing right-hand side",
                ));
            }
        }
        let first_gap = used.first().map(|e| e.gap);
        ensure(used.iter().any(|e| Some(e.gap) != first_gap), || {
            "the fitting family needs at least two gaps with positive energy".into()
        })?;
        let gaps: Vec<f64> = used.iter().map(|e| e.gap).collect();
        let ks: Vec<f64> = used
            .iter()
            .map(|e| e.lhs / e.terms.iter().sum::<f64>())
            .collect();
        let gamma = -log_log_slope(&gaps, &ks);
        let worst = used
            .iter()
            .map(|e| e.lhs / e.rhs(gamma))
            .fold(0.0, f64::max);
        Ok(EnergyFit {
            gamma,
            constant: CALIBRATION_MARGIN * worst,
        })
    }

    pub fn holds(&self, e: &EnergyDiagnostic) -> bool {
        e.lhs <= self.constant * e.rhs(self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, SpaceGrid, TimeGrid};
    use crate::pde::{solve, Diffusion, SolverConfig};

    fn heat_run(amplitude: f64, width: f64) -> (GridFunction, CoefficientField) {
        let space = SpaceGrid::cube(1, -3.0, 1.0 / 16.0, 96).unwrap();
        let u0 = GridFunction::from_fn(
            TimeGrid::new(-4.5, 1.0, 2).unwrap(),
            space,
            Boundary::ZeroExtension,
            |_, x| amplitude * (-(x[0] * x[0]) / (width * width)).exp(),
        )
        .unwrap();
        let field = CoefficientField::diffusion_only(1, Diffusion::Identity).unwrap();
        let mut cfg = SolverConfig::new(1.0 / 16.0, 4.5);
        cfg.t_start = -4.5;
        (solve(&field, &u0, &cfg).unwrap(), field)
    }

    #[test]
    fn pairs_for_bounded_coefficients() {
        let pairs = energy_pairs(&ExponentConfig::uniform(2)).unwrap();
        assert_eq!(pairs, [(2.0, 2.0), (2.0, 2.0), (2.0, 1.0)]);
        let mut cfg = ExponentConfig::uniform(2);
        cfg.p2 = 2.0;
        assert!(energy_pairs(&cfg).is_err());
    }

    #[test]
    fn below_level_gives_zero_energy() {
        let (u, field) = heat_run(1.0, 1.0);
        let cfg = ExponentConfig::uniform(1);
        let e = energy_estimate_diagnostic(&u, &field, 2.0, 1.0, 2.0, &cfg, &Centre::origin(), 4.0)
            .unwrap();
        assert_eq!(e.lhs, 0.0);
    }

    #[test]
    fn heat_family_fit_covers_fresh_runs() {
        let cfg = ExponentConfig::uniform(1);
        let mut family = Vec::new();
        for (amp, width) in [(1.0, 1.0), (2.0, 0.5)] {
            let (u, field) = heat_run(amp, width);
            for tau1 in [1.0, 1.5, 1.75, 1.875] {
                for t_cut in [0.0, 4.0] {
                    let e = energy_estimate_diagnostic(
                        &u,
                        &field,
                        0.0,
                        tau1,
                        2.0,
                        &cfg,
                        &Centre::origin(),
                        t_cut,
                    )
                    .unwrap();
                    assert!(e.lhs > 0.0 && e.terms[0] > 0.0);
                    family.push(e);
                }
            }
        }
        let fit = EnergyFit::from_family(&family).unwrap();
        assert!(fit.gamma.is_finite() && fit.constant > 0.0, "{fit:?}");
        let growth = family[2].rhs(fit.gamma) / family[0].rhs(fit.gamma);
        assert!((growth - 2f64.powf(fit.gamma)).abs() < 1e-12 * growth);
        for (amp, width, kappa) in [(1.5, 0.75, 0.0), (3.0, 1.25, 0.2), (0.5, 0.3, 0.0)] {
            let (u, field) = heat_run(amp, width);
            for tau1 in [1.25, 1.6] {
                let e = energy_estimate_diagnostic(
                    &u,
                    &field,
                    kappa,
                    tau1,
                    2.0,
                    &cfg,
                    &Centre::origin(),
                    2.0,
                )
                .unwrap();
                assert!(fit.holds(&e), "{e:?} vs {fit:?}");
            }
        }
    }

    #[test]
    fn cylinder_outside_domain_is_rejected() {
        let (u, field) = heat_run(1.0, 1.0);
        let cfg = ExponentConfig::uniform(1);
        let off = Centre {
            s: 1.0,
            z: [0.0; MAX_DIM],
        };
        assert!(energy_estimate_diagnostic(&u, &field, 0.0, 1.0, 2.0, &cfg, &off, 4.0).is_err());
        let wide = Centre {
            s: 0.0,
            z: [1.5, 0.0, 0.0],
        };
        assert!(energy_estimate_diagnostic(&u, &field, 0.0, 1.0, 2.0, &cfg, &wide, 4.0).is_err());
    }
}
