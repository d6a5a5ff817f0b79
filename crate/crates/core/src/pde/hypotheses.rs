use crate::prelude::*;

use super::coefficients::{CoefficientField, Drift, Matrix};
use super::linalg::symmetric_eigen;
use crate::embeddings::{
    check_divergence_drift_condition, check_drift_condition, check_ellipticity_condition,
    DriftCondition, ExponentConfig,
};
use crate::error::{ensure, Error, Result};
use crate::grid::{Boundary, GridFunction, SpaceGrid, TimeGrid, MAX_DIM};
use crate::norms::{gradient, localized_norm, localized_space_norm, Lattice, MixedNormSpec};

/// Pointwise ellipticity bounds over the sampled times: `lambda(x)` is the smallest
/// eigenvalue and `mu(x) = sup |a xi|²/(xi.a xi)` the largest one.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityProfile {
    pub space: SpaceGrid,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

fn frobenius(a: &Matrix, d: usize) -> f64 {
    (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j] * a[i][j])
        .sum::<f64>()
        .sqrt()
}

/// Eigenvalues of a sampled matrix, or an error when it is not symmetric PSD.
fn checked_eigen(a: &Matrix, d: usize, t: f64, x: &[f64; MAX_DIM]) -> Result<[f64; MAX_DIM]> {
    let scale = frobenius(a, d);
    for i in 0..d {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * scale {
                return Err(Error::validation(format!(
                    "diffusion matrix is not symmetric at t = {t}, x = {:?}",
                    &x[..d]
                )));
            }
        }
    }
    let (vals, _) = symmetric_eigen(a, d);
    if !(vals[0] >= -1e-12 * scale) || !scale.is_finite() {
        return Err(Error::validation(format!(
            "diffusion matrix has eigenvalue {} at t = {t}, x = {:?}",
            vals[0],
            &x[..d]
        )));
    }
    Ok(vals)
}

pub fn ellipticity_profiles(
    field: &CoefficientField,
    space: &SpaceGrid,
    t_samples: &[f64],
) -> Result<EllipticityProfile> {
    ensure(!t_samples.is_empty(), || {
        "need at least one time sample".into()
    })?;
    ensure(space.d == field.d, || {
        "grid and field dimensions differ".into()
    })?;
    let d = field.d;
    let mut lambda = vec![f64::INFINITY; space.len()];
    let mut mu = vec![0.0f64; space.len()];
    for c in 0..space.len() {
        let x = space.centre(c);
        for &t in t_samples {
            let vals = checked_eigen(&field.diffusion(t, &x), d, t, &x)?;
            lambda[c] = lambda[c].min(vals[0].max(0.0));
            mu[c] = mu[c].max(vals[d - 1]);
        }
    }
    Ok(EllipticityProfile {
        space: *space,
        lambda,
        mu,
    })
}

/// `count` unit directions: equally spaced angles for `d = 2`, a Fibonacci sphere
/// for `d = 3` and `{±1}` for `d = 1`.
pub fn unit_directions(d: usize, count: usize) -> Vec<[f64; MAX_DIM]> {
    match d {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..count)
            .map(|k| {
                let th = core::f64::consts::TAU * k as f64 / count as f64;
                [th.cos(), th.sin(), 0.0]
            })
            .collect(),
        _ => {
            let golden = core::f64::consts::PI * (3.0 - 5.0f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    [r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
    }
}

/// Brute-force `sup_xi |a xi|²/(xi.a xi)` over the given directions together with
/// the eigenvectors of `a`; directions with `xi.a xi = 0` are skipped.
pub fn directional_mu(a: &Matrix, d: usize, directions: &[[f64; MAX_DIM]]) -> f64 {
    let (_, vecs) = symmetric_eigen(a, d);
    let eig_dirs = (0..d).map(|k| {
        let mut v = [0.0; MAX_DIM];
        for r in 0..d {
            v[r] = vecs[r][k];
        }
        v
    });
    let mut best = 0.0f64;
    for xi in directions.iter().copied().chain(eig_dirs) {
        let mut ax = [0.0; MAX_DIM];
        for i in 0..d {
            ax[i] = (0..d).map(|j| a[i][j] * xi[j]).sum();
        }
        let quad: f64 = (0..d).map(|i| xi[i] * ax[i]).sum();
        if quad > 0.0 {
            best = best.max((0..d).map(|i| ax[i] * ax[i]).sum::<f64>() / quad);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// Radius-1 localized `L^{p0}` norm of `1/lambda`.
    pub lambda_inv_norm: f64,
    /// Radius-1 localized `L^{p1}` norm of `mu`.
    pub mu_norm: f64,
    /// Localized time-outer `(q2, p2)` norm of `|b1|`.
    pub b1_norm: f64,
    /// Localized space-outer `(p3, q3)` norm of `|b2|`.
    pub b2_norm: f64,
    /// `int (div b2)^-` over the sampled cylinder, from centred differences.
    pub div_b2_negative_mass: f64,
    /// Cells where `lambda` vanishes.
    pub degenerate_cells: usize,
    pub ellipticity_condition: bool,
    pub drift_condition: DriftCondition,
    pub divergence_drift_condition: bool,
    pub holds: bool,
}

fn drift_grid(
    drift: &Drift,
    d: usize,
    time: TimeGrid,
    space: SpaceGrid,
    axis: Option<usize>,
) -> Result<GridFunction> {
    GridFunction::from_fn(time, space, Boundary::ZeroExtension, |t, x| {
        let b = drift.eval(d, t, x);
        match axis {
            Some(i) => b[i],
            None => b[..d].iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    })
}

/// Evaluates the integrability hypotheses on the coefficient samples of the given
/// grid. Localized norms use radius-1 windows on `lattice`.
pub fn check_hypotheses(
    field: &CoefficientField,
    cfg: &ExponentConfig,
    time: TimeGrid,
    space: SpaceGrid,
    lattice: &Lattice,
) -> Result<HypothesisReport> {
    cfg.validate()?;
    ensure(cfg.d == field.d && space.d == field.d, || {
        "field, grid and exponent dimensions differ".into()
    })?;
    let d = field.d;
    let t_samples: Vec<f64> = (0..time.nt).map(|k| time.time(k)).collect();
    let prof = ellipticity_profiles(field, &space, &t_samples)?;
    let degenerate_cells = prof.lambda.iter().filter(|&&l| l == 0.0).count();
    let lambda_inv_norm = if degenerate_cells > 0 {
        f64::INFINITY
    } else {
        let inv: Vec<f64> = prof.lambda.iter().map(|l| 1.0 / l).collect();
        localized_space_norm(&space, &inv, cfg.p0, 1.0, lattice)?
    };
    let mu_norm = localized_space_norm(&space, &prof.mu, cfg.p1, 1.0, lattice)?;
    let b1_norm = if field.b1.is_zero() {
        0.0
    } else {
        let g = drift_grid(&field.b1, d, time, space, None)?;
        localized_norm(&g, &MixedNormSpec::time_space(cfg.q2, cfg.p2), 1.0, lattice)?.value
    };
    let (b2_norm, div_b2_negative_mass) = if field.b2.is_zero() {
        (0.0, 0.0)
    } else {
        let g = drift_grid(&field.b2, d, time, space, None)?;
        let norm =
            localized_norm(&g, &MixedNormSpec::space_time(cfg.p3, cfg.q3), 1.0, lattice)?.value;
        let mut div = vec![0.0; time.nt * space.len()];
        for i in 0..d {
            let comp = drift_grid(&field.b2, d, time, space, Some(i))?;
            let grad = gradient(&comp)?;
            for (acc, v) in div.iter_mut().zip(grad[i].values()) {
                *acc += v;
            }
        }
        let w = space.cell_volume() * time.dt;
        (norm, div.iter().map(|v| (-v).max(0.0)).sum::<f64>() * w)
    };
    let ellipticity_condition = check_ellipticity_condition(cfg)?;
    let drift_condition = check_drift_condition(cfg)?;
    let divergence_drift_condition = check_divergence_drift_condition(cfg)?;
    let drift_ok = match drift_condition {
        DriftCondition::Holds(ok) => ok,
        DriftCondition::DriftMustVanish => field.b1.is_zero(),
    };
    let holds = lambda_inv_norm.is_finite()
        && mu_norm.is_finite()
        && b1_norm.is_finite()
        && b2_norm.is_finite()
        && div_b2_negative_mass == 0.0
        && ellipticity_condition
        && drift_ok
        && (field.b2.is_zero() || divergence_drift_condition);
    Ok(HypothesisReport {
        lambda_inv_norm,
        mu_norm,
        b1_norm,
        b2_norm,
        div_b2_negative_mass,
        degenerate_cells,
        ellipticity_condition,
        drift_condition,
        divergence_drift_condition,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffFamily;
    use crate::pde::coefficients::{Diffusion, Forcing};

    #[test]
    fn identity_profiles() {
        let field = CoefficientField::diffusion_only(3, Diffusion::Identity).unwrap();
        let space = SpaceGrid::cube(3, -1.0, 0.5, 4).unwrap();
        let p = ellipticity_profiles(&field, &space, &[0.0, 0.5]).unwrap();
        assert!(p.lambda.iter().chain(&p.mu).all(|&v| v == 1.0));
    }

    #[test]
    fn diagonal_matrix_brute_force() {
        let a = [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]];
        let dirs = unit_directions(2, 10_000);
        let mut lam = f64::INFINITY;
        for xi in &dirs {
            lam = lam.min(4.0 * xi[0] * xi[0] + xi[1] * xi[1]);
        }
        assert!((lam - 1.0).abs() < 1e-12);
        assert_eq!(directional_mu(&a, 2, &dirs), 4.0);
        let field = CoefficientField::diffusion_only(2, Diffusion::Constant(a)).unwrap();
        let p = ellipticity_profiles(&field, &SpaceGrid::cube(2, 0.0, 1.0, 2).unwrap(), &[0.0])
            .unwrap();
        assert_eq!((p.lambda[0], p.mu[0]), (1.0, 4.0));
    }

    #[test]
    fn brute_force_mu_matches_largest_eigenvalue() {
        let dirs = unit_directions(3, 4000);
        for k in 0..20 {
            let s = k as f64 * 0.37;
            let b = [
                [1.0, s.sin(), 0.2],
                [0.0, 1.0 + s.cos(), -0.4],
                [0.3, 0.1, 0.5 + s],
            ];
            let mut a = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = (0..3).map(|m| b[i][m] * b[j][m]).sum();
                }
            }
            let (vals, _) = symmetric_eigen(&a, 3);
            let mu = directional_mu(&a, 3, &dirs);
            assert!(
                (mu - vals[2]).abs() <= 1e-6 * vals[2],
                "{mu} vs {}",
                vals[2]
            );
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0; 3]];
        let field = CoefficientField::diffusion_only(2, Diffusion::Constant(a)).unwrap();
        let err = ellipticity_profiles(&field, &SpaceGrid::cube(2, 0.0, 1.0, 2).unwrap(), &[0.0])
            .unwrap_err();
        assert!(err.message.contains("eigenvalue"));
    }

    #[test]
    fn radial_power_profiles_coincide() {
        let fam = CutoffFamily::new(2.0, Some(3)).unwrap();
        let field = CoefficientField::diffusion_only(
            3,
            Diffusion::RadialPower {
                alpha: 0.3,
                family: fam,
            },
        )
        .unwrap();
        let space = SpaceGrid::cube(3, -1.5, 0.5, 6).unwrap();
        let p = ellipticity_profiles(&field, &space, &[0.0]).unwrap();
        for c in 0..space.len() {
            let x = space.centre(c);
            let want = fam.power(-0.3, x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            assert!(
                (p.lambda[c] - want).abs() <= 1e-15 * want
                    && (p.mu[c] - want).abs() <= 1e-15 * want
            );
        }
    }

    #[test]
    fn uniform_configuration_holds() {
        let field = CoefficientField::diffusion_only(3, Diffusion::Identity).unwrap();
        let r = check_hypotheses(
            &field,
            &ExponentConfig::uniform(3),
            TimeGrid::new(0.0, 0.5, 2).unwrap(),
            SpaceGrid::cube(3, -1.0, 0.5, 4).unwrap(),
            &Lattice { step: 0.5 },
        )
        .unwrap();
        assert!(r.holds, "{r:?}");
        assert_eq!(r.lambda_inv_norm, 1.0);
    }

    #[test]
    fn rotation_divergence_vanishes_exactly() {
        let field = CoefficientField::new(
            2,
            Diffusion::Identity,
            Drift::Zero,
            Drift::Rotation {
                omega: 1.5,
                rho: 2.0,
            },
            Forcing::Zero,
        )
        .unwrap();
        let r = check_hypotheses(
            &field,
            &ExponentConfig::uniform(2),
            TimeGrid::new(0.0, 0.25, 4).unwrap(),
            SpaceGrid::cube(2, -2.0, 0.25, 16).unwrap(),
            &Lattice::default(),
        )
        .unwrap();
        assert_eq!(r.div_b2_negative_mass, 0.0);
        assert!(r.b2_norm > 0.0 && r.holds);
    }

    #[test]
    fn degenerate_field_fails_without_error() {
        let fam = CutoffFamily::new(2.0, None).unwrap();
        let field = CoefficientField::diffusion_only(
            2,
            Diffusion::SwappedPower {
                alpha: 0.2,
                family: fam,
            },
        )
        .unwrap();
        let mut cfg = ExponentConfig::uniform(2);
        cfg.p0 = 4.0;
        let space = SpaceGrid::new(&[-1.25, -1.25], &[0.5, 0.5], &[5, 5]).unwrap();
        let r = check_hypotheses(
            &field,
            &cfg,
            TimeGrid::new(0.0, 0.5, 2).unwrap(),
            space,
            &Lattice::default(),
        )
        .unwrap();
        assert!(r.degenerate_cells > 0 && !r.holds && r.lambda_inv_norm.is_infinite());
    }
}
