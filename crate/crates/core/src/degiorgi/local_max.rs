use crate::prelude::*;

use crate::embeddings::ExponentConfig;
use crate::error::{ensure, Error, Result};
use crate::grid::{Cylinder, GridFunction};
use crate::norms::{windowed_norm, MixedNormSpec};
use crate::pde::CoefficientField;

use super::energy::Centre;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalMaxReport {
    /// `||u^+ 1_{Q_1}||_inf`.
    pub lhs: f64,
    /// `||u^+ 1_{Q_2}||_{L^{p,p}}`.
    pub u_norm: f64,
    /// `||f 1_{Q_2}||_{L^{q4,p4}_{t,x}}`.
    pub f_norm: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `None` when `rhs = 0`.
    pub ratio: Option<f64>,
    /// `lhs > 0` with `rhs = 0`, which only discretization can produce.
    pub anomaly: bool,
}

/// `(int_cyl |f|^p)^(1/p)` for any `p > 0`, with `p = inf` the maximum.
fn power_norm(f: &GridFunction, cyl: &Cylinder, p: f64) -> f64 {
    let mut cells = Vec::new();
    f.space.ball_cells(&cyl.z, cyl.r, &mut cells);
    let w = f.space.cell_volume() * f.time.dt;
    let mut acc = 0.0f64;
    for k in (0..f.time.nt).filter(|&k| cyl.contains_time(f.time.time(k))) {
        let row = f.slice(k);
        for &c in &cells {
            let v = row[c].abs();
            if p == f64::INFINITY {
                acc = acc.max(v);
            } else {
                acc += v.powf(p) * w;
            }
        }
    }
    if p == f64::INFINITY {
        acc
    } else {
        acc.powf(1.0 / p)
    }
}

/// Both sides of the local maximum estimate on `Q_1 = [s-1, s+1] x B_1(z)` and
/// `Q_2 = [s-4, s+4] x B_2(z)`.
pub fn local_max_diagnostic(
    u: &GridFunction,
    field: &CoefficientField,
    cfg: &ExponentConfig,
    p: f64,
    centre: &Centre,
) -> Result<LocalMaxReport> {
    cfg.validate()?;
    ensure(p > 0.0, || format!("p must be positive (got {p})"))?;
    ensure(cfg.d == u.d() && field.d == u.d(), || {
        "dimensions of u, field and exponents differ".into()
    })?;
    centre.check_inside(u, 2.0)?;
    let (q1, q2) = (centre.cylinder(1.0), centre.cylinder(2.0));
    let up = u.map(|v| v.max(0.0));
    let lhs = power_norm(&up, &q1, f64::INFINITY);
    let u_norm = power_norm(&up, &q2, p);
    let f = field.forcing_grid(u.time, u.space, u.boundary)?;
    let f_norm = windowed_norm(&f, &MixedNormSpec::time_space(cfg.q4, cfg.p4), &q2)?;
    let rhs = u_norm + f_norm;
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(Error::numerical(
            "local maximum diagnostic produced non-finite norms",
        ));
    }
    Ok(LocalMaxReport {
        lhs,
        u_norm,
        f_norm,
        rhs,
        ratio: (rhs > 0.0).then(|| lhs / rhs),
        anomaly: lhs > 0.0 && rhs == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, SpaceGrid, TimeGrid, MAX_DIM};
    use crate::pde::{solve, Diffusion, Forcing, SolverConfig};

    fn bump_run(h: f64, scale: f64) -> (GridFunction, CoefficientField) {
        let n = (6.0 / h).round() as usize;
        let space = SpaceGrid::cube(1, -3.0, h, n).unwrap();
        let u0 = GridFunction::zeros(
            TimeGrid::new(-4.5, 1.0, 2).unwrap(),
            space,
            Boundary::ZeroExtension,
        );
        let bump = Forcing::Bump {
            amplitude: scale,
            centre: [0.0; MAX_DIM],
            radius: 1.0,
            t_lo: -4.5,
            t_hi: 0.0,
        };
        let field = CoefficientField::diffusion_only(1, Diffusion::Identity)
            .unwrap()
            .with_forcing(bump)
            .unwrap();
        let mut cfg = SolverConfig::new(h, 4.5);
        cfg.t_start = -4.5;
        (solve(&field, &u0, &cfg).unwrap(), field)
    }

    #[test]
    fn nonpositive_solution_has_zero_lhs() {
        let (u, field) = bump_run(1.0 / 8.0, 1.0);
        let neg = u.scale(-1.0);
        let r = local_max_diagnostic(
            &neg,
            &field.scaled_forcing(-1.0),
            &ExponentConfig::uniform(1),
            2.0,
            &Centre::origin(),
        )
        .unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(!r.anomaly);
    }

    #[test]
    fn ratio_is_homogeneous_and_stable() {
        let cfg = ExponentConfig::uniform(1);
        let (u, field) = bump_run(1.0 / 8.0, 1.0);
        let base = local_max_diagnostic(&u, &field, &cfg, 2.0, &Centre::origin()).unwrap();
        let (u3, field3) = bump_run(1.0 / 8.0, 3.0);
        let tripled = local_max_diagnostic(&u3, &field3, &cfg, 2.0, &Centre::origin()).unwrap();
        let (a, b) = (base.ratio.unwrap(), tripled.ratio.unwrap());
        assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
        let (uf, fieldf) = bump_run(1.0 / 16.0, 1.0);
        let fine = local_max_diagnostic(&uf, &fieldf, &cfg, 2.0, &Centre::origin())
            .unwrap()
            .ratio
            .unwrap();
        assert!((fine / a - 1.0).abs() <= 0.2, "{a} vs {fine}");
        for p in [0.5, 1.0, 4.0] {
            let r = local_max_diagnostic(&u, &field, &cfg, p, &Centre::origin()).unwrap();
            assert!(r.ratio.unwrap().is_finite() && r.lhs > 0.0);
        }
    }

    #[test]
    fn power_norm_matches_mixed_norm() {
        let (u, _) = bump_run(1.0 / 8.0, 1.0);
        let cyl = Cylinder::new(0.0, &[0.0], 2.0);
        let a = power_norm(&u, &cyl, 3.0);
        let b = windowed_norm(&u, &MixedNormSpec::time_space(3.0, 3.0), &cyl).unwrap();
        assert!((a - b).abs() <= 1e-12 * b);
    }
}
