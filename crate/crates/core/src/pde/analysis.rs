use crate::prelude::*;

use super::coefficients::CoefficientField;
use crate::embeddings::{in_forcing_set, ExponentConfig};
use crate::error::{ensure, Error, Result};
use crate::grid::{GridFunction, TimeGrid, MAX_DIM};
use crate::norms::{gradient, localized_norm, v_norm, EnergyNorm, Lattice, MixedNormSpec};

/// Smooth bump `psi((t - t_centre)/t_half_width) psi(|x - centre|/radius)` with
/// `psi(s) = (1 - s²)^4` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestFunction {
    pub t_centre: f64,
    pub t_half_width: f64,
    pub centre: [f64; MAX_DIM],
    pub radius: f64,
}

fn bump(s2: f64) -> (f64, f64) {
    if s2 >= 1.0 {
        (0.0, 0.0)
    } else {
        let w = 1.0 - s2;
        (w.powi(4), -4.0 * w.powi(3))
    }
}

impl TestFunction {
    fn space_part(&self, d: usize, x: &[f64; MAX_DIM]) -> (f64, [f64; MAX_DIM]) {
        let r2 = self.radius * self.radius;
        let s2: f64 = (0..d).map(|i| (x[i] - self.centre[i]).powi(2)).sum::<f64>() / r2;
        let (v, dv) = bump(s2);
        let mut g = [0.0; MAX_DIM];
        for i in 0..d {
            g[i] = dv * 2.0 * (x[i] - self.centre[i]) / r2;
        }
        (v, g)
    }

    fn time_part(&self, t: f64) -> (f64, f64) {
        let s = (t - self.t_centre) / self.t_half_width;
        let (v, dv) = bump(s * s);
        (v, dv * 2.0 * s / self.t_half_width)
    }

    /// `(phi, d phi/dt, grad phi)`.
    pub fn eval(&self, d: usize, t: f64, x: &[f64; MAX_DIM]) -> (f64, f64, [f64; MAX_DIM]) {
        let (s, gs) = self.space_part(d, x);
        let (p, dp) = self.time_part(t);
        let mut g = [0.0; MAX_DIM];
        for i in 0..d {
            g[i] = p * gs[i];
        }
        (p * s, dp * s, g)
    }

    fn check_inside(&self, u: &GridFunction) -> Result<()> {
        let sp = &u.space;
        let (first, last) = (u.time.time(0), u.time.time(u.time.nt - 1));
        ensure(self.t_half_width > 0.0 && self.radius > 0.0, || {
            "test function needs positive widths".into()
        })?;
        ensure(
            self.t_centre - self.t_half_width >= first && self.t_centre + self.t_half_width <= last,
            || format!("test function time support leaves [{first}, {last}]"),
        )?;
        for i in 0..sp.d {
            let margin = sp.dx[i];
            ensure(
                self.centre[i] - self.radius >= sp.lo(i) + margin
                    && self.centre[i] + self.radius <= sp.hi(i) - margin,
                || format!("test function support touches the box boundary on axis {i}"),
            )?;
        }
        Ok(())
    }
}

/// Bumps of radius a quarter of the shortest box side, at the box centre and halfway
/// towards each lower corner, over the middle half of the time range.
pub fn default_test_bank(u: &GridFunction) -> Vec<TestFunction> {
    let sp = &u.space;
    let side = (0..sp.d)
        .map(|i| sp.hi(i) - sp.lo(i))
        .fold(f64::INFINITY, f64::min);
    let radius = 0.25 * side;
    let (first, last) = (u.time.time(0), u.time.time(u.time.nt - 1));
    let mut centre = [0.0; MAX_DIM];
    for i in 0..sp.d {
        centre[i] = 0.5 * (sp.lo(i) + sp.hi(i));
    }
    let mut bank = Vec::new();
    for shift in [0.0, -0.1 * side] {
        let mut c = centre;
        for v in c.iter_mut().take(sp.d) {
            *v += shift;
        }
        bank.push(TestFunction {
            t_centre: 0.5 * (first + last),
            t_half_width: 0.3 * (last - first),
            centre: c,
            radius,
        });
    }
    bank
}

/// Largest `|-<<u, phi_t>> + <<a grad u, grad phi>> - <<b.grad u, phi>> - <<f, phi>>|`
/// over the bank. The time derivative is moved onto `phi` by summation by parts,
/// `-sum_k u^k (phi^{k+1} - phi^k)`, and the other terms use the rectangle rule at
/// the samples, which is the time discretization of the implicit solver. Space
/// integrals use the midpoint rule and `grad u` centred differences.
pub fn weak_residual(
    u: &GridFunction,
    field: &CoefficientField,
    bank: &[TestFunction],
) -> Result<f64> {
    ensure(!bank.is_empty(), || "test bank is empty".into())?;
    ensure(u.d() == field.d, || {
        "field and solution dimensions differ".into()
    })?;
    for phi in bank {
        phi.check_inside(u)?;
    }
    let d = field.d;
    let grad = gradient(u)?;
    let ns = u.nspace();
    let dv = u.space.cell_volume();
    let nt = u.time.nt;
    let mut worst = 0.0f64;
    for phi in bank {
        let mut total = 0.0;
        for k in 0..nt {
            let t = u.time.time(k);
            let dt = u.time.dt;
            let (p_now, _) = phi.time_part(t);
            let (p_next, _) = phi.time_part(t + dt);
            let mut slice = 0.0;
            for c in 0..ns {
                let x = u.space.centre(c);
                let (sp, gs) = phi.space_part(d, &x);
                let (p, pt) = (p_now * sp, (p_next - p_now) * sp / dt);
                let mut gp = [0.0; MAX_DIM];
                for i in 0..d {
                    gp[i] = p_now * gs[i];
                }
                if p == 0.0 && pt == 0.0 {
                    continue;
                }
                let mut gu = [0.0; MAX_DIM];
                for i in 0..d {
                    gu[i] = grad[i].get(k, c);
                }
                let a = field.diffusion(t, &x);
                let b = field.drift(t, &x);
                let mut flux = 0.0;
                let mut adv = 0.0;
                for i in 0..d {
                    let agu: f64 = (0..d).map(|j| a[i][j] * gu[j]).sum();
                    flux += agu * gp[i];
                    adv += b[i] * gu[i];
                }
                slice += -u.get(k, c) * pt + flux - adv * p - field.forcing(t, &x) * p;
            }
            total += slice * dv * dt;
        }
        worst = worst.max(total.abs());
    }
    Ok(worst)
}

/// Forward time average `(1/h) int_0^h u(t + s) ds` by the trapezoid rule over the
/// samples; samples past the end count as zero.
pub fn steklov_mean(u: &GridFunction, h: f64) -> Result<GridFunction> {
    let dt = u.time.dt;
    ensure(h >= dt * (1.0 - 1e-12), || {
        format!("Steklov width {h} is below dt = {dt}")
    })?;
    let m = (h / dt).round();
    ensure((m * dt - h).abs() <= 1e-9 * h, || {
        format!("Steklov width {h} is not a multiple of dt = {dt}")
    })?;
    let m = m as usize;
    let ns = u.nspace();
    let nt = u.time.nt;
    let mut out = alloc::vec![0.0; u.values().len()];
    for k in 0..nt {
        let row = &mut out[k * ns..(k + 1) * ns];
        for j in 0..=m {
            if k + j >= nt {
                break;
            }
            let w = if j == 0 || j == m { 0.5 } else { 1.0 } / m as f64;
            for (o, v) in row.iter_mut().zip(u.slice(k + j)) {
                *o += w * v;
            }
        }
    }
    u.with_values(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaxPrincipleReport {
    pub u_inf: f64,
    pub v_norm: EnergyNorm,
    /// Localized time-outer `(q4, p4)` norm of the forcing over `[t_start, t_final]`.
    pub f_norm: f64,
    /// `(u_inf + v_norm) / f_norm`; `None` when the forcing vanishes.
    pub ratio: Option<f64>,
}

/// Samples of `u` at times up to `t_final`.
fn truncate(u: &GridFunction, t_final: f64) -> Result<GridFunction> {
    let tol = 1e-9 * u.time.dt;
    let keep = (0..u.time.nt)
        .take_while(|&k| u.time.time(k) <= t_final + tol)
        .count();
    ensure(keep >= 2, || {
        format!("fewer than two samples before t = {t_final}")
    })?;
    let time = TimeGrid::new(u.time.t0, u.time.dt, keep)?;
    GridFunction::new(
        time,
        u.space,
        u.boundary,
        u.values()[..keep * u.nspace()].to_vec(),
    )
}

/// Compares `||u||_inf + |||u|||_V` with the localized forcing norm.
pub fn max_principle_report(
    u: &GridFunction,
    field: &CoefficientField,
    cfg: &ExponentConfig,
    t_final: f64,
    lattice: &Lattice,
) -> Result<MaxPrincipleReport> {
    cfg.validate()?;
    ensure(in_forcing_set(cfg.d, cfg.p0, cfg.p4, cfg.q4)?, || {
        format!(
            "forcing exponents (p4, q4) = ({}, {}) are outside the admissible set",
            cfg.p4, cfg.q4
        )
    })?;
    let ut = truncate(u, t_final)?;
    let u_inf = ut.max_abs();
    let v = v_norm(&ut, cfg.kappa()?, lattice)?;
    let f = field.forcing_grid(ut.time, ut.space, ut.boundary)?;
    let f_norm =
        localized_norm(&f, &MixedNormSpec::time_space(cfg.q4, cfg.p4), 1.0, lattice)?.value;
    if !(u_inf + v.total()).is_finite() {
        return Err(Error::numerical("solution norms are not finite"));
    }
    let ratio = (f_norm > 0.0).then(|| (u_inf + v.total()) / f_norm);
    Ok(MaxPrincipleReport {
        u_inf,
        v_norm: v,
        f_norm,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, SpaceGrid};
    use crate::pde::coefficients::{Diffusion, Forcing};
    use crate::pde::solver::{solve, SolverConfig};
    use core::f64::consts::PI;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn grid_fn(nt: usize, dt: f64, f: impl Fn(f64, &[f64; 3]) -> f64) -> GridFunction {
        GridFunction::from_fn(
            TimeGrid::new(-0.5 * dt, dt, nt).unwrap(),
            SpaceGrid::cube(1, 0.0, 0.125, 8).unwrap(),
            Boundary::ZeroExtension,
            f,
        )
        .unwrap()
    }

    #[test]
    fn steklov_examples() {
        let dt = 0.01;
        let lin = grid_fn(200, dt, |t, _| t);
        let s = steklov_mean(&lin, 0.1).unwrap();
        for k in 0..150 {
            assert!((s.get(k, 3) - (lin.time.time(k) + 0.05)).abs() < 1e-12);
        }
        let c = grid_fn(50, dt, |_, _| 2.5);
        let sc = steklov_mean(&c, 0.2).unwrap();
        assert!((sc.get(10, 0) - 2.5).abs() < 1e-14);
        let dt = PI / 400.0;
        let sine = grid_fn(1200, dt, |t, _| t.sin());
        let ss = steklov_mean(&sine, PI).unwrap();
        for k in (0..700).step_by(37) {
            let t = sine.time.time(k);
            let want = (t.cos() - (t + PI).cos()) / PI;
            assert!((ss.get(k, 0) - want).abs() < 1e-5);
        }
        assert!(steklov_mean(&sine, 0.5 * dt).is_err());
    }

    fn heat_run(n: usize) -> (GridFunction, CoefficientField) {
        let h = 1.0 / n as f64;
        let space = SpaceGrid::cube(1, 0.0, h, n).unwrap();
        let u0 = GridFunction::from_fn(
            TimeGrid::new(0.0, 1.0, 2).unwrap(),
            space,
            Boundary::ZeroExtension,
            |_, x| (PI * x[0]).sin(),
        )
        .unwrap();
        let field = CoefficientField::diffusion_only(1, Diffusion::Identity).unwrap();
        (
            solve(&field, &u0, &SolverConfig::new(h / 4.0, 0.25)).unwrap(),
            field,
        )
    }

    #[test]
    fn residual_vanishes_for_zero_data() {
        let (u, field) = heat_run(16);
        let zero = u.scale(0.0);
        assert_eq!(
            weak_residual(&zero, &field, &default_test_bank(&zero)).unwrap(),
            0.0
        );
    }

    #[test]
    fn residual_converges_and_detects_noise() {
        let mut res = Vec::new();
        for n in [16, 32, 64, 128, 256] {
            let (u, field) = heat_run(n);
            let bank = default_test_bank(&u);
            res.push(weak_residual(&u, &field, &bank).unwrap());
        }
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.0, "{res:?}");
        }
        let (u, field) = heat_run(32);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = |rng: &mut ChaCha8Rng| {
            1e-2 * (2.0 * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 1.0)
        };
        let noisy = u
            .with_values(u.values().iter().map(|v| v + noise(&mut rng)).collect())
            .unwrap();
        let bank = default_test_bank(&u);
        let clean = weak_residual(&u, &field, &bank).unwrap();
        let dirty = weak_residual(&noisy, &field, &bank).unwrap();
        assert!(dirty >= 10.0 * clean, "{dirty} vs {clean}, {res:?}");
    }

    #[test]
    fn boundary_touching_test_function_is_rejected() {
        let (u, field) = heat_run(16);
        let phi = TestFunction {
            t_centre: 0.1,
            t_half_width: 0.05,
            centre: [0.1, 0.0, 0.0],
            radius: 0.2,
        };
        assert!(weak_residual(&u, &field, &[phi]).is_err());
    }

    #[test]
    fn constant_forcing_bound() {
        let space = SpaceGrid::cube(2, -2.0, 0.25, 16).unwrap();
        let u0 = GridFunction::zeros(
            TimeGrid::new(0.0, 1.0, 2).unwrap(),
            space,
            Boundary::Periodic,
        );
        let field = CoefficientField::diffusion_only(2, Diffusion::Identity)
            .unwrap()
            .with_forcing(Forcing::Constant(1.0))
            .unwrap();
        let u = solve(&field, &u0, &SolverConfig::new(0.125, 1.0)).unwrap();
        let r = max_principle_report(
            &u,
            &field,
            &ExponentConfig::uniform(2),
            1.0,
            &Lattice { step: 0.5 },
        )
        .unwrap();
        assert!((r.u_inf - 1.0).abs() < 1e-12);
        assert_eq!(r.f_norm, 1.0);
        let u3 = solve(
            &field.scaled_forcing(3.0),
            &u0,
            &SolverConfig::new(0.125, 1.0),
        )
        .unwrap();
        let r3 = max_principle_report(
            &u3,
            &field.scaled_forcing(3.0),
            &ExponentConfig::uniform(2),
            1.0,
            &Lattice { step: 0.5 },
        )
        .unwrap();
        assert!((r3.ratio.unwrap() - r.ratio.unwrap()).abs() <= 1e-10 * r.ratio.unwrap());
        let zero = field.scaled_forcing(0.0);
        let rz = max_principle_report(
            &u.scale(0.0),
            &zero,
            &ExponentConfig::uniform(2),
            1.0,
            &Lattice { step: 0.5 },
        )
        .unwrap();
        assert_eq!(rz.ratio, None);
    }
}
