use crate::prelude::*;

use super::coefficients::{CoefficientField, Matrix};
use super::linalg::{bicgstab, pcg, Csr};
use crate::error::{ensure, Error, Result};
use crate::grid::{Boundary, GridFunction, SpaceGrid, TimeGrid, MAX_DIM};
use crate::norms::gradient_magnitude;

/// Largest admissible `dt sum_i |b_i| / dx_i`.
pub const CFL_LIMIT: f64 = 0.9;

/// Time stepping: backward Euler for the diffusion, forward Euler with first-order
/// upwinding for the drift and the forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverConfig {
    pub dt: f64,
    pub t_start: f64,
    pub t_final: f64,
    /// Relative residual tolerance of the linear solves.
    pub linear_tol: f64,
    pub max_iter: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        SolverConfig {
            dt,
            t_start: 0.0,
            t_final,
            linear_tol: 1e-12,
            max_iter: 10_000,
        }
    }

    pub fn validate(&self) -> Result<usize> {
        ensure(self.dt > 0.0 && self.dt.is_finite(), || {
            format!("dt must be positive (got {})", self.dt)
        })?;
        ensure(self.linear_tol > 0.0 && self.linear_tol <= 1e-8, || {
            format!("linear_tol must lie in (0, 1e-8] (got {})", self.linear_tol)
        })?;
        ensure(self.max_iter >= 1, || "max_iter must be at least 1".into())?;
        let span = self.t_final - self.t_start;
        let steps = (span / self.dt).round();
        ensure(
            steps >= 1.0 && (steps * self.dt - span).abs() <= 1e-9 * span.abs().max(self.dt),
            || {
                format!(
                    "horizon {span} is not a positive multiple of dt = {}",
                    self.dt
                )
            },
        )?;
        Ok(steps as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveStats {
    pub steps: usize,
    pub max_linear_iterations: usize,
    /// Largest discrete gradient magnitude over the run; `None` when an axis has
    /// fewer than three cells.
    pub max_gradient: Option<f64>,
}

const NONE: usize = usize::MAX;

/// Neighbour table: `[cell][axis][0 = minus, 1 = plus]`, `NONE` outside the box.
fn neighbours(space: &SpaceGrid, boundary: Boundary) -> Vec<[[usize; 2]; MAX_DIM]> {
    (0..space.len())
        .map(|c| {
            let m = space.unravel(c);
            let mut out = [[NONE; 2]; MAX_DIM];
            for axis in 0..space.d {
                for (slot, delta) in [(0usize, -1i64), (1, 1)] {
                    out[axis][slot] =
                        shift(space, boundary, m, axis, delta).map_or(NONE, |mm| space.ravel(mm));
                }
            }
            out
        })
        .collect()
}

fn shift(
    space: &SpaceGrid,
    boundary: Boundary,
    mut m: [usize; MAX_DIM],
    axis: usize,
    delta: i64,
) -> Option<[usize; MAX_DIM]> {
    let n = space.nx[axis] as i64;
    let j = m[axis] as i64 + delta;
    let j = match boundary {
        Boundary::Periodic => j.rem_euclid(n),
        Boundary::ZeroExtension if (0..n).contains(&j) => j,
        Boundary::ZeroExtension => return None,
    };
    m[axis] = j as usize;
    Some(m)
}

fn offset(
    space: &SpaceGrid,
    boundary: Boundary,
    m: [usize; MAX_DIM],
    moves: &[(usize, i64)],
) -> Option<usize> {
    let mut cur = m;
    for &(axis, delta) in moves {
        cur = shift(space, boundary, cur, axis, delta)?;
    }
    Some(space.ravel(cur))
}

/// `I - dt L_a` with `L_a` the flux-difference form of `div(a grad .)`: face values
/// of `a_ii` are arithmetic means of the adjacent cells, a zero-extension face uses
/// the ghost value `-u`, and off-diagonal fluxes use centred cross differences with
/// zero outside the box.
fn assemble(
    space: &SpaceGrid,
    boundary: Boundary,
    nb: &[[[usize; 2]; MAX_DIM]],
    a: &[Matrix],
    diagonal: bool,
    dt: f64,
) -> Csr {
    let d = space.d;
    let n = space.len();
    let per_row = 2 * d + 1 + if diagonal { 0 } else { 8 * d * (d - 1) };
    let mut m = Csr::with_capacity(n, n * per_row);
    for c in 0..n {
        m.push(c, 1.0);
        for i in 0..d {
            let w = dt / (space.dx[i] * space.dx[i]);
            for &k in &nb[c][i] {
                if k == NONE {
                    m.push(c, 2.0 * w * a[c][i][i]);
                } else {
                    let af = 0.5 * (a[c][i][i] + a[k][i][i]);
                    m.push(c, w * af);
                    m.push(k, -w * af);
                }
            }
        }
        if !diagonal {
            let mc = space.unravel(c);
            for i in 0..d {
                for j in (0..d).filter(|&j| j != i) {
                    for s in [-1i64, 1] {
                        let k = nb[c][i][if s < 0 { 0 } else { 1 }];
                        let aij = if k == NONE {
                            a[c][i][j]
                        } else {
                            0.5 * (a[c][i][j] + a[k][i][j])
                        };
                        if aij == 0.0 {
                            continue;
                        }
                        let w = -dt * s as f64 * aij / (4.0 * space.dx[i] * space.dx[j]);
                        let taps: [(&[(usize, i64)], f64); 4] = [
                            (&[(j, 1)], 1.0),
                            (&[(j, -1)], -1.0),
                            (&[(i, s), (j, 1)], 1.0),
                            (&[(i, s), (j, -1)], -1.0),
                        ];
                        for (moves, sign) in taps {
                            if let Some(col) = offset(space, boundary, mc, moves) {
                                m.push(col, w * sign);
                            }
                        }
                    }
                }
            }
        }
        m.end_row();
    }
    m
}

fn sample_diffusion(
    field: &CoefficientField,
    centres: &[[f64; MAX_DIM]],
    t: f64,
) -> Result<Vec<Matrix>> {
    let d = field.d;
    let mut out = Vec::with_capacity(centres.len());
    for x in centres {
        let a = field.diffusion(t, x);
        for i in 0..d {
            if !(a[i][i] >= 0.0 && a[i][i].is_finite()) {
                return Err(Error::validation(format!(
                    "diffusion entry a_{i}{i} = {} at t = {t}, x = {:?} is negative or not finite",
                    a[i][i],
                    &x[..d]
                )));
            }
        }
        out.push(a);
    }
    Ok(out)
}

fn sample_drift(
    field: &CoefficientField,
    space: &SpaceGrid,
    centres: &[[f64; MAX_DIM]],
    t: f64,
    dt: f64,
) -> Result<Vec<[f64; MAX_DIM]>> {
    let d = field.d;
    let mut out = Vec::with_capacity(centres.len());
    for x in centres {
        let b = field.drift(t, x);
        let cfl: f64 = (0..d).map(|i| dt * b[i].abs() / space.dx[i]).sum();
        if !(cfl <= CFL_LIMIT) {
            return Err(Error::validation(format!(
                "advective CFL number {cfl} exceeds {CFL_LIMIT} at t = {t}, x = {:?}",
                &x[..d]
            )));
        }
        out.push(b);
    }
    Ok(out)
}

/// Solves from the first time slice of `u0`, on its grid and boundary condition.
/// Sample `k` of the result is the solution at `t_start + k dt`.
pub fn solve(
    field: &CoefficientField,
    u0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<GridFunction> {
    solve_with_stats(field, u0, cfg).map(|(u, _)| u)
}

pub fn solve_with_stats(
    field: &CoefficientField,
    u0: &GridFunction,
    cfg: &SolverConfig,
) -> Result<(GridFunction, SolveStats)> {
    field.validate()?;
    let steps = cfg.validate()?;
    ensure(field.d == u0.d(), || {
        format!(
            "field is {}-dimensional but u0 is {}-dimensional",
            field.d,
            u0.d()
        )
    })?;
    let space = u0.space;
    let boundary = u0.boundary;
    let d = space.d;
    let n = space.len();
    let dt = cfg.dt;
    let centres: Vec<[f64; MAX_DIM]> = (0..n).map(|c| space.centre(c)).collect();
    let nb = neighbours(&space, boundary);
    let diagonal = field.a.is_diagonal(d);
    let autonomous = field.is_autonomous();
    let has_drift = field.has_drift();

    let mut values = Vec::with_capacity((steps + 1) * n);
    values.extend_from_slice(u0.slice(0));
    let mut u = u0.slice(0).to_vec();
    let mut next = u.clone();
    let mut rhs = vec![0.0; n];
    let mut matrix: Option<Csr> = None;
    let mut drift: Vec<[f64; MAX_DIM]> = Vec::new();
    let mut max_iters = 0;
    for k in 0..steps {
        let t = cfg.t_start + k as f64 * dt;
        let t_next = cfg.t_start + (k + 1) as f64 * dt;
        if matrix.is_none() || !autonomous {
            let a = sample_diffusion(field, &centres, t_next)?;
            matrix = Some(assemble(&space, boundary, &nb, &a, diagonal, dt));
        }
        if has_drift && (k == 0 || !autonomous) {
            drift = sample_drift(field, &space, &centres, t, dt)?;
        }
        for c in 0..n {
            let mut acc = field.forcing(t, &centres[c]);
            if has_drift {
                for i in 0..d {
                    let bi = drift[c][i];
                    if bi > 0.0 {
                        let up = nb[c][i][1];
                        let v = if up == NONE { 0.0 } else { u[up] };
                        acc += bi * (v - u[c]) / space.dx[i];
                    } else if bi < 0.0 {
                        let dn = nb[c][i][0];
                        let v = if dn == NONE { 0.0 } else { u[dn] };
                        acc += bi * (u[c] - v) / space.dx[i];
                    }
                }
            }
            rhs[c] = u[c] + dt * acc;
        }
        let a = matrix.as_ref().expect("assembled");
        let iters = if diagonal {
            pcg(a, &rhs, &mut next, cfg.linear_tol, cfg.max_iter)
        } else {
            bicgstab(a, &rhs, &mut next, cfg.linear_tol, cfg.max_iter)
        }
        .map_err(|e| Error::numerical(format!("step {} (t = {t_next}): {}", k + 1, e.message)))?;
        max_iters = max_iters.max(iters);
        if let Some(c) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite solution at step {} in cell {c}",
                k + 1
            )));
        }
        values.extend_from_slice(&next);
        u.copy_from_slice(&next);
    }
    let time = TimeGrid::new(cfg.t_start - 0.5 * dt, dt, steps + 1)?;
    let sol = GridFunction::new(time, space, boundary, values)?;
    let max_gradient = if (0..d).all(|i| space.nx[i] >= 3) {
        Some(gradient_magnitude(&sol)?.max_abs())
    } else {
        None
    };
    Ok((
        sol,
        SolveStats {
            steps,
            max_linear_iterations: max_iters,
            max_gradient,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::coefficients::{Diffusion, Drift, Forcing};
    use core::f64::consts::PI;

    fn initial(space: SpaceGrid, boundary: Boundary, f: impl Fn(&[f64; 3]) -> f64) -> GridFunction {
        GridFunction::from_fn(
            TimeGrid::new(0.0, 1.0, 2).unwrap(),
            space,
            boundary,
            |_, x| f(x),
        )
        .unwrap()
    }

    fn heat_error(n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let space = SpaceGrid::cube(1, 0.0, h, n).unwrap();
        let u0 = initial(space, Boundary::ZeroExtension, |x| (PI * x[0]).sin());
        let field = CoefficientField::diffusion_only(1, Diffusion::Identity).unwrap();
        let dt = h * h;
        let t_final = 0.1;
        let cfg = SolverConfig::new(dt, (t_final / dt).round() * dt);
        let u = solve(&field, &u0, &cfg).unwrap();
        let k = u.time.nt - 1;
        let t = k as f64 * dt;
        (0..n)
            .map(|i| (u.get(k, i) - (-PI * PI * t).exp() * (PI * space.coord(0, i)).sin()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn heat_equation_converges_at_second_order() {
        let errs: Vec<f64> = [16, 32, 64].iter().map(|&n| heat_error(n)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.7, "{errs:?}");
        }
    }

    #[test]
    fn constant_forcing_is_exact() {
        let space = SpaceGrid::cube(2, 0.0, 0.25, 4).unwrap();
        let u0 = initial(space, Boundary::Periodic, |_| 0.0);
        let field = CoefficientField::new(
            2,
            Diffusion::Identity,
            Drift::Zero,
            Drift::Zero,
            Forcing::Constant(1.0),
        )
        .unwrap();
        let u = solve(&field, &u0, &SolverConfig::new(0.125, 1.0)).unwrap();
        for k in 0..u.time.nt {
            for &v in u.slice(k) {
                assert!((v - k as f64 * 0.125).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn periodic_mass_is_conserved() {
        let space = SpaceGrid::cube(2, -1.0, 2.0 / 24.0, 24).unwrap();
        let u0 = initial(space, Boundary::Periodic, |x| {
            (-(4.0 * x[0]).powi(2)).exp() + 0.3 * x[1].cos()
        });
        let a = Diffusion::DiagonalPower {
            scale: [1.0, 0.5, 0.0],
            power: 2.0,
            shift: 0.0,
        };
        let field = CoefficientField::diffusion_only(2, a).unwrap();
        let u = solve(&field, &u0, &SolverConfig::new(0.01, 0.2)).unwrap();
        let m0: f64 = u.slice(0).iter().sum();
        for k in 1..u.time.nt {
            let m: f64 = u.slice(k).iter().sum();
            assert!((m - m0).abs() < 1e-9 * m0.abs(), "{m} vs {m0}");
        }
    }

    #[test]
    fn comparison_and_nonnegativity_with_drift() {
        let space = SpaceGrid::cube(2, -2.0, 0.125, 32).unwrap();
        let u0 = initial(space, Boundary::ZeroExtension, |x| {
            (1.0 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        });
        let fam = crate::cutoff::CutoffFamily::new(2.0, Some(4)).unwrap();
        let base = CoefficientField::new(
            2,
            Diffusion::SwappedPower {
                alpha: 0.2,
                family: fam,
            },
            Drift::Constant([0.5, -0.25, 0.0]),
            Drift::Rotation {
                omega: 1.0,
                rho: 1.0,
            },
            Forcing::Bump {
                amplitude: 1.0,
                centre: [0.5, 0.0, 0.0],
                radius: 0.5,
                t_lo: 0.0,
                t_hi: 1.0,
            },
        )
        .unwrap();
        let cfg = SolverConfig::new(0.02, 0.5);
        let low = solve(&base, &u0, &cfg).unwrap();
        let high = solve(&base.scaled_forcing(2.0), &u0, &cfg).unwrap();
        for (l, h) in low.values().iter().zip(high.values()) {
            assert!(*l >= -1e-12 && l <= &(h + 1e-12));
        }
    }

    #[test]
    fn linear_in_data() {
        let space = SpaceGrid::cube(1, 0.0, 0.05, 20).unwrap();
        let u0 = initial(space, Boundary::ZeroExtension, |x| x[0] * (1.0 - x[0]));
        let field = CoefficientField::new(
            1,
            Diffusion::Identity,
            Drift::Constant([0.3, 0.0, 0.0]),
            Drift::Zero,
            Forcing::Constant(2.0),
        )
        .unwrap();
        let cfg = SolverConfig::new(0.01, 0.1);
        let u1 = solve(&field, &u0, &cfg).unwrap();
        let u3 = solve(&field.scaled_forcing(3.0), &u0.scale(3.0), &cfg).unwrap();
        for (a, b) in u1.values().iter().zip(u3.values()) {
            assert!((3.0 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cross_terms_decay_with_bicgstab() {
        let space = SpaceGrid::cube(2, 0.0, 1.0 / 16.0, 16).unwrap();
        let u0 = initial(space, Boundary::ZeroExtension, |x| {
            (PI * x[0]).sin() * (PI * x[1]).sin()
        });
        let m = [[1.0, 0.4, 0.0], [0.4, 1.0, 0.0], [0.0; 3]];
        let field = CoefficientField::diffusion_only(2, Diffusion::Constant(m)).unwrap();
        let u = solve(&field, &u0, &SolverConfig::new(0.01, 0.1)).unwrap();
        let k = u.time.nt - 1;
        assert!(u.slice(k).iter().all(|v| v.is_finite()));
        assert!(u.slice(k).iter().fold(0.0f64, |a, v| a.max(v.abs())) < u0.max_abs());
    }

    #[test]
    fn cfl_violation_is_a_config_error() {
        let space = SpaceGrid::cube(1, 0.0, 0.1, 10).unwrap();
        let u0 = initial(space, Boundary::Periodic, |_| 1.0);
        let field = CoefficientField::new(
            1,
            Diffusion::Identity,
            Drift::Constant([10.0, 0.0, 0.0]),
            Drift::Zero,
            Forcing::Zero,
        )
        .unwrap();
        let err = solve(&field, &u0, &SolverConfig::new(0.05, 0.1)).unwrap_err();
        assert_eq!(err.kind, crate::ErrorKind::Validation);
        assert!(SolverConfig::new(0.03, 0.1).validate().is_err());
    }
}
