//! Mixed space-time Lebesgue norms, their windowed and localized variants, the
//! energy norm of parabolic theory and discrete gradients.
//!
//! `MixedNormSpec { p, q, order }` always carries the space exponent in `p` and
//! the time exponent in `q`; `order` says which integral is taken outside.
//! Infinite exponents are `f64::INFINITY` and mean a maximum over samples.

use crate::prelude::*;

use crate::error::{ensure, Result};
use crate::grid::{Boundary, Cylinder, GridFunction, SpaceGrid, MAX_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Order {
    /// `(int ||f(t)||_p^q dt)^(1/q)`.
    TimeOuter,
    /// `(int ||f(., x)||_q^p dx)^(1/p)`.
    SpaceOuter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MixedNormSpec {
    /// Space exponent.
    pub p: f64,
    /// Time exponent.
    pub q: f64,
    pub order: Order,
}

impl MixedNormSpec {
    /// Time-outer norm, `L^q` in time of `L^p` in space.
    pub fn time_space(q: f64, p: f64) -> Self {
        MixedNormSpec {
            p,
            q,
            order: Order::TimeOuter,
        }
    }

    /// Space-outer norm, `L^p` in space of `L^q` in time.
    pub fn space_time(p: f64, q: f64) -> Self {
        MixedNormSpec {
            p,
            q,
            order: Order::SpaceOuter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |e: f64| e == f64::INFINITY || (e.is_finite() && e >= 1.0);
        ensure(ok(self.p) && ok(self.q), || {
            format!(
                "exponents must lie in [1, inf] (got p={}, q={})",
                self.p, self.q
            )
        })
    }
}

pub const DEFAULT_LATTICE_STEP: f64 = 0.25;

#[inline]
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

#[inline]
pub(crate) fn root(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s.sqrt()
    } else {
        s.powf(1.0 / p)
    }
}

/// Running weighted `L^p` sum, or running maximum for `p = inf`.
#[derive(Clone, Copy)]
pub(crate) struct PowerSum {
    p: f64,
    acc: f64,
}

impl PowerSum {
    pub(crate) fn new(p: f64) -> Self {
        PowerSum { p, acc: 0.0 }
    }

    #[inline]
    pub(crate) fn push(&mut self, x: f64, w: f64) {
        if self.p == f64::INFINITY {
            self.acc = self.acc.max(x.abs());
        } else {
            self.acc += abs_pow(x, self.p) * w;
        }
    }

    pub(crate) fn finish(self) -> f64 {
        if self.p == f64::INFINITY {
            self.acc
        } else {
            root(self.acc, self.p)
        }
    }
}

fn masked_norm(
    f: &GridFunction,
    spec: &MixedNormSpec,
    time_in: &[bool],
    space_in: &[usize],
) -> f64 {
    let ns = f.nspace();
    let dv = f.space.cell_volume();
    let dt = f.time.dt;
    let vals = f.values();
    match spec.order {
        Order::TimeOuter => {
            let mut outer = PowerSum::new(spec.q);
            for (k, _) in time_in.iter().enumerate().filter(|(_, &b)| b) {
                let mut inner = PowerSum::new(spec.p);
                for &i in space_in {
                    inner.push(vals[k * ns + i], dv);
                }
                outer.push(inner.finish(), dt);
            }
            outer.finish()
        }
        Order::SpaceOuter => {
            let mut inner = vec![PowerSum::new(spec.q); space_in.len()];
            for (k, _) in time_in.iter().enumerate().filter(|(_, &b)| b) {
                for (acc, &i) in inner.iter_mut().zip(space_in) {
                    acc.push(vals[k * ns + i], dt);
                }
            }
            let mut outer = PowerSum::new(spec.p);
            for acc in inner {
                outer.push(acc.finish(), dv);
            }
            outer.finish()
        }
    }
}

/// Mixed norm over the whole grid box.
pub fn mixed_norm(f: &GridFunction, spec: &MixedNormSpec) -> Result<f64> {
    spec.validate()?;
    let time_in = vec![true; f.time.nt];
    let space_in: Vec<usize> = (0..f.nspace()).collect();
    Ok(masked_norm(f, spec, &time_in, &space_in))
}

/// Mixed norm of `1_window f`; a cell belongs to the window when its centre does.
pub fn windowed_norm(f: &GridFunction, spec: &MixedNormSpec, window: &Cylinder) -> Result<f64> {
    spec.validate()?;
    ensure(window.r > 0.0 && window.r.is_finite(), || {
        format!("window radius must be positive (got {})", window.r)
    })?;
    let time_in: Vec<bool> = (0..f.time.nt)
        .map(|k| window.contains_time(f.time.time(k)))
        .collect();
    let mut space_in = Vec::new();
    f.space.ball_cells(&window.z, window.r, &mut space_in);
    Ok(masked_norm(f, spec, &time_in, &space_in))
}

/// Norm of `1_{[t_lo, t_hi] x B_r(z)} f`.
pub fn slab_norm(
    f: &GridFunction,
    spec: &MixedNormSpec,
    t_lo: f64,
    t_hi: f64,
    z: &[f64; MAX_DIM],
    r: f64,
) -> Result<f64> {
    spec.validate()?;
    let time_in = time_mask(f, t_lo, t_hi);
    let mut space_in = Vec::new();
    f.space.ball_cells(z, r, &mut space_in);
    Ok(masked_norm(f, spec, &time_in, &space_in))
}

fn time_mask(f: &GridFunction, t_lo: f64, t_hi: f64) -> Vec<bool> {
    let tol = 1e-12 * (1.0 + t_lo.abs().max(t_hi.abs()));
    (0..f.time.nt)
        .map(|k| {
            let t = f.time.time(k);
            t >= t_lo - tol && t <= t_hi + tol
        })
        .collect()
}

/// Shift lattice of window centres, symmetric about the grid box centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub step: f64,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice {
            step: DEFAULT_LATTICE_STEP,
        }
    }
}

impl Lattice {
    fn axis_points(&self, lo: f64, hi: f64, reach: f64) -> Vec<f64> {
        let c = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) + reach;
        let j = (half / self.step + 1e-9).floor() as i64;
        (-j..=j).map(|i| c + i as f64 * self.step).collect()
    }

    fn time_centres(&self, f: &GridFunction, r: f64) -> Vec<f64> {
        self.axis_points(f.time.start(), f.time.end(), r * r)
    }

    fn space_centres(&self, g: &SpaceGrid, r: f64) -> Vec<[f64; MAX_DIM]> {
        let axes: Vec<Vec<f64>> = (0..g.d)
            .map(|a| self.axis_points(g.lo(a), g.hi(a), r))
            .collect();
        let mut out = vec![[0.0; MAX_DIM]];
        for (a, pts) in axes.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * pts.len());
            for z in &out {
                for &x in pts {
                    let mut zz = *z;
                    zz[a] = x;
                    next.push(zz);
                }
            }
            out = next;
        }
        out
    }
}

/// Supremum of windowed norms and the window where it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalizedNorm {
    pub value: f64,
    pub window: Cylinder,
}

/// Time windows as `(lo, hi)` intervals, each paired with its centre.
struct TimeWindows {
    centres: Vec<f64>,
    masks: Vec<Vec<bool>>,
}

impl TimeWindows {
    fn lattice(f: &GridFunction, lattice: &Lattice, r: f64, clip: Option<(f64, f64)>) -> Self {
        let centres = lattice.time_centres(f, r);
        let masks = centres
            .iter()
            .map(|&s| {
                let (mut lo, mut hi) = (s - r * r, s + r * r);
                if let Some((a, b)) = clip {
                    lo = lo.max(a);
                    hi = hi.min(b);
                }
                time_mask(f, lo, hi)
            })
            .collect();
        TimeWindows { centres, masks }
    }

    fn single(f: &GridFunction, lo: f64, hi: f64) -> Self {
        TimeWindows {
            centres: vec![0.5 * (lo + hi)],
            masks: vec![time_mask(f, lo, hi)],
        }
    }
}

fn sup_over_windows(
    f: &GridFunction,
    spec: &MixedNormSpec,
    windows: &TimeWindows,
    centres: &[[f64; MAX_DIM]],
    r: f64,
) -> LocalizedNorm {
    let ns = f.nspace();
    let nt = f.time.nt;
    let dv = f.space.cell_volume();
    let dt = f.time.dt;
    let vals = f.values();
    let mut best = LocalizedNorm {
        value: 0.0,
        window: Cylinder {
            s: windows.centres[0],
            z: centres[0],
            r,
        },
    };
    let mut ball = Vec::new();
    match spec.order {
        Order::TimeOuter => {
            let (p, q) = (spec.p, spec.q);
            let g: Vec<f64> = if p == f64::INFINITY {
                vals.iter().map(|v| v.abs()).collect()
            } else {
                vals.iter().map(|&v| abs_pow(v, p)).collect()
            };
            let mut slice_norm = vec![0.0; nt];
            for z in centres {
                f.space.ball_cells(z, r, &mut ball);
                if ball.is_empty() {
                    continue;
                }
                for (k, out) in slice_norm.iter_mut().enumerate() {
                    let row = &g[k * ns..(k + 1) * ns];
                    *out = if p == f64::INFINITY {
                        ball.iter().fold(0.0, |m, &i| m.max(row[i]))
                    } else {
                        root(ball.iter().map(|&i| row[i]).sum::<f64>() * dv, p)
                    };
                }
                for (w, mask) in windows.masks.iter().enumerate() {
                    let mut outer = PowerSum::new(q);
                    for k in 0..nt {
                        if mask[k] {
                            outer.push(slice_norm[k], dt);
                        }
                    }
                    let v = outer.finish();
                    if v > best.value {
                        best = LocalizedNorm {
                            value: v,
                            window: Cylinder {
                                s: windows.centres[w],
                                z: *z,
                                r,
                            },
                        };
                    }
                }
            }
        }
        Order::SpaceOuter => {
            let (p, q) = (spec.p, spec.q);
            let mut h = vec![0.0; ns];
            for (w, mask) in windows.masks.iter().enumerate() {
                let mut acc = vec![PowerSum::new(q); ns];
                for k in 0..nt {
                    if mask[k] {
                        let row = &vals[k * ns..(k + 1) * ns];
                        for (a, &v) in acc.iter_mut().zip(row) {
                            a.push(v, dt);
                        }
                    }
                }
                for (hi, a) in h.iter_mut().zip(acc) {
                    let tn = a.finish();
                    *hi = if p == f64::INFINITY {
                        tn
                    } else {
                        abs_pow(tn, p)
                    };
                }
                for z in centres {
                    f.space.ball_cells(z, r, &mut ball);
                    let v = if p == f64::INFINITY {
                        ball.iter().fold(0.0, |m, &i| m.max(h[i]))
                    } else {
                        root(ball.iter().map(|&i| h[i]).sum::<f64>() * dv, p)
                    };
                    if v > best.value {
                        best = LocalizedNorm {
                            value: v,
                            window: Cylinder {
                                s: windows.centres[w],
                                z: *z,
                                r,
                            },
                        };
                    }
                }
            }
        }
    }
    best
}

/// Localized norm: supremum of windowed norms over cylinders of the given radius
/// centred on a shift lattice. The lattice is symmetric about the grid box centre
/// and reaches every window that meets the box.
pub fn localized_norm(
    f: &GridFunction,
    spec: &MixedNormSpec,
    radius: f64,
    lattice: &Lattice,
) -> Result<LocalizedNorm> {
    check_lattice(spec, radius, lattice)?;
    let windows = TimeWindows::lattice(f, lattice, radius, None);
    let centres = lattice.space_centres(&f.space, radius);
    Ok(sup_over_windows(f, spec, &windows, &centres, radius))
}

/// Localized norm of `1_{[t_lo, t_hi]} f`.
pub fn localized_norm_on(
    f: &GridFunction,
    spec: &MixedNormSpec,
    radius: f64,
    lattice: &Lattice,
    t_lo: f64,
    t_hi: f64,
) -> Result<LocalizedNorm> {
    check_lattice(spec, radius, lattice)?;
    let windows = TimeWindows::lattice(f, lattice, radius, Some((t_lo, t_hi)));
    let centres = lattice.space_centres(&f.space, radius);
    Ok(sup_over_windows(f, spec, &windows, &centres, radius))
}

fn check_lattice(spec: &MixedNormSpec, radius: f64, lattice: &Lattice) -> Result<()> {
    spec.validate()?;
    ensure(radius > 0.0 && radius.is_finite(), || {
        format!("window radius must be positive (got {radius})")
    })?;
    ensure(lattice.step > 0.0 && lattice.step <= 1.0, || {
        format!("lattice step must lie in (0, 1] (got {})", lattice.step)
    })
}

/// Spatial localized norm `sup_z ||1_{B_radius(z)} g||_p` of a time-independent field.
pub fn localized_space_norm(
    space: &SpaceGrid,
    values: &[f64],
    p: f64,
    radius: f64,
    lattice: &Lattice,
) -> Result<f64> {
    ensure(values.len() == space.len(), || {
        "field length does not match the grid".into()
    })?;
    let spec = MixedNormSpec::time_space(f64::INFINITY, p);
    check_lattice(&spec, radius, lattice)?;
    let mut ball = Vec::new();
    let mut best = 0.0f64;
    for z in lattice.space_centres(space, radius) {
        space.ball_cells(&z, radius, &mut ball);
        let mut acc = PowerSum::new(p);
        for &i in &ball {
            acc.push(values[i], space.cell_volume());
        }
        best = best.max(acc.finish());
    }
    Ok(best)
}

/// Spread of the ratio between radius-1 localized norms of `1_{[0,T]} f` and
/// `sup_z ||1_{[0,T] x B_r(z)} f||` over a family of functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringReport {
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

pub fn covering_equivalence_report(
    family: &[GridFunction],
    spec: &MixedNormSpec,
    horizon: f64,
    r: f64,
    lattice: &Lattice,
) -> Result<CoveringReport> {
    ensure(!family.is_empty(), || {
        "covering report needs at least one function".into()
    })?;
    ensure(horizon > 0.0, || {
        format!("horizon must be positive (got {horizon})")
    })?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for f in family {
        let local = localized_norm_on(f, spec, 1.0, lattice, 0.0, horizon)?.value;
        let windows = TimeWindows::single(f, 0.0, horizon);
        let centres = lattice.space_centres(&f.space, r);
        let wide = sup_over_windows(f, spec, &windows, &centres, r).value;
        let ratio = if wide == 0.0 { 1.0 } else { local / wide };
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(CoveringReport {
        ratio_lo: lo,
        ratio_hi: hi,
    })
}

/// Partial derivatives by central differences; periodic grids wrap, zero-extension
/// grids use second-order one-sided stencils at the box faces.
pub fn gradient(f: &GridFunction) -> Result<Vec<GridFunction>> {
    let g = &f.space;
    for axis in 0..g.d {
        ensure(g.nx[axis] >= 3, || {
            format!("gradient needs nx >= 3 on axis {axis} (got {})", g.nx[axis])
        })?;
    }
    let ns = g.len();
    let vals = f.values();
    let mut out = Vec::with_capacity(g.d);
    for axis in 0..g.d {
        let n = g.nx[axis];
        let st = g.stride(axis);
        let inv = 1.0 / (2.0 * g.dx[axis]);
        let mut d = vec![0.0; vals.len()];
        for k in 0..f.time.nt {
            let row = &vals[k * ns..(k + 1) * ns];
            let drow = &mut d[k * ns..(k + 1) * ns];
            for i in 0..ns {
                let m = (i / st) % n;
                let base = i - m * st;
                let at = |j: usize| row[base + j * st];
                drow[i] = if m > 0 && m + 1 < n {
                    (at(m + 1) - at(m - 1)) * inv
                } else {
                    match f.boundary {
                        Boundary::Periodic => {
                            let (lo, hi) = if m == 0 { (n - 1, 1) } else { (m - 1, 0) };
                            (at(hi) - at(lo)) * inv
                        }
                        Boundary::ZeroExtension => {
                            if m == 0 {
                                (4.0 * (at(1) - at(0)) - (at(2) - at(0))) * inv
                            } else {
                                (4.0 * (at(n - 1) - at(n - 2)) - (at(n - 1) - at(n - 3))) * inv
                            }
                        }
                    }
                };
            }
        }
        out.push(f.with_values(d)?);
    }
    Ok(out)
}

/// Pointwise Euclidean length of the discrete gradient.
pub fn gradient_magnitude(f: &GridFunction) -> Result<GridFunction> {
    let parts = gradient(f)?;
    let mut mag = vec![0.0; f.values().len()];
    for p in &parts {
        for (m, v) in mag.iter_mut().zip(p.values()) {
            *m += v * v;
        }
    }
    for m in &mut mag {
        *m = m.sqrt();
    }
    f.with_values(mag)
}

/// Parts of the parabolic energy norm.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyNorm {
    /// Localized `sup_t ||u(t)||_2`.
    pub sup_l2: f64,
    /// Localized space-outer `L^kappa_x L^2_t` norm of `|grad u|`.
    pub gradient: f64,
}

impl EnergyNorm {
    pub fn total(&self) -> f64 {
        self.sup_l2 + self.gradient
    }
}

/// Energy norm `|||u|||_{inf,2; t,x} + |||grad u|||_{kappa,2; x,t}` with unit windows.
pub fn v_norm(u: &GridFunction, kappa: f64, lattice: &Lattice) -> Result<EnergyNorm> {
    ensure(kappa >= 1.0, || {
        format!("kappa must be at least 1 (got {kappa})")
    })?;
    let grad = gradient_magnitude(u)?;
    let sup_l2 = localized_norm(
        u,
        &MixedNormSpec::time_space(f64::INFINITY, 2.0),
        1.0,
        lattice,
    )?
    .value;
    let gradient =
        localized_norm(&grad, &MixedNormSpec::space_time(kappa, 2.0), 1.0, lattice)?.value;
    Ok(EnergyNorm { sup_l2, gradient })
}

/// Energy norm restricted to a single cylinder, without localization.
pub fn v_norm_on(u: &GridFunction, kappa: f64, window: &Cylinder) -> Result<EnergyNorm> {
    let grad = gradient_magnitude(u)?;
    Ok(EnergyNorm {
        sup_l2: windowed_norm(u, &MixedNormSpec::time_space(f64::INFINITY, 2.0), window)?,
        gradient: windowed_norm(&grad, &MixedNormSpec::space_time(kappa, 2.0), window)?,
    })
}

/// `||f||_{L^p_x L^q_t} - ||f||_{L^q_t L^p_x}`, nonnegative whenever `q >= p`.
pub fn minkowski_gap(f: &GridFunction, p: f64, q: f64) -> Result<f64> {
    ensure(q >= p, || {
        format!("Minkowski ordering needs q >= p (got p={p}, q={q})")
    })?;
    Ok(mixed_norm(f, &MixedNormSpec::space_time(p, q))?
        - mixed_norm(f, &MixedNormSpec::time_space(q, p))?)
}
