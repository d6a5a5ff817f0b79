//! Uniform space-time grids and sampled functions on them.
//!
//! Sample `k` in time sits at the cell centre `t0 + (k + 1/2) dt` and stands for
//! the cell `[t0 + k dt, t0 + (k + 1) dt]`; space axes follow the same rule. All
//! quadrature in the crate is the midpoint rule over these cells.

use crate::prelude::*;

use crate::error::{ensure, Error, Result};

pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Boundary {
    Periodic,
    ZeroExtension,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, nt: usize) -> Result<Self> {
        ensure(t0.is_finite() && dt.is_finite() && dt > 0.0, || {
            format!("time grid needs finite t0 and dt > 0 (got t0={t0}, dt={dt})")
        })?;
        ensure(nt >= 2, || format!("time grid needs nt >= 2 (got {nt})"))?;
        Ok(TimeGrid { t0, dt, nt })
    }

    /// Centre of time cell `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.dt
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.nt as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    pub d: usize,
    pub x0: [f64; MAX_DIM],
    pub dx: [f64; MAX_DIM],
    pub nx: [usize; MAX_DIM],
}

impl SpaceGrid {
    pub fn new(x0: &[f64], dx: &[f64], nx: &[usize]) -> Result<Self> {
        let d = x0.len();
        ensure((1..=MAX_DIM).contains(&d), || {
            format!("spatial dimension must be 1..=3 (got {d})")
        })?;
        ensure(dx.len() == d && nx.len() == d, || {
            "x0, dx and nx must have equal length".into()
        })?;
        let mut g = SpaceGrid {
            d,
            x0: [0.0; MAX_DIM],
            dx: [1.0; MAX_DIM],
            nx: [1; MAX_DIM],
        };
        for i in 0..d {
            ensure(
                x0[i].is_finite() && dx[i].is_finite() && dx[i] > 0.0,
                || {
                    format!(
                        "axis {i}: need finite x0 and dx > 0 (got x0={}, dx={})",
                        x0[i], dx[i]
                    )
                },
            )?;
            ensure(nx[i] >= 2, || {
                format!("axis {i}: need nx >= 2 (got {})", nx[i])
            })?;
            g.x0[i] = x0[i];
            g.dx[i] = dx[i];
            g.nx[i] = nx[i];
        }
        Ok(g)
    }

    /// Cube `[lo, lo + n h]^d` with `n` cells per axis.
    pub fn cube(d: usize, lo: f64, h: f64, n: usize) -> Result<Self> {
        SpaceGrid::new(&vec![lo; d], &vec![h; d], &vec![n; d])
    }

    pub fn len(&self) -> usize {
        self.nx[..self.d].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx[..self.d].iter().product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.x0[axis] + (i as f64 + 0.5) * self.dx[axis]
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.x0[axis]
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.x0[axis] + self.nx[axis] as f64 * self.dx[axis]
    }

    /// Row-major multi-index (last axis fastest) of a flat cell index.
    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in (0..self.d).rev() {
            out[axis] = idx % self.nx[axis];
            idx /= self.nx[axis];
        }
        out
    }

    pub fn ravel(&self, m: [usize; MAX_DIM]) -> usize {
        let mut idx = 0;
        for axis in 0..self.d {
            idx = idx * self.nx[axis] + m[axis];
        }
        idx
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.nx[axis + 1..self.d].iter().product()
    }

    pub fn centre(&self, idx: usize) -> [f64; MAX_DIM] {
        let m = self.unravel(idx);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.d {
            x[axis] = self.coord(axis, m[axis]);
        }
        x
    }

    /// Cell containing `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut m = [0; MAX_DIM];
        for axis in 0..self.d {
            let u = (x[axis] - self.x0[axis]) / self.dx[axis];
            if !(u >= 0.0 && u < self.nx[axis] as f64) {
                return None;
            }
            m[axis] = u.floor() as usize;
        }
        Some(self.ravel(m))
    }

    /// Flat indices of the cells whose centres lie in the closed ball `B_r(z)`.
    pub fn ball_cells(&self, z: &[f64; MAX_DIM], r: f64, out: &mut Vec<usize>) {
        out.clear();
        let r2 = r * r * (1.0 + 1e-12);
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        for axis in 0..self.d {
            let a = ((z[axis] - r - self.x0[axis]) / self.dx[axis] - 0.5).ceil();
            let b = ((z[axis] + r - self.x0[axis]) / self.dx[axis] - 0.5).floor();
            if b < 0.0 || a > (self.nx[axis] - 1) as f64 || a > b {
                return;
            }
            lo[axis] = a.max(0.0) as usize;
            hi[axis] = (b as usize).min(self.nx[axis] - 1);
        }
        let mut m = lo;
        loop {
            let mut dist2 = 0.0;
            for axis in 0..self.d {
                let e = self.coord(axis, m[axis]) - z[axis];
                dist2 += e * e;
            }
            if dist2 <= r2 {
                out.push(self.ravel(m));
            }
            let mut axis = self.d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if m[axis] < hi[axis] {
                    m[axis] += 1;
                    break;
                }
                m[axis] = lo[axis];
            }
        }
    }
}

/// Parabolic cylinder `[s - r^2, s + r^2] x B_r(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cylinder {
    pub s: f64,
    pub z: [f64; MAX_DIM],
    pub r: f64,
}

impl Cylinder {
    pub fn new(s: f64, z: &[f64], r: f64) -> Self {
        let mut zz = [0.0; MAX_DIM];
        zz[..z.len()].copy_from_slice(z);
        Cylinder { s, z: zz, r }
    }

    /// Cylinder centred at the origin.
    pub fn centred(r: f64) -> Self {
        Cylinder {
            s: 0.0,
            z: [0.0; MAX_DIM],
            r,
        }
    }

    pub fn contains_time(&self, t: f64) -> bool {
        (t - self.s).abs() <= self.r * self.r * (1.0 + 1e-12)
    }

    pub fn contains_point(&self, x: &[f64; MAX_DIM], d: usize) -> bool {
        let mut dist2 = 0.0;
        for axis in 0..d {
            let e = x[axis] - self.z[axis];
            dist2 += e * e;
        }
        dist2 <= self.r * self.r * (1.0 + 1e-12)
    }
}

/// Real function sampled on a uniform space-time grid; `values[k * nspace + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub time: TimeGrid,
    pub space: SpaceGrid,
    pub boundary: Boundary,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(
        time: TimeGrid,
        space: SpaceGrid,
        boundary: Boundary,
        values: Vec<f64>,
    ) -> Result<Self> {
        let expected = time.nt * space.len();
        ensure(values.len() == expected, || {
            format!("expected {expected} samples, got {}", values.len())
        })?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("sample {i} is not finite")));
        }
        Ok(GridFunction {
            time,
            space,
            boundary,
            values,
        })
    }

    pub fn zeros(time: TimeGrid, space: SpaceGrid, boundary: Boundary) -> Self {
        let n = time.nt * space.len();
        GridFunction {
            time,
            space,
            boundary,
            values: vec![0.0; n],
        }
    }

    /// Samples `f(t, x)` at every cell centre.
    pub fn from_fn(
        time: TimeGrid,
        space: SpaceGrid,
        boundary: Boundary,
        mut f: impl FnMut(f64, &[f64; MAX_DIM]) -> f64,
    ) -> Result<Self> {
        let ns = space.len();
        let mut values = Vec::with_capacity(time.nt * ns);
        for k in 0..time.nt {
            let t = time.time(k);
            for i in 0..ns {
                values.push(f(t, &space.centre(i)));
            }
        }
        GridFunction::new(time, space, boundary, values)
    }

    pub fn d(&self) -> usize {
        self.space.d
    }

    pub fn nspace(&self) -> usize {
        self.space.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let ns = self.nspace();
        &self.values[k * ns..(k + 1) * ns]
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.nspace() + i]
    }

    /// Same grid, new values produced pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Same grid, values `f(t, x, u)`.
    pub fn map_with_coords(&self, f: impl Fn(f64, &[f64; MAX_DIM], f64) -> f64) -> GridFunction {
        let ns = self.nspace();
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..self.time.nt {
            let t = self.time.time(k);
            for i in 0..ns {
                values.push(f(t, &self.space.centre(i), self.values[k * ns + i]));
            }
        }
        GridFunction {
            values,
            ..self.clone()
        }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<GridFunction> {
        GridFunction::new(self.time, self.space, self.boundary, values)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise-constant lookup; zero outside the grid box.
    pub fn eval_nearest(&self, t: f64, x: &[f64]) -> f64 {
        let u = (t - self.time.t0) / self.time.dt;
        if !(u >= 0.0 && u < self.time.nt as f64) {
            return 0.0;
        }
        match self.space.locate(x) {
            Some(i) => self.values[u.floor() as usize * self.nspace() + i],
            None => 0.0,
        }
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.time == other.time && self.space == other.space
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ravel_roundtrip() {
        let g = SpaceGrid::new(&[0.0, 0.0, 0.0], &[1.0, 0.5, 0.25], &[3, 4, 5]).unwrap();
        for idx in 0..g.len() {
            assert_eq!(g.ravel(g.unravel(idx)), idx);
        }
        assert_eq!(g.stride(0), 20);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 0.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 1).is_err());
        assert!(SpaceGrid::new(&[0.0], &[0.1], &[1]).is_err());
        assert!(SpaceGrid::new(&[0.0; 4], &[0.1; 4], &[4; 4]).is_err());
        let t = TimeGrid::new(0.0, 0.5, 2).unwrap();
        let s = SpaceGrid::cube(1, 0.0, 0.5, 2).unwrap();
        assert!(
            GridFunction::new(t, s, Boundary::Periodic, vec![0.0, 1.0, f64::NAN, 0.0]).is_err()
        );
        assert!(GridFunction::new(t, s, Boundary::Periodic, vec![0.0; 3]).is_err());
    }

    #[test]
    fn ball_cells_match_brute_force() {
        let g = SpaceGrid::cube(2, -2.0, 0.125, 32).unwrap();
        let z = [0.31, -0.7, 0.0];
        let mut cells = Vec::new();
        g.ball_cells(&z, 1.0, &mut cells);
        let brute: Vec<usize> = (0..g.len())
            .filter(|&i| {
                let c = g.centre(i);
                (c[0] - z[0]).powi(2) + (c[1] - z[1]).powi(2) <= 1.0
            })
            .collect();
        assert_eq!(cells, brute);
    }

    #[test]
    fn nearest_lookup_is_zero_outside() {
        let t = TimeGrid::new(0.0, 0.5, 2).unwrap();
        let s = SpaceGrid::cube(1, 0.0, 0.5, 2).unwrap();
        let f =
            GridFunction::from_fn(t, s, Boundary::ZeroExtension, |t, x| 10.0 * t + x[0]).unwrap();
        assert_eq!(f.eval_nearest(0.1, &[0.6]), 10.0 * 0.25 + 0.75);
        assert_eq!(f.eval_nearest(1.1, &[0.6]), 0.0);
        assert_eq!(f.eval_nearest(0.1, &[-0.1]), 0.0);
    }
}
