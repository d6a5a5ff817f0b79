use crate::prelude::*;

use crate::cutoff::CutoffFamily;
use crate::embeddings::ExponentConfig;
use crate::error::{ensure, Result};
use crate::grid::{Boundary, GridFunction, SpaceGrid, TimeGrid, MAX_DIM};

pub type Matrix = [[f64; MAX_DIM]; MAX_DIM];

/// Smallest `|x|²` used by the unshifted singular families.
pub const SINGULAR_FLOOR_SQ: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Identity,
    /// Constant symmetric matrix.
    Constant(Matrix),
    /// `a_ii = scale_i (x_i² + shift)^{power/2}`.
    DiagonalPower {
        scale: [f64; MAX_DIM],
        power: f64,
        shift: f64,
    },
    /// `f_{R,n}^(-alpha)(|x|²) I`, singular at the origin when unshifted.
    RadialPower {
        alpha: f64,
        family: CutoffFamily,
    },
    /// `diag(f_{R,n}^(alpha)(x_2²), f_{R,n}^(alpha)(x_1²))` in two dimensions; degenerate
    /// on the axes when unshifted.
    SwappedPower {
        alpha: f64,
        family: CutoffFamily,
    },
    /// `d` diagonal entries or `d*d` row-major entries, looked up by nearest cell.
    Tabulated(Vec<GridFunction>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Drift {
    Zero,
    Constant([f64; MAX_DIM]),
    /// `omega (-rho tanh(x_2/rho), rho tanh(x_1/rho), 0)`; each component is
    /// independent of its own coordinate, so the field is divergence free exactly,
    /// also for difference quotients.
    Rotation {
        omega: f64,
        rho: f64,
    },
    /// `lambda x f_{R,n}^(-(beta+1)/2)(|x|²)`, which is `lambda x |x|^{-beta-1}` near the
    /// origin when unshifted.
    Radial {
        lambda: f64,
        beta: f64,
        family: CutoffFamily,
    },
    Tabulated(Vec<GridFunction>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Constant(f64),
    /// `amplitude (1 - |x - centre|²/radius²)_+²` for `t` in `[t_lo, t_hi)`.
    Bump {
        amplitude: f64,
        centre: [f64; MAX_DIM],
        radius: f64,
        t_lo: f64,
        t_hi: f64,
    },
    Tabulated(GridFunction),
}

/// Coefficients of `du/dt = div(a grad u) + (b1 + b2).grad u + f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub d: usize,
    pub a: Diffusion,
    pub b1: Drift,
    pub b2: Drift,
    pub f: Forcing,
    /// Integrability exponents the field is claimed to satisfy.
    pub declared: Option<ExponentConfig>,
}

fn norm_sq(x: &[f64; MAX_DIM], d: usize) -> f64 {
    x[..d].iter().map(|v| v * v).sum()
}

fn check_table(fields: &[GridFunction], d: usize, counts: &[usize], what: &str) -> Result<()> {
    ensure(counts.contains(&fields.len()), || {
        format!(
            "tabulated {what} needs {counts:?} components (got {})",
            fields.len()
        )
    })?;
    ensure(fields.iter().all(|g| g.d() == d), || {
        format!("tabulated {what} must live on a {d}-dimensional grid")
    })
}

impl Diffusion {
    pub fn eval(&self, d: usize, t: f64, x: &[f64; MAX_DIM]) -> Matrix {
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        match self {
            Diffusion::Identity => {
                for (i, row) in a.iter_mut().enumerate().take(d) {
                    row[i] = 1.0;
                }
            }
            Diffusion::Constant(m) => {
                for i in 0..d {
                    a[i][..d].copy_from_slice(&m[i][..d]);
                }
            }
            Diffusion::DiagonalPower {
                scale,
                power,
                shift,
            } => {
                for i in 0..d {
                    a[i][i] = scale[i] * (x[i] * x[i] + shift).powf(0.5 * power);
                }
            }
            Diffusion::RadialPower { alpha, family } => {
                let r = norm_sq(x, d);
                let r = if family.n.is_none() {
                    r.max(SINGULAR_FLOOR_SQ)
                } else {
                    r
                };
                let v = family.power(-alpha, r);
                for (i, row) in a.iter_mut().enumerate().take(d) {
                    row[i] = v;
                }
            }
            Diffusion::SwappedPower { alpha, family } => {
                a[0][0] = family.power(*alpha, x[1] * x[1]);
                a[1][1] = family.power(*alpha, x[0] * x[0]);
            }
            Diffusion::Tabulated(entries) => {
                if entries.len() == d {
                    for (i, g) in entries.iter().enumerate() {
                        a[i][i] = g.eval_nearest(t, &x[..d]);
                    }
                } else {
                    for i in 0..d {
                        for j in 0..d {
                            a[i][j] = entries[i * d + j].eval_nearest(t, &x[..d]);
                        }
                    }
                }
            }
        }
        a
    }

    pub fn is_diagonal(&self, d: usize) -> bool {
        match self {
            Diffusion::Constant(m) => (0..d).all(|i| (0..d).all(|j| i == j || m[i][j] == 0.0)),
            Diffusion::Tabulated(entries) => entries.len() == d,
            _ => true,
        }
    }

    fn time_independent(&self) -> bool {
        !matches!(self, Diffusion::Tabulated(_))
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Diffusion::Constant(m) => ensure(
                (0..d).all(|i| (0..d).all(|j| m[i][j] == m[j][i] && m[i][j].is_finite())),
                || "constant diffusion matrix must be finite and symmetric".into(),
            ),
            Diffusion::DiagonalPower {
                scale,
                shift,
                power,
            } => ensure(
                scale[..d].iter().all(|&s| s >= 0.0 && s.is_finite())
                    && *shift >= 0.0
                    && power.is_finite()
                    && (*power >= 0.0 || *shift > 0.0),
                || {
                    "diagonal-power needs nonnegative scales, shift >= 0, and shift > 0 for negative powers".into()
                },
            ),
            Diffusion::RadialPower { alpha, .. } => {
                ensure(alpha.is_finite() && *alpha >= 0.0, || {
                    format!("alpha must be nonnegative (got {alpha})")
                })
            }
            Diffusion::SwappedPower { alpha, .. } => {
                ensure(d == 2, || {
                    format!("swapped-power diffusion is two-dimensional (got d = {d})")
                })?;
                ensure(alpha.is_finite() && *alpha >= 0.0, || {
                    format!("alpha must be nonnegative (got {alpha})")
                })
            }
            Diffusion::Tabulated(e) => check_table(e, d, &[d, d * d], "diffusion"),
            Diffusion::Identity => Ok(()),
        }
    }
}

impl Drift {
    pub fn eval(&self, d: usize, t: f64, x: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut b = [0.0; MAX_DIM];
        match self {
            Drift::Zero => {}
            Drift::Constant(c) => b[..d].copy_from_slice(&c[..d]),
            Drift::Rotation { omega, rho } => {
                b[0] = -omega * rho * (x[1] / rho).tanh();
                b[1] = omega * rho * (x[0] / rho).tanh();
            }
            Drift::Radial {
                lambda,
                beta,
                family,
            } => {
                let r = norm_sq(x, d);
                let r = if family.n.is_none() {
                    r.max(SINGULAR_FLOOR_SQ)
                } else {
                    r
                };
                let s = lambda * family.power(-0.5 * (beta + 1.0), r);
                for i in 0..d {
                    b[i] = s * x[i];
                }
            }
            Drift::Tabulated(comps) => {
                for (i, g) in comps.iter().enumerate() {
                    b[i] = g.eval_nearest(t, &x[..d]);
                }
            }
        }
        b
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Drift::Zero)
    }

    fn time_independent(&self) -> bool {
        !matches!(self, Drift::Tabulated(_))
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Drift::Constant(c) => ensure(c[..d].iter().all(|v| v.is_finite()), || {
                "drift must be finite".into()
            }),
            Drift::Rotation { omega, rho } => {
                ensure(d >= 2, || "rotation drift needs d >= 2".into())?;
                ensure(omega.is_finite() && *rho > 0.0 && rho.is_finite(), || {
                    "rotation drift needs finite omega and rho > 0".into()
                })
            }
            Drift::Radial { lambda, beta, .. } => {
                ensure(
                    lambda.is_finite() && beta.is_finite() && *beta >= -1.0,
                    || {
                        format!("radial drift needs finite lambda and beta >= -1 (got {lambda}, {beta})")
                    },
                )
            }
            Drift::Tabulated(c) => check_table(c, d, &[d], "drift"),
            Drift::Zero => Ok(()),
        }
    }
}

impl Forcing {
    pub fn eval(&self, d: usize, t: f64, x: &[f64; MAX_DIM]) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant(c) => *c,
            Forcing::Bump {
                amplitude,
                centre,
                radius,
                t_lo,
                t_hi,
            } => {
                if t < *t_lo || t >= *t_hi {
                    return 0.0;
                }
                let r2: f64 =
                    (0..d).map(|i| (x[i] - centre[i]).powi(2)).sum::<f64>() / (radius * radius);
                if r2 >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - r2) * (1.0 - r2)
                }
            }
            Forcing::Tabulated(g) => g.eval_nearest(t, &x[..d]),
        }
    }

    pub fn scaled(&self, c: f64) -> Forcing {
        match self {
            Forcing::Zero => Forcing::Zero,
            Forcing::Constant(v) => Forcing::Constant(c * v),
            Forcing::Bump {
                amplitude,
                centre,
                radius,
                t_lo,
                t_hi,
            } => Forcing::Bump {
                amplitude: c * amplitude,
                centre: *centre,
                radius: *radius,
                t_lo: *t_lo,
                t_hi: *t_hi,
            },
            Forcing::Tabulated(g) => Forcing::Tabulated(g.scale(c)),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match self {
            Forcing::Constant(c) => ensure(c.is_finite(), || "forcing must be finite".into()),
            Forcing::Bump {
                amplitude,
                radius,
                t_lo,
                t_hi,
                ..
            } => ensure(
                amplitude.is_finite() && *radius > 0.0 && t_lo <= t_hi,
                || "bump forcing needs finite amplitude, radius > 0 and t_lo <= t_hi".into(),
            ),
            Forcing::Tabulated(g) => check_table(core::slice::from_ref(g), d, &[1], "forcing"),
            Forcing::Zero => Ok(()),
        }
    }
}

impl CoefficientField {
    pub fn new(d: usize, a: Diffusion, b1: Drift, b2: Drift, f: Forcing) -> Result<Self> {
        let field = CoefficientField {
            d,
            a,
            b1,
            b2,
            f,
            declared: None,
        };
        field.validate()?;
        Ok(field)
    }

    /// Pure diffusion with zero drift and forcing.
    pub fn diffusion_only(d: usize, a: Diffusion) -> Result<Self> {
        CoefficientField::new(d, a, Drift::Zero, Drift::Zero, Forcing::Zero)
    }

    pub fn with_forcing(mut self, f: Forcing) -> Result<Self> {
        f.validate(self.d)?;
        self.f = f;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure((1..=MAX_DIM).contains(&self.d), || {
            format!("dimension must be 1..=3 (got {})", self.d)
        })?;
        self.a.validate(self.d)?;
        self.b1.validate(self.d)?;
        self.b2.validate(self.d)?;
        self.f.validate(self.d)
    }

    pub fn diffusion(&self, t: f64, x: &[f64; MAX_DIM]) -> Matrix {
        self.a.eval(self.d, t, x)
    }

    /// Total drift `b1 + b2`.
    pub fn drift(&self, t: f64, x: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut b = self.b1.eval(self.d, t, x);
        let b2 = self.b2.eval(self.d, t, x);
        for i in 0..MAX_DIM {
            b[i] += b2[i];
        }
        b
    }

    pub fn forcing(&self, t: f64, x: &[f64; MAX_DIM]) -> f64 {
        self.f.eval(self.d, t, x)
    }

    pub fn has_drift(&self) -> bool {
        !(self.b1.is_zero() && self.b2.is_zero())
    }

    /// True when `a` and `b` do not depend on time; the forcing may.
    pub fn is_autonomous(&self) -> bool {
        self.a.time_independent() && self.b1.time_independent() && self.b2.time_independent()
    }

    /// Forcing sampled at the cell centres of the given grid.
    pub fn forcing_grid(
        &self,
        time: TimeGrid,
        space: SpaceGrid,
        boundary: Boundary,
    ) -> Result<GridFunction> {
        GridFunction::from_fn(time, space, boundary, |t, x| self.forcing(t, x))
    }

    pub fn scaled_forcing(&self, c: f64) -> CoefficientField {
        CoefficientField {
            f: self.f.scaled(c),
            ..self.clone()
        }
    }
}
