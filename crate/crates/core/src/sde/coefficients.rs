use alloc::string::String;

use crate::prelude::*;

use crate::cutoff::CutoffFamily;
use crate::error::{ensure, Error, Result};
use crate::grid::MAX_DIM;
use crate::pde::{Drift, Matrix, SINGULAR_FLOOR_SQ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FamilyTag {
    /// `sigma = f_{R,n}^(-alpha/2)(|x|²) I`, `b = 0`, `d >= 3`.
    RadialPower,
    /// `sigma = diag(f_{R,n}^(alpha/2)(x_2²), f_{R,n}^(alpha/2)(x_1²))`, `b = 0`, `d = 2`.
    SwappedPower,
    /// `dX = |X|^{-alpha} dW + lambda X |X|^{-beta-1} dt`, regularized through `f_{R,n}`.
    SingularRadial,
    /// `sigma = I`, `b = 0`.
    Brownian,
    /// Constant `sigma` with an arbitrary drift.
    Custom,
}

impl FamilyTag {
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::RadialPower => "radial-power",
            FamilyTag::SwappedPower => "swapped-power",
            FamilyTag::SingularRadial => "singular-radial",
            FamilyTag::Brownian => "brownian",
            FamilyTag::Custom => "custom",
        }
    }

    /// Parameter range the family is defined for.
    pub fn condition(self) -> &'static str {
        match self {
            FamilyTag::RadialPower => "d >= 3 and 0 < alpha < (d/2 - 1) ∧ (1/2 + 1/(d-1))",
            FamilyTag::SwappedPower => "d = 2 and 0 < alpha < 1/4",
            FamilyTag::SingularRadial => {
                "d >= 3, lambda >= 0 and 0 < beta < 2 alpha when lambda > 0"
            }
            FamilyTag::Brownian => "any d in 1..=3",
            FamilyTag::Custom => "constant finite sigma and a valid drift",
        }
    }
}

/// Parameters of a named family; unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilySpec {
    pub tag: FamilyTag,
    pub d: usize,
    pub big_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Mollification index; `None` is the raw field with the `|x| >= 1e-12` floor.
    pub n: Option<u32>,
}

impl FamilySpec {
    pub fn brownian(d: usize) -> Self {
        FamilySpec {
            tag: FamilyTag::Brownian,
            d,
            big_r: 1.0,
            alpha: 0.0,
            beta: 0.0,
            lambda: 0.0,
            n: None,
        }
    }

    pub fn with_n(self, n: Option<u32>) -> Self {
        FamilySpec { n, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// `scale f_{R,n}^(-alpha/2)(|x|²) I`.
    Radial {
        alpha: f64,
        scale: f64,
        family: CutoffFamily,
    },
    /// `diag(f_{R,n}^(alpha/2)(x_2²), f_{R,n}^(alpha/2)(x_1²))`.
    Swapped {
        alpha: f64,
        family: CutoffFamily,
    },
    Constant(Matrix),
}

/// `sigma` and `b` of `dX = sqrt(2) sigma(t, X) dW + b(t, X) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeCoefficients {
    pub d: usize,
    pub tag: FamilyTag,
    pub noise: Noise,
    pub drift: Drift,
}

fn violation(tag: FamilyTag, what: String) -> Error {
    Error::validation(format!(
        "{} requires {}: {what}",
        tag.name(),
        tag.condition()
    ))
}

fn norm_sq(x: &[f64; MAX_DIM], d: usize) -> f64 {
    x[..d].iter().map(|v| v * v).sum()
}

pub fn build_coefficients(spec: &FamilySpec) -> Result<SdeCoefficients> {
    let FamilySpec {
        tag,
        d,
        big_r,
        alpha,
        beta,
        lambda,
        n,
    } = *spec;
    ensure((1..=MAX_DIM).contains(&d), || {
        format!("dimension must be 1..=3 (got {d})")
    })?;
    let family = || CutoffFamily::new(big_r, n);
    let fail = |what: String| Err(violation(tag, what));
    let (noise, drift) = match tag {
        FamilyTag::RadialPower => {
            let df = d as f64;
            let cap = (0.5 * df - 1.0).min(0.5 + 1.0 / (df - 1.0));
            if d < 3 {
                return fail(format!("got d = {d}"));
            }
            if !(alpha > 0.0 && alpha < cap) {
                return fail(format!("got alpha = {alpha}, bound {cap}"));
            }
            (
                Noise::Radial {
                    alpha,
                    scale: 1.0,
                    family: family()?,
                },
                Drift::Zero,
            )
        }
        FamilyTag::SwappedPower => {
            if d != 2 {
                return fail(format!("got d = {d}"));
            }
            if !(alpha > 0.0 && alpha < 0.25) {
                return fail(format!("got alpha = {alpha}"));
            }
            (
                Noise::Swapped {
                    alpha,
                    family: family()?,
                },
                Drift::Zero,
            )
        }
        FamilyTag::SingularRadial => {
            if d < 3 {
                return fail(format!("got d = {d}"));
            }
            if !(alpha >= 0.0 && alpha.is_finite()) {
                return fail(format!("got alpha = {alpha}"));
            }
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return fail(format!("got lambda = {lambda}"));
            }
            if lambda > 0.0 && !(beta > 0.0 && beta < 2.0 * alpha) {
                return fail(format!("got beta = {beta} with alpha = {alpha}"));
            }
            let family = family()?;
            // The scheme carries a factor sqrt(2) in front of sigma.
            let noise = Noise::Radial {
                alpha,
                scale: core::f64::consts::FRAC_1_SQRT_2,
                family,
            };
            let drift = if lambda > 0.0 {
                Drift::Radial {
                    lambda,
                    beta,
                    family,
                }
            } else {
                Drift::Zero
            };
            (noise, drift)
        }
        FamilyTag::Brownian => (Noise::Constant(identity(d)), Drift::Zero),
        FamilyTag::Custom => {
            return Err(Error::validation(
                "custom coefficients are built with SdeCoefficients::custom",
            ));
        }
    };
    Ok(SdeCoefficients {
        d,
        tag,
        noise,
        drift,
    })
}

fn identity(d: usize) -> Matrix {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (i, row) in m.iter_mut().enumerate().take(d) {
        row[i] = 1.0;
    }
    m
}

impl SdeCoefficients {
    pub fn custom(d: usize, sigma: Matrix, drift: Drift) -> Result<Self> {
        ensure((1..=MAX_DIM).contains(&d), || {
            format!("dimension must be 1..=3 (got {d})")
        })?;
        ensure(
            sigma[..d]
                .iter()
                .all(|row| row[..d].iter().all(|v| v.is_finite())),
            || "custom sigma must be finite".into(),
        )?;
        crate::pde::CoefficientField::new(
            d,
            crate::pde::Diffusion::Identity,
            drift.clone(),
            Drift::Zero,
            crate::pde::Forcing::Zero,
        )?;
        Ok(SdeCoefficients {
            d,
            tag: FamilyTag::Custom,
            noise: Noise::Constant(sigma),
            drift,
        })
    }

    /// True when the evaluation at `x` hits the `|x| >= 1e-12` floor of a raw field.
    pub fn floored(&self, x: &[f64; MAX_DIM]) -> bool {
        let raw_radial = match (&self.noise, &self.drift) {
            (Noise::Radial { family, alpha, .. }, _) if family.n.is_none() && *alpha > 0.0 => true,
            (_, Drift::Radial { family, .. }) => family.n.is_none(),
            _ => false,
        };
        raw_radial && norm_sq(x, self.d) < SINGULAR_FLOOR_SQ
    }

    pub fn sigma(&self, x: &[f64; MAX_DIM]) -> Matrix {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        match &self.noise {
            Noise::Radial {
                alpha,
                scale,
                family,
            } => {
                let v = scale * self.radial_factor(*alpha, family, x);
                for (i, row) in m.iter_mut().enumerate().take(self.d) {
                    row[i] = v;
                }
            }
            Noise::Swapped { alpha, family } => {
                m[0][0] = family.power(0.5 * alpha, x[1] * x[1]);
                m[1][1] = family.power(0.5 * alpha, x[0] * x[0]);
            }
            Noise::Constant(s) => m = *s,
        }
        m
    }

    fn radial_factor(&self, alpha: f64, family: &CutoffFamily, x: &[f64; MAX_DIM]) -> f64 {
        let r = norm_sq(x, self.d);
        let r = if family.n.is_none() {
            r.max(SINGULAR_FLOOR_SQ)
        } else {
            r
        };
        family.power(-0.5 * alpha, r)
    }

    pub fn drift(&self, t: f64, x: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        self.drift.eval(self.d, t, x)
    }

    /// `sigma(x) xi` without forming the matrix for the diagonal families.
    pub fn apply_sigma(&self, x: &[f64; MAX_DIM], xi: &[f64; MAX_DIM]) -> [f64; MAX_DIM] {
        let mut out = [0.0; MAX_DIM];
        match &self.noise {
            Noise::Radial {
                alpha,
                scale,
                family,
            } => {
                let v = scale * self.radial_factor(*alpha, family, x);
                for i in 0..self.d {
                    out[i] = v * xi[i];
                }
            }
            Noise::Swapped { .. } => {
                let m = self.sigma(x);
                out[0] = m[0][0] * xi[0];
                out[1] = m[1][1] * xi[1];
            }
            Noise::Constant(s) => {
                for i in 0..self.d {
                    out[i] = (0..self.d).map(|j| s[i][j] * xi[j]).sum();
                }
            }
        }
        out
    }

    /// `a = sigma sigma^T`, the diffusion matrix of the generator `a_ij d_ij + b.grad`.
    pub fn diffusion_matrix(&self, x: &[f64; MAX_DIM]) -> Matrix {
        let s = self.sigma(x);
        let mut a = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..self.d {
            for j in 0..self.d {
                a[i][j] = (0..self.d).map(|k| s[i][k] * s[j][k]).sum();
            }
        }
        a
    }

    /// `sum_i d_i a^{ij}(x)` by central differences with step `h`.
    pub fn divergence_fd(&self, x: &[f64; MAX_DIM], h: f64) -> [f64; MAX_DIM] {
        let mut div = [0.0; MAX_DIM];
        for i in 0..self.d {
            let (mut xp, mut xm) = (*x, *x);
            xp[i] += h;
            xm[i] -= h;
            let (ap, am) = (self.diffusion_matrix(&xp), self.diffusion_matrix(&xm));
            for j in 0..self.d {
                div[j] += (ap[i][j] - am[i][j]) / (2.0 * h);
            }
        }
        div
    }
}
