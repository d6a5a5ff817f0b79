//! Named coefficient families and test functions.

use std::f64::consts::PI;

use parabolic_core::cutoff::CutoffFamily;
use parabolic_core::grid::MAX_DIM;
use parabolic_core::pde::{CoefficientField, Diffusion, Drift, Forcing, Matrix};
use parabolic_core::sde::{build_coefficients, FamilySpec, FamilyTag, SdeCoefficients};
use parabolic_core::{Boundary, GridFunction, SpaceGrid, TimeGrid};
use serde::Serialize;

use crate::config::FamilyParams;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// Usable as PDE coefficients and as SDE coefficients.
    Coefficients,
    /// SDE coefficients only.
    Diffusion,
    TestFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub category: Category,
    /// Parameter range the fixture is defined for.
    pub condition: &'static str,
    pub description: &'static str,
}

const CATALOG: &[Fixture] = &[
    Fixture {
        name: "identity",
        category: Category::Coefficients,
        condition: "any d in 1..=3",
        description: "a = I, no drift",
    },
    Fixture {
        name: "diagonal-power",
        category: Category::Coefficients,
        condition: "power >= 0, or shift > 0 for negative powers",
        description: "a_ii = (x_i² + shift)^{power/2}, no drift",
    },
    Fixture {
        name: "radial-power",
        category: Category::Coefficients,
        condition: "d >= 3 and 0 < alpha < (d/2 - 1) ∧ (1/2 + 1/(d-1))",
        description: "a = f_{R,n}^(-alpha)(|x|²) I, singular at the origin for raw n",
    },
    Fixture {
        name: "swapped-power",
        category: Category::Coefficients,
        condition: "d = 2 and 0 < alpha < 1/4",
        description: "a = diag(f_{R,n}^(alpha)(x_2²), f_{R,n}^(alpha)(x_1²)), degenerate on the axes for raw n",
    },
    Fixture {
        name: "rotation-drift",
        category: Category::Coefficients,
        condition: "d >= 2, rho > 0",
        description: "a = I, b = omega (-rho tanh(x_2/rho), rho tanh(x_1/rho)), divergence free",
    },
    Fixture {
        name: "singular-radial",
        category: Category::Coefficients,
        condition: "d >= 3, lambda >= 0 and 0 < beta < 2 alpha when lambda > 0",
        description: "noise |x|^{-alpha}, drift lambda x |x|^{-beta-1}, regularized by f_{R,n}",
    },
    Fixture {
        name: "brownian",
        category: Category::Diffusion,
        condition: "any d in 1..=3",
        description: "sigma = I, b = 0",
    },
    Fixture {
        name: "custom",
        category: Category::Diffusion,
        condition: "constant finite sigma and drift",
        description: "constant sigma matrix and constant drift from the configuration",
    },
    Fixture {
        name: "unit-constant",
        category: Category::TestFunction,
        condition: "unit box",
        description: "f = 1; every mixed norm on the unit box equals 1",
    },
    Fixture {
        name: "gaussian-bump",
        category: Category::TestFunction,
        condition: "unit box",
        description: "f = (1 + t) exp(-16 |x - 1/2|²)",
    },
    Fixture {
        name: "product-sine",
        category: Category::TestFunction,
        condition: "unit box",
        description: "f = sin(pi t) prod_i sin(pi x_i)",
    },
    Fixture {
        name: "heat-mode",
        category: Category::TestFunction,
        condition: "unit box",
        description: "f = exp(-d pi² t) prod_i sin(pi x_i), a solution of the heat equation",
    },
];

pub fn list_builtin_fixtures() -> &'static [Fixture] {
    CATALOG
}

pub fn lookup(name: &str) -> Result<&'static Fixture> {
    CATALOG.iter().find(|f| f.name == name).ok_or_else(|| {
        let names: Vec<&str> = CATALOG.iter().map(|f| f.name).collect();
        LabError::config(format!(
            "unknown fixture {name:?}; known fixtures: {}",
            names.join(", ")
        ))
    })
}

fn need(value: Option<f64>, what: &str, family: &str) -> Result<f64> {
    value.ok_or_else(|| LabError::config(format!("family {family} needs `{what}`")))
}

fn cutoff(p: &FamilyParams) -> Result<CutoffFamily> {
    Ok(CutoffFamily::new(p.big_r, p.n)?)
}

/// PDE coefficients of a named family with the given forcing.
pub fn pde_field(p: &FamilyParams, forcing: Forcing) -> Result<CoefficientField> {
    let fixture = lookup(&p.name)?;
    if fixture.category != Category::Coefficients {
        return Err(LabError::config(format!(
            "{} is not a PDE coefficient family",
            p.name
        )));
    }
    let (a, b1) = match fixture.name {
        "identity" => (Diffusion::Identity, Drift::Zero),
        "diagonal-power" => {
            let mut scale = [0.0; MAX_DIM];
            scale[..p.d.min(MAX_DIM)].fill(1.0);
            let power = p.power.unwrap_or(0.5);
            let shift = p.shift.unwrap_or(0.0);
            (
                Diffusion::DiagonalPower {
                    scale,
                    power,
                    shift,
                },
                Drift::Zero,
            )
        }
        "radial-power" | "swapped-power" => {
            // The range checks of the diffusion families live with the SDE builder.
            let spec = family_spec(p)?;
            build_coefficients(&spec)?;
            let alpha = spec.alpha;
            let family = cutoff(p)?;
            let a = if fixture.name == "radial-power" {
                Diffusion::RadialPower { alpha, family }
            } else {
                Diffusion::SwappedPower { alpha, family }
            };
            (a, Drift::Zero)
        }
        "rotation-drift" => {
            let omega = p.omega.unwrap_or(1.0);
            let rho = p.rho.unwrap_or(1.0);
            (Diffusion::Identity, Drift::Rotation { omega, rho })
        }
        "singular-radial" => {
            let spec = family_spec(p)?;
            build_coefficients(&spec)?;
            let family = cutoff(p)?;
            let drift = if spec.lambda > 0.0 {
                Drift::Radial {
                    lambda: spec.lambda,
                    beta: spec.beta,
                    family,
                }
            } else {
                Drift::Zero
            };
            (
                Diffusion::RadialPower {
                    alpha: spec.alpha,
                    family,
                },
                drift,
            )
        }
        other => unreachable!("catalog entry {other} without a builder"),
    };
    Ok(CoefficientField::new(p.d, a, b1, Drift::Zero, forcing)?)
}

/// Core description of a named SDE family.
pub fn family_spec(p: &FamilyParams) -> Result<FamilySpec> {
    let tag = match lookup(&p.name)?.name {
        "radial-power" => FamilyTag::RadialPower,
        "swapped-power" => FamilyTag::SwappedPower,
        "singular-radial" => FamilyTag::SingularRadial,
        "brownian" => FamilyTag::Brownian,
        "custom" => FamilyTag::Custom,
        other => {
            return Err(LabError::config(format!(
                "{other} is not a diffusion family"
            )))
        }
    };
    let alpha = match tag {
        FamilyTag::RadialPower | FamilyTag::SwappedPower | FamilyTag::SingularRadial => {
            need(p.alpha, "alpha", &p.name)?
        }
        _ => 0.0,
    };
    Ok(FamilySpec {
        tag,
        d: p.d,
        big_r: p.big_r,
        alpha,
        beta: p.beta.unwrap_or(0.0),
        lambda: p.lambda.unwrap_or(0.0),
        n: p.n,
    })
}

pub fn sde_coefficients(p: &FamilyParams) -> Result<SdeCoefficients> {
    let spec = family_spec(p)?;
    if spec.tag != FamilyTag::Custom {
        return Ok(build_coefficients(&spec)?);
    }
    let d = p.d;
    let mut sigma: Matrix = [[0.0; MAX_DIM]; MAX_DIM];
    let rows = p
        .sigma
        .as_ref()
        .ok_or_else(|| LabError::config("family custom needs `sigma`"))?;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(LabError::config(format!("custom sigma must be {d} x {d}")));
    }
    for (i, row) in rows.iter().enumerate() {
        sigma[i][..d].copy_from_slice(row);
    }
    let drift = match &p.drift {
        None => Drift::Zero,
        Some(b) if b.len() == d => {
            let mut c = [0.0; MAX_DIM];
            c[..d].copy_from_slice(b);
            Drift::Constant(c)
        }
        Some(_) => {
            return Err(LabError::config(format!(
                "custom drift must have {d} entries"
            )))
        }
    };
    Ok(SdeCoefficients::custom(d, sigma, drift)?)
}

/// Named test function on `[0, 1]^d x [0, 1]` with `cells` cells per axis and
/// `steps` time samples.
pub fn test_function(name: &str, d: usize, cells: usize, steps: usize) -> Result<GridFunction> {
    let fixture = lookup(name)?;
    if fixture.category != Category::TestFunction {
        return Err(LabError::config(format!("{name} is not a test function")));
    }
    if cells == 0 || steps < 2 {
        return Err(LabError::config(
            "need at least one cell and two time samples",
        ));
    }
    let space = SpaceGrid::cube(d, 0.0, 1.0 / cells as f64, cells)?;
    let time = TimeGrid::new(0.0, 1.0 / steps as f64, steps)?;
    let f = |t: f64, x: &[f64; MAX_DIM]| -> f64 {
        let sines: f64 = x[..d].iter().map(|v| (PI * v).sin()).product();
        match name {
            "unit-constant" => 1.0,
            "gaussian-bump" => {
                (1.0 + t) * (-16.0 * x[..d].iter().map(|v| (v - 0.5).powi(2)).sum::<f64>()).exp()
            }
            "product-sine" => (PI * t).sin() * sines,
            _ => (-(d as f64) * PI * PI * t).exp() * sines,
        }
    };
    Ok(GridFunction::from_fn(
        time,
        space,
        Boundary::ZeroExtension,
        f,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_are_unique_and_carry_conditions() {
        let names: std::collections::BTreeSet<_> = CATALOG.iter().map(|f| f.name).collect();
        assert_eq!(names.len(), CATALOG.len());
        assert!(lookup("radial-power")
            .unwrap()
            .condition
            .contains("(d/2 - 1) ∧ (1/2 + 1/(d-1))"));
        assert!(CATALOG.iter().all(|f| !f.condition.is_empty()));
        assert_eq!(lookup("nonexistent").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn every_coefficient_family_builds() {
        for f in CATALOG
            .iter()
            .filter(|f| f.category == Category::Coefficients)
        {
            let d = match f.name {
                "swapped-power" | "rotation-drift" => 2,
                "radial-power" | "singular-radial" => 3,
                _ => 1,
            };
            let mut p = FamilyParams::named(f.name, d);
            p.alpha = Some(0.2);
            p.beta = Some(0.1);
            p.lambda = Some(1.0);
            p.n = Some(4);
            pde_field(&p, Forcing::Zero).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        }
    }

    #[test]
    fn sde_families_check_ranges() {
        let mut p = FamilyParams::named("radial-power", 3);
        assert!(sde_coefficients(&p).is_err());
        p.alpha = Some(0.3);
        assert!(sde_coefficients(&p).is_ok());
        p.alpha = Some(0.6);
        assert_eq!(sde_coefficients(&p).unwrap_err().exit_code(), 2);
        let mut c = FamilyParams::named("custom", 2);
        c.sigma = Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        c.drift = Some(vec![0.5, 0.0]);
        assert!(sde_coefficients(&c).is_ok());
        c.drift = Some(vec![0.5]);
        assert!(sde_coefficients(&c).is_err());
    }

    #[test]
    fn unit_constant_is_one() {
        let f = test_function("unit-constant", 2, 4, 4).unwrap();
        assert!(f.values().iter().all(|v| *v == 1.0));
        assert!(test_function("identity", 2, 4, 4).is_err());
    }
}
