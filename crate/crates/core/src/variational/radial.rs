use crate::prelude::*;

use super::descent::{minimize, MAX_KNOTS};
use super::{step_one_cutoff, CutoffProfile, Discretized};
use crate::error::{ensure, Result};
use crate::grid::GridFunction;
use crate::norms::{gradient_magnitude, slab_norm, MixedNormSpec, PowerSum};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialReport {
    /// Infimum over radial profiles of `||w |grad eta|^alpha||_{L^p_x L^q_t}`.
    pub j_value: f64,
    /// `(delta-tau)^{-gamma} (||grad w||^theta ||w||^{1-theta} + ||w||)`, norms in `L^kappa_x L^q_t` over `I x B_delta`.
    pub rhs_value: f64,
    pub gamma: f64,
    pub profile: CutoffProfile,
}

/// Radial cutoff infimum in two space dimensions.
///
/// With `F(x) = ||w(., x)||_{L^q(I)}` and `eta(x) = l(|x|)` the functional becomes
/// `(int |l'(s)|^{alpha p} M(s) ds)^{1/p}` where `M(s)` is the mass of `F^p` on the
/// circle of radius `s`; circle masses come from cell-centre shell quadrature on the
/// grid. `gamma = alpha - 1/p + 1/kappa` is the exponent of the one-dimensional
/// bound applied to that functional.
#[allow(clippy::too_many_arguments)]
pub fn radial_embedding_infimum(
    w: &GridFunction,
    alpha: f64,
    p: f64,
    q: f64,
    kappa: f64,
    theta: f64,
    tau: f64,
    delta: f64,
    radial_knots: usize,
) -> Result<RadialReport> {
    ensure(w.d() == 2, || {
        format!("radial reduction is implemented for d = 2 (got {})", w.d())
    })?;
    ensure(alpha > 0.0 && p >= 1.0 && q >= 1.0 && kappa >= 1.0, || {
        "need alpha > 0 and p, q, kappa >= 1".into()
    })?;
    ensure(alpha * p >= 1.0, || {
        format!("need alpha * p >= 1 (got {})", alpha * p)
    })?;
    ensure((0.0..=1.0).contains(&theta), || {
        format!("theta must lie in [0, 1] (got {theta})")
    })?;
    let mismatch = 1.0 / kappa - 1.0 / p - theta;
    ensure(mismatch.abs() <= 1e-12, || {
        format!("exponent relation 1/kappa = 1/p + theta fails by {mismatch:e}")
    })?;
    ensure(1.0 <= tau && tau < delta && delta <= 2.0, || {
        format!("need 1 <= tau < delta <= 2 (got {tau}, {delta})")
    })?;
    ensure((2..=MAX_KNOTS).contains(&radial_knots), || {
        format!("radial_knots must lie in 2..=400 (got {radial_knots})")
    })?;

    let ns = w.nspace();
    let mut time_norm = vec![PowerSum::new(q); ns];
    for k in 0..w.time.nt {
        for (acc, &v) in time_norm.iter_mut().zip(w.slice(k)) {
            acc.push(v, w.time.dt);
        }
    }
    let intervals = radial_knots - 1;
    let h = (delta - tau) / intervals as f64;
    let dv = w.space.cell_volume();
    let mut shells = vec![0.0; intervals];
    for (i, acc) in time_norm.into_iter().enumerate() {
        let x = w.space.centre(i);
        let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if rho < tau || rho > delta {
            continue;
        }
        let j = (((rho - tau) / h) as usize).min(intervals - 1);
        shells[j] += crate::norms::abs_pow(acc.finish(), p) * dv;
    }
    let disc = Discretized {
        alphas: vec![alpha * p],
        ps: vec![p],
        h,
        masses: vec![shells.clone()],
    };
    let density: Vec<f64> = shells.iter().map(|m| m / h).collect();
    let mut starts = vec![vec![1.0; intervals]];
    if let Ok(prof) = step_one_cutoff(&density, 1.0 / (alpha * p), kappa / p, tau, delta) {
        starts.push(prof.decrements());
    }
    let (j_value, profile) = minimize(&disc, starts, tau, delta)?;

    let gamma = alpha - 1.0 / p + 1.0 / kappa;
    let spec = MixedNormSpec::space_time(kappa, q);
    let z = [0.0; 3];
    let (t_lo, t_hi) = (w.time.start(), w.time.end());
    let wn = slab_norm(w, &spec, t_lo, t_hi, &z, delta)?;
    let gn = slab_norm(&gradient_magnitude(w)?, &spec, t_lo, t_hi, &z, delta)?;
    let rhs_value = (delta - tau).powf(-gamma) * (gn.powf(theta) * wn.powf(1.0 - theta) + wn);
    Ok(RadialReport {
        j_value,
        rhs_value,
        gamma,
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, SpaceGrid, TimeGrid};
    use core::f64::consts::PI;

    fn field(n: usize, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(
            TimeGrid::new(0.0, 0.25, 4).unwrap(),
            SpaceGrid::cube(2, -2.5, 5.0 / n as f64, n).unwrap(),
            Boundary::ZeroExtension,
            |_, x| f((x[0] * x[0] + x[1] * x[1]).sqrt()),
        )
        .unwrap()
    }

    #[test]
    fn zero_field() {
        let r =
            radial_embedding_infimum(&field(64, |_| 0.0), 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 11)
                .unwrap();
        assert_eq!((r.j_value, r.rhs_value), (0.0, 0.0));
    }

    #[test]
    fn total_variation_concentrates_on_inner_shell() {
        // J = |I| min_j (area of shell j)/h; the inner shell gives pi (2 tau + h).
        let (tau, delta, knots) = (1.0, 2.0, 21);
        let h = (delta - tau) / (knots - 1) as f64;
        let r = radial_embedding_infimum(
            &field(640, |_| 1.0),
            1.0,
            1.0,
            1.0,
            1.0,
            0.0,
            tau,
            delta,
            knots,
        )
        .unwrap();
        let oracle = PI * (2.0 * tau + h);
        assert!(
            (r.j_value - oracle).abs() < 0.02 * oracle,
            "{} vs {oracle}",
            r.j_value
        );
    }

    #[test]
    fn quadratic_matches_annulus_capacity() {
        // inf int |l'|^2 2 pi s ds = 2 pi / ln(delta/tau).
        let r =
            radial_embedding_infimum(&field(400, |_| 1.0), 2.0, 1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 41)
                .unwrap();
        let oracle = 2.0 * PI / 2.0f64.ln();
        assert!(
            (r.j_value - oracle).abs() < 0.02 * oracle,
            "{} vs {oracle}",
            r.j_value
        );
    }

    #[test]
    fn one_homogeneous() {
        let w = field(160, |s| (2.2 - s).max(0.0).powi(2));
        let a = radial_embedding_infimum(&w, 1.5, 2.0, 2.0, 2.0, 0.0, 1.0, 1.8, 17).unwrap();
        let b =
            radial_embedding_infimum(&w.scale(3.0), 1.5, 2.0, 2.0, 2.0, 0.0, 1.0, 1.8, 17).unwrap();
        assert!((b.j_value - 3.0 * a.j_value).abs() <= 1e-10 * a.j_value);
        assert!((b.rhs_value - 3.0 * a.rhs_value).abs() <= 1e-12 * a.rhs_value);
    }

    #[test]
    fn rejects_bad_relation() {
        let w = field(32, |_| 1.0);
        assert!(radial_embedding_infimum(&w, 1.0, 2.0, 1.0, 1.0, 0.0, 1.0, 2.0, 11).is_err());
    }
}
