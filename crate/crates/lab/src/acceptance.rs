//! Acceptance suite: twelve numbered pass/fail criteria. Each uses fixed seeds
//! and pinned tolerances.

use std::f64::consts::PI;
use std::time::Instant;

use parabolic_core::cutoff::CutoffFamily;
use parabolic_core::degiorgi::{lk1_check, recursion_simulate, RecursionParams};
use parabolic_core::embeddings::evaluate_predicate;
use parabolic_core::grid::MAX_DIM;
use parabolic_core::norms::{minkowski_gap, mixed_norm};
use parabolic_core::pde::{
    default_test_bank, solve, symmetric_eigen, weak_residual, CoefficientField, Diffusion, Drift,
    Forcing, SolverConfig,
};
use parabolic_core::sde::{
    approximation_cauchy_report, build_coefficients, euler_maruyama, krylov_functional,
    modulus_report, FamilySpec, FamilyTag, Integrand, Pairing, PathRunner, SdeCoefficients,
    SerialRunner, SimulationConfig, Streamed,
};
use parabolic_core::variational::{
    brute_force_infimum, explicit_cutoff, functional_value, sa3_exponent, sa3_gap_sweep,
    VariationalProblem,
};
use parabolic_core::{Boundary, Cylinder, GridFunction, MixedNormSpec, SpaceGrid, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{BumpParams, ExperimentConfig, FamilyParams, PdeParams};
use crate::error::{LabError, Result};
use crate::experiments::{pde_solution, run_experiment};
use crate::runner::RayonRunner;

pub const CRITERIA: u32 = 12;

/// Criteria expected to fail with the current numerics; see the README.
pub const KNOWN_RED: &[u32] = &[11];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip)]
    pub budget_seconds: f64,
}

impl CriterionResult {
    /// `criterion  7 PASS  title: detail [1.2 s of 300 s]`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let over = if self.seconds > self.budget_seconds {
            ", over budget"
        } else {
            ""
        };
        format!(
            "criterion {:>2} {verdict}  {}: {} [{:.1} s of {} s{over}]",
            self.id, self.title, self.detail, self.seconds, self.budget_seconds
        )
    }
}

type Check = fn(&(dyn PathRunner + Sync)) -> Result<(bool, String)>;

const TABLE: [(u32, &str, f64, Check); CRITERIA as usize] = [
    (
        1,
        "Minkowski ordering of mixed norms",
        10.0,
        minkowski_ordering,
    ),
    (2, "drift index sets at p0 = inf", 1.0, index_sets),
    (3, "cutoff variational problem", 60.0, variational_oracle),
    (4, "superlinear recursion decay", 5.0, recursion_decay),
    (5, "level-set measure inequality", 5.0, level_set_inequality),
    (6, "solver convergence", 60.0, solver_convergence),
    (
        7,
        "boundedness ratio for the degenerate field",
        300.0,
        boundedness_ratio,
    ),
    (
        8,
        "occupation time of Brownian motion",
        120.0,
        krylov_brownian,
    ),
    (9, "modulus of continuity moments", 120.0, modulus_slopes),
    (
        10,
        "mollified coefficient identities",
        10.0,
        coefficient_identities,
    ),
    (
        11,
        "stability in the mollification index",
        300.0,
        approximation_stability,
    ),
    (12, "byte-identical reruns", 60.0, determinism),
];

/// Runs the listed criteria in order; all of them when `ids` is empty.
pub fn run_criteria(ids: &[u32], runner: &(dyn PathRunner + Sync)) -> Result<Vec<CriterionResult>> {
    if let Some(bad) = ids.iter().find(|i| !(1..=CRITERIA).contains(i)) {
        return Err(LabError::config(format!(
            "criteria are numbered 1..={CRITERIA} (got {bad})"
        )));
    }
    let mut out = Vec::new();
    for &(id, title, budget, check) in &TABLE {
        if !ids.is_empty() && !ids.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match check(runner) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        out.push(CriterionResult {
            id,
            title,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
            budget_seconds: budget,
        });
    }
    Ok(out)
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_grid(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Result<GridFunction> {
    let n = rng.random_range(2..=6);
    let nt = rng.random_range(2..=8);
    let space = SpaceGrid::cube(d, -1.0, 2.0 / n as f64, n)?;
    let time = TimeGrid::new(0.0, rng.random_range(0.05..0.5), nt)?;
    let values = (0..nt * space.len())
        .map(|_| rng.random_range(lo..hi))
        .collect();
    Ok(GridFunction::new(
        time,
        space,
        Boundary::ZeroExtension,
        values,
    )?)
}

fn minkowski_ordering(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let mut rng = rng(1);
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for _ in 0..200 {
        let d = rng.random_range(1..=3);
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let f = random_grid(&mut rng, d, -scale, scale)?;
        for _ in 0..20 {
            let p = rng.random_range(1.0..6.0);
            let q = if rng.random_bool(0.1) {
                f64::INFINITY
            } else {
                p + rng.random_range(0.0..6.0)
            };
            let gap = minkowski_gap(&f, p, q)?;
            let norm = mixed_norm(&f, &MixedNormSpec::space_time(p, q))?;
            worst = worst.min(gap / norm.max(f64::MIN_POSITIVE));
            cases += 1;
        }
    }
    Ok((
        worst >= -1e-9,
        format!("{cases} cases, smallest relative gap {worst:.3e}"),
    ))
}

/// `1/p` as an exact fraction for the dyadic exponents used below.
fn recip(p: f64) -> (i128, i128) {
    if p == f64::INFINITY {
        (0, 1)
    } else {
        let den = 4;
        let num = (p * den as f64) as i128;
        assert_eq!(num as f64 / den as f64, p);
        (den, num)
    }
}

/// `c1 x + c2 y < k` for fractions `x`, `y`.
fn less(c1: i128, x: (i128, i128), c2: i128, y: (i128, i128), k: i128) -> bool {
    c1 * x.0 * y.1 + c2 * y.0 * x.1 < k * x.1 * y.1
}

fn index_sets(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let mut rng = rng(2);
    let mut mismatches = 0;
    let mut admissible = 0;
    let exponent = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.1) {
            f64::INFINITY
        } else {
            rng.random_range(4..=96) as f64 / 4.0
        }
    };
    for _ in 0..1000 {
        let d = rng.random_range(1..=3) as i128;
        let (p, q) = (exponent(&mut rng), exponent(&mut rng));
        let drift = less(d, recip(p), 2, recip(q), 1);
        let div = less(d - 1, recip(p), 3, recip(q), 2);
        let got_drift = evaluate_predicate("drift", d as usize, f64::INFINITY, p, q)?;
        let got_div = evaluate_predicate("divergence-drift", d as usize, f64::INFINITY, p, q)?;
        mismatches += (drift != got_drift) as usize + (div != got_div) as usize;
        admissible += drift as usize + div as usize;
    }
    Ok((
        mismatches == 0,
        format!("1000 points, {mismatches} mismatches, {admissible} admissible verdicts"),
    ))
}

fn variational_oracle(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let mut rng = rng(3);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let cells = rng.random_range(2..=12);
        let tau = rng.random_range(0.0..1.0);
        let gap = rng.random_range(0.1..1.0);
        let mut dens = Vec::new();
        for _ in 0..n {
            dens.push((0..cells).map(|_| rng.random_range(0.0..3.0)).collect());
        }
        let prob = VariationalProblem::new(
            tau,
            tau + gap,
            (0..n).map(|_| rng.random_range(1.0..3.0)).collect(),
            (0..n).map(|_| rng.random_range(1.0..3.0)).collect(),
            (0..n).map(|_| rng.random_range(0.25..2.0)).collect(),
            dens,
        )?;
        let explicit = functional_value(&prob, &explicit_cutoff(&prob)?)?;
        let (brute, _) = brute_force_infimum(&prob, cells + 1)?;
        if brute > explicit * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    // Cauchy-Schwarz gives 1 as the lower bound and the linear cutoff attains it.
    let unit = VariationalProblem::constant(0.0, 1.0, 2.0, 1.0, 1.0, 1.0, 40)?;
    let (value, _) = brute_force_infimum(&unit, 41)?;
    // With unequal betas the summed data mass is not a single power of the gap,
    // so the sweeps keep one beta per instance.
    let sweeps: [(&[f64], &[f64], &[f64]); 4] = [
        (&[2.0], &[1.0], &[1.0]),
        (&[1.5], &[2.0], &[0.5]),
        (&[3.0], &[1.5], &[2.0]),
        (&[2.0, 3.0], &[1.0, 2.0], &[1.0, 1.0]),
    ];
    let gaps = [1.0, 0.5, 0.25, 0.125];
    let mut slope_err = 0.0f64;
    for (alpha, p, beta) in sweeps {
        let sweep = sa3_gap_sweep(alpha, p, beta, &gaps, 16)?;
        slope_err = slope_err.max((sweep.normalized_slope + sa3_exponent(alpha, p, beta)).abs());
    }
    let passed = violations == 0 && (value - 1.0).abs() <= 5e-3 && slope_err <= 0.1;
    Ok((passed, format!("{violations} of 100 above the explicit cutoff, unit value {value:.6}, slope error {slope_err:.3e}")))
}

fn recursion_decay(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let mut rng = rng(4);
    let (mut below, mut violations) = (0, 0);
    for _ in 0..1000 {
        let m = rng.random_range(1..=3);
        let mut params = RecursionParams {
            c0: rng.random_range(1.01..20.0),
            lambda: rng.random_range(1.01..8.0),
            deltas: (0..m).map(|_| rng.random_range(0.1..2.0)).collect(),
            a1: 0.0,
            n_max: 50,
        };
        params.a1 = (params.ln_threshold() + rng.random_range(-4.0..0.5) * 10f64.ln()).exp();
        let report = recursion_simulate(&params)?;
        if !report.below_threshold {
            continue;
        }
        below += 1;
        let (ln_a1, ln_lambda, delta) = (params.a1.ln(), params.lambda.ln(), params.delta());
        let bad = report.first_bound_violation.is_some()
            || report.diverged
            || report.ln_values.len() != 50
            || report
                .ln_values
                .iter()
                .enumerate()
                .any(|(i, &l)| l > ln_a1 - i as f64 / delta * ln_lambda + 1e-12);
        violations += bad as usize;
    }
    Ok((
        violations == 0 && below >= 100,
        format!("{below} instances below threshold, {violations} violations"),
    ))
}

fn level_set_inequality(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let mut rng = rng(5);
    let mut violations = 0;
    for _ in 0..100 {
        let d = rng.random_range(1..=2);
        let u = random_grid(&mut rng, d, 0.0, 2.0)?;
        let z: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let cyl = Cylinder::new(
            u.time.end() * rng.random_range(0.2..0.8),
            &z,
            rng.random_range(0.3..1.0),
        );
        let (r, s) = (rng.random_range(1.0..4.0), rng.random_range(1.0..4.0));
        for _ in 0..10 {
            let k0 = rng.random_range(0.01..1.5);
            let k1 = rng.random_range(k0 + 0.01..2.0);
            violations += !lk1_check(&u, k0, k1, &cyl, r, s)?.holds as usize;
        }
    }
    Ok((
        violations == 0,
        format!("1000 checks, {violations} violations"),
    ))
}

/// Max error at the final sample against `exp(-pi² t) sin(pi x)`.
fn heat_error(n: usize) -> Result<f64> {
    let h = 1.0 / n as f64;
    let space = SpaceGrid::cube(1, 0.0, h, n)?;
    let u0 = GridFunction::from_fn(
        TimeGrid::new(0.0, 1.0, 2)?,
        space,
        Boundary::ZeroExtension,
        |_, x| (PI * x[0]).sin(),
    )?;
    let field = CoefficientField::diffusion_only(1, Diffusion::Identity)?;
    let dt = h * h;
    let u = solve(&field, &u0, &SolverConfig::new(dt, (0.1 / dt).round() * dt))?;
    let k = u.time.nt - 1;
    let t = k as f64 * dt;
    Ok((0..n)
        .map(|i| (u.get(k, i) - (-PI * PI * t).exp() * (PI * space.coord(0, i)).sin()).abs())
        .fold(0.0, f64::max))
}

fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn solver_convergence(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let heat = orders(&[heat_error(16)?, heat_error(32)?, heat_error(64)?]);

    let space = SpaceGrid::cube(2, 0.0, 0.25, 4)?;
    let u0 = GridFunction::zeros(TimeGrid::new(0.0, 1.0, 2)?, space, Boundary::Periodic);
    let field = CoefficientField::new(
        2,
        Diffusion::Identity,
        Drift::Zero,
        Drift::Zero,
        Forcing::Constant(1.0),
    )?;
    let u = solve(&field, &u0, &SolverConfig::new(0.125, 1.0))?;
    let constant_err = (0..u.time.nt)
        .flat_map(|k| u.slice(k).iter().map(move |v| (v - k as f64 * 0.125).abs()))
        .fold(0.0, f64::max);

    let mut residuals = Vec::new();
    for n in [16, 32, 64, 128] {
        let h = 1.0 / n as f64;
        let space = SpaceGrid::cube(1, 0.0, h, n)?;
        let u0 = GridFunction::from_fn(
            TimeGrid::new(0.0, 1.0, 2)?,
            space,
            Boundary::ZeroExtension,
            |_, x| (PI * x[0]).sin(),
        )?;
        let field = CoefficientField::diffusion_only(1, Diffusion::Identity)?;
        let u = solve(&field, &u0, &SolverConfig::new(h / 4.0, 0.25))?;
        residuals.push(weak_residual(&u, &field, &default_test_bank(&u))?);
    }
    let weak = orders(&residuals);
    let passed =
        heat.iter().all(|&o| o >= 1.7) && constant_err <= 1e-10 && weak.iter().all(|&o| o >= 1.0);
    Ok((passed, format!("heat orders {heat:.3?}, constant forcing error {constant_err:.1e}, residual orders {weak:.3?}")))
}

fn boundedness_params(half_width: f64, h: f64, dt: f64, amplitude: f64) -> PdeParams {
    let mut field = FamilyParams::named("swapped-power", 2);
    field.alpha = Some(0.2);
    PdeParams {
        field,
        half_width,
        h,
        dt,
        t_final: 2.0,
        forcing: BumpParams {
            amplitude,
            radius: 1.0,
            until: 1.0,
        },
        p0: 4.0,
    }
}

fn boundedness_ratio(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let ratio = |p: PdeParams| -> Result<f64> {
        pde_solution(&p)?
            .0
            .boundedness
            .ratio
            .ok_or_else(|| LabError::config("forcing vanished"))
    };
    let base = ratio(boundedness_params(4.0, 0.125, 1.0 / 32.0, 1.0))?;
    let tripled = ratio(boundedness_params(4.0, 0.125, 1.0 / 32.0, 3.0))?;
    let refined = ratio(boundedness_params(4.0, 0.0625, 1.0 / 64.0, 1.0))?;
    let wide = ratio(boundedness_params(8.0, 0.125, 1.0 / 32.0, 1.0))?;
    let rel = |x: f64| (x - base).abs() / base;
    let passed = rel(tripled) <= 1e-10 && rel(refined) <= 0.2 && rel(wide) <= 0.05;
    Ok((
        passed,
        format!(
            "ratio {base:.6}; relative change {:.1e} for 3f, {:.2e} under refinement, {:.2e} on the doubled box",
            rel(tripled),
            rel(refined),
            rel(wide)
        ),
    ))
}

/// `P(|Z| <= a)` for a standard Gaussian vector in three dimensions.
fn chi3_cdf(a: f64) -> f64 {
    libm::erf(a / 2f64.sqrt()) - (2.0 / PI).sqrt() * a * (-0.5 * a * a).exp()
}

/// Left-point occupation time of the unit ball by `sqrt(2) W` on `[0, t1)`.
fn unit_ball_occupation(t1: f64, dt: f64) -> f64 {
    let m = (t1 / dt).round() as usize;
    (0..m)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                chi3_cdf(1.0 / (2.0 * k as f64 * dt).sqrt())
            }
        })
        .sum::<f64>()
        * dt
}

fn brownian(
    d: usize,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<(SdeCoefficients, SimulationConfig)> {
    let c = build_coefficients(&FamilySpec::brownian(d))?;
    Ok((
        c,
        SimulationConfig {
            x0: [0.0; MAX_DIM],
            s: 0.0,
            t_final: 1.0,
            dt,
            n_paths,
            seed,
        },
    ))
}

fn krylov_brownian(runner: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let (c, cfg) = brownian(3, 100_000, 1e-3, 8)?;
    let src = Streamed {
        coeffs: &c,
        cfg,
        runner,
    };
    let f = Integrand::CylinderIndicator {
        t_lo: 0.0,
        t_hi: 1.0,
        centre: [0.0; MAX_DIM],
        radius: 1.0,
    };
    let t1s = [0.125, 0.25, 0.5, 1.0];
    let r = krylov_functional(&src, &f, 0.0, &t1s, None)?;
    let z: Vec<f64> = t1s
        .iter()
        .zip(&r.estimates)
        .map(|(t1, e)| (e.mean - unit_ball_occupation(*t1, cfg.dt)) / e.stderr)
        .collect();
    let theta = r.theta_fit.unwrap_or(f64::NAN);
    let passed = z.iter().all(|v| v.abs() <= 3.0) && theta > 0.0;
    Ok((
        passed,
        format!("standardized errors {z:.2?}, theta_fit {theta:.4}"),
    ))
}

fn modulus_slopes(runner: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let (c, cfg) = brownian(1, 5_000, 1e-3, 5)?;
    let steps: Vec<usize> = (1..=32).collect();
    let bm = modulus_report(
        &Streamed {
            coeffs: &c,
            cfg,
            runner,
        },
        &steps,
    )?
    .slope;
    let still = SdeCoefficients::custom(
        2,
        [[0.0; MAX_DIM]; MAX_DIM],
        Drift::Constant([3.0, 4.0, 0.0]),
    )?;
    let cfg = SimulationConfig {
        dt: 1.0 / 256.0,
        n_paths: 2,
        ..cfg
    };
    let det = modulus_report(&euler_maruyama(&still, &cfg)?, &[1, 2, 4, 8, 16, 32])?.slope;
    let passed = (bm - 0.25).abs() <= 0.05 && (det - 0.5).abs() <= 1e-12;
    Ok((
        passed,
        format!("Brownian slope {bm:.4}, deterministic slope {det:.15}"),
    ))
}

fn coefficient_identities(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let mut rng = rng(10);
    let (alpha, big_r) = (0.3, 4.0);
    let mut eigen_mismatch = 0;
    for _ in 0..1000 {
        let n = if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(1..=64))
        };
        let family = CutoffFamily::new(big_r, n)?;
        let field = CoefficientField::diffusion_only(3, Diffusion::RadialPower { alpha, family })?;
        let x = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        ];
        let (eig, _) = symmetric_eigen(&field.diffusion(0.0, &x), 3);
        let want = family.power(-alpha, x.iter().map(|v| v * v).sum());
        eigen_mismatch += !(eig[0] == want && eig[2] == want) as usize;
    }

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(1..=64))
        };
        let spec = FamilySpec {
            tag: FamilyTag::RadialPower,
            d: 3,
            big_r,
            alpha,
            beta: 0.0,
            lambda: 0.0,
            n,
        };
        let c = build_coefficients(&spec)?;
        // Uniform direction, radius with |x|² in [0.01, 2R].
        let r = rng.random_range(0.01..2.0 * big_r).sqrt();
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
        let x = [r * v[0] / norm, r * v[1] / norm, r * v[2] / norm];
        let rx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let bound = 2.0 * alpha * rx.powf(-2.0 * alpha - 1.0);
        let div = c.divergence_fd(&x, 1e-4 * rx);
        worst = worst.max(div.iter().map(|v| v.abs()).fold(0.0, f64::max) / bound);
    }

    let mut swapped_max = 0.0f64;
    for _ in 0..1000 {
        let n = if rng.random_bool(0.2) {
            None
        } else {
            Some(rng.random_range(1..=64))
        };
        let spec = FamilySpec {
            tag: FamilyTag::SwappedPower,
            d: 2,
            big_r,
            alpha: 0.2,
            beta: 0.0,
            lambda: 0.0,
            n,
        };
        let c = build_coefficients(&spec)?;
        let x = [
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            0.0,
        ];
        swapped_max = swapped_max.max(
            c.divergence_fd(&x, 1e-4)
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max),
        );
    }
    let passed = eigen_mismatch == 0 && worst <= 1.0 + 1e-3 && swapped_max == 0.0;
    Ok((
        passed,
        format!("{eigen_mismatch} eigenvalue mismatches, largest derivative / bound {worst:.6}, swapped divergence {swapped_max:e}"),
    ))
}

fn approximation_stability(runner: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let spec = FamilySpec {
        tag: FamilyTag::RadialPower,
        d: 3,
        big_r: 4.0,
        alpha: 0.3,
        beta: 0.0,
        lambda: 0.0,
        n: None,
    };
    let cfg = SimulationConfig {
        x0: [0.0; MAX_DIM],
        s: 0.0,
        t_final: 1.0,
        dt: 1e-3,
        n_paths: 20_000,
        seed: 11,
    };
    let r = approximation_cauchy_report(&spec, &[1, 2, 4, 8, 16], &cfg, Pairing::Shared, runner)?;
    let distances: Vec<f64> = r.rows.iter().map(|row| row.distance).collect();
    let sups: Vec<f64> = r.rows.iter().map(|row| row.sup_moment.mean).collect();
    Ok((
        r.trend_non_increasing && r.sup_stable,
        format!(
            "distances {distances:.4?} (rank correlation {:.2}); sup moments {sups:.4?}, growth {:.4} against 2 stderr = {:.4}",
            r.rank_correlation,
            r.sup_growth,
            2.0 * r.sup_stderr
        ),
    ))
}

/// Seeded experiments rerun by the determinism criterion.
pub const DETERMINISM_CONFIGS: &[&str] = &[
    "seed = 42\n[experiment]\nkind = \"sde\"\ndt = 0.01\nn_paths = 400\nsup_moment = true\nsecond_moment = true\nexport_paths = true\nmodulus_steps = [1, 2, 4, 8, 16, 32]\n[experiment.krylov]\nradius = 1.0\nt1s = [0.25, 0.5, 1.0]\n[experiment.family]\nname = \"brownian\"\nd = 3\n",
    "seed = 7\n[experiment]\nkind = \"sde\"\ndt = 0.01\nn_paths = 300\n[experiment.perturbation]\neps = [0.1, 0.01, 0.001, 0.0001, 0.0]\n[experiment.cauchy]\nn_list = [1, 2, 4]\n[experiment.family]\nname = \"singular-radial\"\nd = 3\nalpha = 0.3\nbeta = 0.2\nlambda = 1.0\n",
    "[experiment]\nkind = \"norms\"\nfunction = \"gaussian-bump\"\nd = 2\ncells = 8\nsteps = 4\np = 3.0\nq = 2.0\norder = \"space-outer\"\nwindow_radius = 0.5\n",
    "[experiment]\nkind = \"pde\"\nhalf_width = 2.0\nh = 0.25\ndt = 0.0625\nt_final = 1.0\n[experiment.field]\nname = \"rotation-drift\"\nd = 2\n",
    "[experiment]\nkind = \"variational\"\ntau = 0.0\ndelta = 0.5\nalphas = [2.0]\nps = [1.0]\nbetas = [1.0]\ndensities = [[1.0, 2.0, 0.5, 1.0]]\nknots = 9\ngap_sweep = [1.0, 0.5, 0.25]\n",
];

fn determinism(_: &(dyn PathRunner + Sync)) -> Result<(bool, String)> {
    let parallel = RayonRunner::new(Some(2))?;
    let mut differing = Vec::new();
    let mut files = 0;
    for text in DETERMINISM_CONFIGS {
        let cfg = ExperimentConfig::parse(text)?;
        let a = run_experiment(&cfg, &SerialRunner)?;
        let b = run_experiment(&cfg, &SerialRunner)?;
        let c = run_experiment(&cfg, &parallel)?;
        for (x, (y, z)) in a.files.iter().zip(b.files.iter().zip(&c.files)) {
            files += 1;
            if x != y || x != z {
                differing.push(format!("{}/{}", cfg.experiment.kind().name(), x.name));
            }
        }
        if a.files.len() != b.files.len() || a.files.len() != c.files.len() {
            differing.push(format!("{} file lists", cfg.experiment.kind().name()));
        }
    }
    Ok((
        differing.is_empty(),
        format!("{files} files compared across serial, repeated and parallel runs; differing: {differing:?}"),
    ))
}
