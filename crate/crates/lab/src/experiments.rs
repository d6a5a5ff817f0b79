//! One driver per experiment kind. Every driver checks its parameters against the
//! core preconditions before the first expensive call.

use std::time::Instant;

use parabolic_core::degiorgi::{
    recursion_simulate, schedule, schedule_violation, LevelSchedule, LevelStep, RecursionParams,
    RecursionReport,
};
use parabolic_core::embeddings::{evaluate_predicate, ExponentConfig, SweepRow};
use parabolic_core::grid::MAX_DIM;
use parabolic_core::norms::{localized_norm, mixed_norm, Lattice, LocalizedNorm};
use parabolic_core::pde::{
    default_test_bank, max_principle_report, solve_with_stats, weak_residual, Forcing,
    MaxPrincipleReport, SolveStats, SolverConfig,
};
use parabolic_core::sde::{
    approximation_cauchy_report, euler_maruyama, krylov_functional, modulus_report, sup_moment,
    terminal_second_moment, uniqueness_perturbation_report, CauchyReport, Estimate, Integrand,
    KrylovReport, ModulusReport, PathRunner, PathSource, PerturbationReport, SimulationConfig,
    Streamed,
};
use parabolic_core::variational::{
    brute_force_infimum, explicit_cutoff, functional_value, sa3_gap_sweep, CutoffProfile, GapSweep,
    VariationalProblem,
};
use parabolic_core::{Boundary, GridFunction, MixedNormSpec, SpaceGrid, TimeGrid};
use serde::Serialize;
use serde_json::Value;

use crate::acceptance;
use crate::config::{
    DegiorgiParams, EmbedParams, Experiment, ExperimentConfig, NormsParams, PdeParams, SdeParams,
    VariationalParams,
};
use crate::error::{LabError, Result};
use crate::fixtures::{family_spec, pde_field, sde_coefficients, test_function};
use crate::io::{ensemble_files, grid_csv, grid_files, table_csv};
use crate::report::{Artifact, RunOutput};

/// Result of one driver before it is wrapped into a report.
struct Outcome {
    result: Value,
    files: Vec<Artifact>,
    failure: Option<String>,
    timings: Value,
}

impl Outcome {
    fn new<T: Serialize>(result: &T, files: Vec<Artifact>) -> Self {
        Outcome {
            result: serde_json::to_value(result).expect("result serializes"),
            files,
            failure: None,
            timings: Value::Null,
        }
    }
}

/// Runs `cfg` without touching the file system.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    runner: &(dyn PathRunner + Sync),
) -> Result<RunOutput> {
    let start = Instant::now();
    let out = match &cfg.experiment {
        Experiment::Norms(p) => norms(p)?,
        Experiment::Embed(p) => embed(p)?,
        Experiment::Variational(p) => variational(p)?,
        Experiment::Pde(p) => pde(p)?,
        Experiment::Degiorgi(p) => degiorgi(p)?,
        Experiment::Sde(p) => sde(p, cfg.seed, runner)?,
        Experiment::Acceptance(p) => {
            let results = acceptance::run_criteria(&p.criteria, runner)?;
            let failed: Vec<String> = results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.id.to_string())
                .collect();
            let timings = results
                .iter()
                .map(|r| (r.id.to_string(), Value::from(r.seconds)))
                .collect();
            Outcome {
                result: serde_json::to_value(&results).expect("results serialize"),
                files: vec![],
                failure: (!failed.is_empty())
                    .then(|| format!("criteria {} failed", failed.join(", "))),
                timings: Value::Object(timings),
            }
        }
    };
    let mut run = RunOutput::new(cfg, &out.result, out.files, out.failure);
    run.timings = out.timings;
    run.elapsed = start.elapsed();
    Ok(run)
}

#[derive(Debug, Serialize)]
struct NormsResult {
    spec: MixedNormSpec,
    value: f64,
    localized: Option<LocalizedNorm>,
}

fn norms(p: &NormsParams) -> Result<Outcome> {
    let spec = MixedNormSpec {
        p: p.p,
        q: p.q,
        order: p.order,
    };
    spec.validate()?;
    if let Some(r) = p.window_radius {
        if !(r > 0.0 && r.is_finite()) {
            return Err(LabError::config(format!(
                "window_radius must be positive (got {r})"
            )));
        }
    }
    let f = test_function(&p.function, p.d, p.cells, p.steps)?;
    let value = mixed_norm(&f, &spec)?;
    let localized = p
        .window_radius
        .map(|r| localized_norm(&f, &spec, r, &Lattice::default()))
        .transpose()?;
    Ok(Outcome::new(
        &NormsResult {
            spec,
            value,
            localized,
        },
        vec![],
    ))
}

fn embed(p: &EmbedParams) -> Result<Outcome> {
    if p.p_values.is_empty() || p.q_values.is_empty() {
        return Err(LabError::config("p_values and q_values must be nonempty"));
    }
    evaluate_predicate(&p.predicate, p.d, p.p0, p.p_values[0], p.q_values[0])?;
    let mut rows = Vec::new();
    for &pv in &p.p_values {
        for &qv in &p.q_values {
            let value = evaluate_predicate(&p.predicate, p.d, p.p0, pv, qv)?;
            rows.push(SweepRow {
                d: p.d,
                p0: p.p0,
                p: pv,
                q: qv,
                predicate: p.predicate.clone(),
                value,
            });
        }
    }
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.p, r.q, if r.value { 1.0 } else { 0.0 }])
        .collect();
    let csv = table_csv(&["p", "q", "admissible"], &table)?;
    Ok(Outcome::new(&rows, vec![Artifact::new("sweep.csv", csv)]))
}

#[derive(Debug, Serialize)]
struct VariationalResult {
    explicit_value: f64,
    brute_force_value: f64,
    brute_force_profile: CutoffProfile,
    gap_sweep: Option<GapSweep>,
}

fn variational(p: &VariationalParams) -> Result<Outcome> {
    let prob = VariationalProblem::new(
        p.tau,
        p.delta,
        p.alphas.clone(),
        p.ps.clone(),
        p.betas.clone(),
        p.densities.clone(),
    )?;
    if !p.gap_sweep.is_empty()
        && (p.gap_sweep.len() < 2 || p.gap_sweep.iter().any(|g| !(*g > 0.0 && *g <= 1.0)))
    {
        return Err(LabError::config(
            "gap_sweep needs at least two gaps in (0, 1]",
        ));
    }
    let explicit = explicit_cutoff(&prob)?;
    let explicit_value = functional_value(&prob, &explicit)?;
    let (brute_force_value, profile) = brute_force_infimum(&prob, p.knots)?;
    let gap_sweep = if p.gap_sweep.is_empty() {
        None
    } else {
        Some(sa3_gap_sweep(
            &p.alphas,
            &p.ps,
            &p.betas,
            &p.gap_sweep,
            prob.cells(),
        )?)
    };
    let rows: Vec<Vec<f64>> = profile
        .table()
        .into_iter()
        .map(|(r, v)| vec![r, v])
        .collect();
    let csv = table_csv(&["r", "cutoff"], &rows)?;
    let result = VariationalResult {
        explicit_value,
        brute_force_value,
        brute_force_profile: profile,
        gap_sweep,
    };
    Ok(Outcome::new(
        &result,
        vec![Artifact::new("profile.csv", csv)],
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeSummary {
    pub cells_per_axis: usize,
    pub stats: SolveStats,
    pub boundedness: MaxPrincipleReport,
    /// Largest weak-form residual over the default test bank.
    pub weak_residual: f64,
}

/// Solves the configured problem from zero data; also used by the acceptance suite.
pub fn pde_solution(p: &PdeParams) -> Result<(PdeSummary, GridFunction)> {
    let d = p.field.d;
    let cells = 2.0 * p.half_width / p.h;
    if !(p.half_width > 0.0
        && p.h > 0.0
        && (cells - cells.round()).abs() <= 1e-9 * cells
        && cells.round() >= 2.0)
    {
        return Err(LabError::config(format!(
            "2 half_width / h must be a whole number >= 2 (got {cells})"
        )));
    }
    let cells = cells.round() as usize;
    let f = &p.forcing;
    if !(f.radius > 0.0 && f.amplitude.is_finite() && f.until > 0.0) {
        return Err(LabError::config(
            "forcing needs radius > 0, a finite amplitude and until > 0",
        ));
    }
    let forcing = Forcing::Bump {
        amplitude: f.amplitude,
        centre: [0.0; MAX_DIM],
        radius: f.radius,
        t_lo: 0.0,
        t_hi: f.until,
    };
    let field = pde_field(&p.field, forcing)?;
    let space = SpaceGrid::cube(d, -p.half_width, p.h, cells)?;
    let solver = SolverConfig::new(p.dt, p.t_final);
    solver.validate()?;
    let mut exps = ExponentConfig::uniform(d);
    exps.p0 = p.p0;
    exps.validate()?;
    let u0 = GridFunction::zeros(TimeGrid::new(0.0, 1.0, 2)?, space, Boundary::ZeroExtension);
    let (u, stats) = solve_with_stats(&field, &u0, &solver)?;
    let boundedness = max_principle_report(&u, &field, &exps, p.t_final, &Lattice::default())?;
    let weak_residual = weak_residual(&u, &field, &default_test_bank(&u))?;
    Ok((
        PdeSummary {
            cells_per_axis: cells,
            stats,
            boundedness,
            weak_residual,
        },
        u,
    ))
}

fn pde(p: &PdeParams) -> Result<Outcome> {
    let (summary, u) = pde_solution(p)?;
    let mut files: Vec<Artifact> = grid_files(&u, "solution")
        .into_iter()
        .map(|(n, b)| Artifact::new(n, b))
        .collect();
    files.push(Artifact::new(
        "final_profile.csv",
        grid_csv(&u, &[u.time.nt - 1])?,
    ));
    Ok(Outcome::new(&summary, files))
}

#[derive(Debug, Serialize)]
struct DegiorgiResult {
    recursion: Option<RecursionReport>,
    schedule: Option<Vec<LevelStep>>,
    /// First step where the exact schedule identities fail.
    schedule_violation: Option<usize>,
}

fn degiorgi(p: &DegiorgiParams) -> Result<Outcome> {
    if p.recursion.is_none() && p.schedule.is_none() {
        return Err(LabError::config(
            "degiorgi needs a [experiment.recursion] or [experiment.schedule] table",
        ));
    }
    let rec = p.recursion.as_ref().map(|r| RecursionParams {
        c0: r.c0,
        lambda: r.lambda,
        deltas: r.deltas.clone(),
        a1: r.a1,
        n_max: r.n_max,
    });
    let sched = p.schedule.as_ref().map(|s| LevelSchedule {
        kappa: s.kappa,
        tau: s.tau,
        sigma: s.sigma,
        n_max: s.n_max,
    });
    if let Some(r) = &rec {
        r.validate()?;
    }
    if let Some(s) = &sched {
        s.validate()?;
    }
    let mut files = Vec::new();
    let recursion = rec.as_ref().map(recursion_simulate).transpose()?;
    if let Some(r) = &recursion {
        let rows: Vec<Vec<f64>> = r
            .ln_values
            .iter()
            .enumerate()
            .map(|(i, l)| vec![(i + 1) as f64, *l, l.exp()])
            .collect();
        files.push(Artifact::new(
            "recursion.csv",
            table_csv(&["n", "ln_a", "a"], &rows)?,
        ));
    }
    let (steps, violation) = match &sched {
        None => (None, None),
        Some(s) => {
            let steps = (1..=s.n_max)
                .map(|n| schedule(s, n))
                .collect::<parabolic_core::Result<Vec<_>>>()?;
            let rows: Vec<Vec<f64>> = steps
                .iter()
                .enumerate()
                .map(|(i, st)| vec![(i + 1) as f64, st.kappa, st.tau, st.tau_tilde])
                .collect();
            files.push(Artifact::new(
                "schedule.csv",
                table_csv(&["n", "kappa", "tau", "tau_tilde"], &rows)?,
            ));
            (Some(steps), schedule_violation(s)?)
        }
    };
    Ok(Outcome::new(
        &DegiorgiResult {
            recursion,
            schedule: steps,
            schedule_violation: violation,
        },
        files,
    ))
}

#[derive(Debug, Default, Serialize)]
struct SdeResult {
    family: String,
    frozen_paths: Option<usize>,
    floored_evaluations: Option<u64>,
    krylov: Option<KrylovReport>,
    modulus: Option<ModulusReport>,
    sup_moment: Option<Estimate>,
    second_moment: Option<Estimate>,
    cauchy: Option<CauchyReport>,
    perturbation: Option<PerturbationReport>,
}

/// Starting point padded to three coordinates; empty means the origin.
fn start_point(x0: &[f64], d: usize) -> Result<[f64; MAX_DIM]> {
    let mut x = [0.0; MAX_DIM];
    match x0.len() {
        0 => {}
        n if n == d => x[..d].copy_from_slice(x0),
        n => {
            return Err(LabError::config(format!(
                "x0 has {n} entries but the family is {d}-dimensional"
            )))
        }
    }
    Ok(x)
}

fn sde(p: &SdeParams, seed: u64, runner: &(dyn PathRunner + Sync)) -> Result<Outcome> {
    let coeffs = sde_coefficients(&p.family)?;
    let spec = family_spec(&p.family)?;
    let cfg = SimulationConfig {
        x0: start_point(&p.x0, p.family.d)?,
        s: p.s,
        t_final: p.t_final,
        dt: p.dt,
        n_paths: p.n_paths,
        seed,
    };
    cfg.validate()?;
    if let Some(k) = &p.krylov {
        if !(k.radius > 0.0) || k.t1s.is_empty() || k.t1s.iter().any(|&t| t <= p.s || t > p.t_final)
        {
            return Err(LabError::config(
                "krylov needs radius > 0 and end times in (s, t_final]",
            ));
        }
    }
    if let Some(c) = &p.cauchy {
        if spec.n.is_some() {
            return Err(LabError::config(
                "cauchy sets the mollification index itself; drop `n` from the family",
            ));
        }
        if c.n_list.len() < 3 {
            return Err(LabError::config("cauchy needs at least three indices"));
        }
    }
    if let Some(e) = &p.perturbation {
        if e.eps.is_empty() || e.eps.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(LabError::config("perturbation needs finite eps >= 0"));
        }
    }

    let mut files = Vec::new();
    let ensemble = if p.export_paths {
        Some(euler_maruyama(&coeffs, &cfg)?)
    } else {
        None
    };
    let streamed = Streamed {
        coeffs: &coeffs,
        cfg,
        runner,
    };
    let source: &dyn PathSource = match &ensemble {
        Some(e) => e,
        None => &streamed,
    };
    let mut out = SdeResult {
        family: p.family.name.clone(),
        ..Default::default()
    };
    if let Some(e) = &ensemble {
        out.frozen_paths = Some(e.frozen_count());
        out.floored_evaluations = Some(e.floored_count());
        files.extend(
            ensemble_files(e, Some(spec), "paths")
                .into_iter()
                .map(|(n, b)| Artifact::new(n, b)),
        );
    }
    if let Some(k) = &p.krylov {
        let t_hi = *k.t1s.last().expect("nonempty");
        let f = Integrand::CylinderIndicator {
            t_lo: p.s,
            t_hi,
            centre: [0.0; MAX_DIM],
            radius: k.radius,
        };
        let r = krylov_functional(source, &f, p.s, &k.t1s, None)?;
        let rows = r
            .t1s
            .iter()
            .zip(&r.estimates)
            .map(|(t, e)| vec![*t, e.mean, e.stderr])
            .collect::<Vec<_>>();
        files.push(Artifact::new(
            "krylov.csv",
            table_csv(&["t1", "mean", "stderr"], &rows)?,
        ));
        out.krylov = Some(r);
    }
    if !p.modulus_steps.is_empty() {
        let r = modulus_report(source, &p.modulus_steps)?;
        let rows = r
            .deltas
            .iter()
            .zip(&r.moments)
            .map(|(d, e)| vec![*d, e.mean, e.stderr])
            .collect::<Vec<_>>();
        files.push(Artifact::new(
            "modulus.csv",
            table_csv(&["delta", "mean", "stderr"], &rows)?,
        ));
        out.modulus = Some(r);
    }
    if p.sup_moment {
        out.sup_moment = Some(sup_moment(source)?);
    }
    if p.second_moment {
        out.second_moment = Some(terminal_second_moment(source)?);
    }
    if let Some(c) = &p.cauchy {
        let r = approximation_cauchy_report(&spec, &c.n_list, &cfg, c.pairing, runner)?;
        let rows = r
            .rows
            .iter()
            .map(|row| {
                vec![
                    row.n as f64,
                    row.distance,
                    row.sup_moment.mean,
                    row.sup_moment.stderr,
                ]
            })
            .collect::<Vec<_>>();
        files.push(Artifact::new(
            "cauchy.csv",
            table_csv(&["n", "distance", "sup_mean", "sup_stderr"], &rows)?,
        ));
        out.cauchy = Some(r);
    }
    if let Some(e) = &p.perturbation {
        let r = uniqueness_perturbation_report(&coeffs, &cfg, &e.eps, runner)?;
        let rows = r
            .rows
            .iter()
            .map(|row| vec![row.eps, row.divergence.mean, row.divergence.stderr])
            .collect::<Vec<_>>();
        files.push(Artifact::new(
            "perturbation.csv",
            table_csv(&["eps", "mean", "stderr"], &rows)?,
        ));
        out.perturbation = Some(r);
    }
    Ok(Outcome::new(&out, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use parabolic_core::sde::SerialRunner;

    fn run(text: &str) -> Result<RunOutput> {
        run_experiment(&ExperimentConfig::parse(text)?, &SerialRunner)
    }

    fn result(out: &RunOutput) -> Value {
        serde_json::from_slice::<Value>(&out.files[0].bytes).unwrap()["result"].clone()
    }

    #[test]
    fn unit_constant_norm_is_one() {
        let out = run("[experiment]\nkind = \"norms\"\nfunction = \"unit-constant\"\nd = 2\ncells = 4\nsteps = 4\np = 3.0\nq = 2.0\norder = \"time-outer\"\nwindow_radius = 0.5\n").unwrap();
        let r = result(&out);
        assert!((r["value"].as_f64().unwrap() - 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn invalid_parameters_fail_before_computing() {
        let bad = "[experiment]\nkind = \"sde\"\ndt = 0.5\nn_paths = 10\n[experiment.family]\nname = \"brownian\"\nd = 1\n";
        assert_eq!(run(bad).unwrap_err().exit_code(), 2);
        let range = "[experiment]\nkind = \"sde\"\ndt = 0.01\nn_paths = 10\n[experiment.family]\nname = \"radial-power\"\nd = 3\nalpha = 0.9\n";
        let err = run(range).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("alpha"), "{err}");
        let pde = "[experiment]\nkind = \"pde\"\nhalf_width = 1.0\nh = 0.3\ndt = 0.1\nt_final = 1.0\n[experiment.field]\nname = \"identity\"\nd = 1\n";
        assert_eq!(run(pde).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sde_report_lists_exported_files() {
        let text = "seed = 42\n[experiment]\nkind = \"sde\"\ndt = 0.01\nn_paths = 50\nsup_moment = true\nexport_paths = true\nmodulus_steps = [1, 2, 4, 8, 16, 32]\n[experiment.krylov]\nradius = 1.0\nt1s = [0.5, 1.0]\n[experiment.family]\nname = \"brownian\"\nd = 2\n";
        let out = run(text).unwrap();
        let names: Vec<&str> = out.files.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "report.json",
                "paths.json",
                "paths.bin",
                "krylov.csv",
                "modulus.csv"
            ]
        );
        assert_eq!(result(&out)["frozen_paths"], 0);
    }
}
