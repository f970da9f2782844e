use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::config::ExperimentConfig;
use super::io::{write_float_csv, ArtifactWriter, Snapshot};
use crate::dynamics::{integrate, IntegrateOptions, NoiseSampling, SimConfig};
use crate::error::{Error, Result};
use crate::functionals::{evaluate_functionals, FunctionalSample};
use crate::local_time::{
    local_time_field, occupation_residual, BorelSet, Convention, LevelGrid, ScalarSemimartingalePath,
    StepFunction,
};
use crate::spectral::{NoiseSpec, SpectralBasis, StateVector};
use crate::stats::{
    balance_and_moments, estimate_density, identity_residual, interquartile_set, nu_sweep,
    projection_density, sample_stationary, small_ball_curve, EmpiricalEnsemble, HistogramDensity, SamplingPlan,
    SweepPlan, SweepRow, CONFIDENCE_SE,
};

/// What an experiment reports back to the manifest.
#[derive(Debug, Default)]
pub(super) struct Outcome {
    pub warnings: Vec<String>,
    pub timings: Vec<(String, f64)>,
    pub passed: Option<bool>,
}

fn mode_header(k: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for j in 1..=k {
        h.push(format!("re_u{j}"));
        h.push(format!("im_u{j}"));
    }
    h
}

fn functional_header() -> Vec<String> {
    std::iter::once("t")
        .chain(FunctionalSample::COLUMNS)
        .map(String::from)
        .collect()
}

fn noise_json(noise: &NoiseSpec) -> serde_json::Value {
    json!({ "b": noise.b, "b0": noise.b0, "b1": noise.b1, "m": noise.m_const })
}

fn initial_state(cfg: &ExperimentConfig) -> Result<(StateVector, u64)> {
    match &cfg.initial_snapshot {
        None => Ok((StateVector::zeros(cfg.modes), 0)),
        Some(p) => {
            let snap = Snapshot::read(p)?;
            if snap.state.len() != cfg.modes {
                return Err(Error::config(
                    "initial_snapshot",
                    format!("snapshot has {} modes, config has {}", snap.state.len(), cfg.modes),
                ));
            }
            Ok((snap.state, snap.step))
        }
    }
}

pub(super) fn simulate(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<Outcome> {
    let sim = cfg.sim_config()?;
    let (initial, start) = initial_state(cfg)?;
    let options = IntegrateOptions {
        record_stride: Some(cfg.stride),
        ..IntegrateOptions::default()
    }
    .starting_at(start);
    let traj = integrate(&initial, &sim, cfg.steps, options, |_, _, _| {})?;

    let k = cfg.dump_modes;
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, u)| {
            let mut r = vec![*t];
            for c in &u.coeffs()[..k] {
                r.push(c.re);
                r.push(c.im);
            }
            r
        })
        .collect();
    let p = out.path("trajectory.csv", "trajectory");
    write_float_csv(&p, &mode_header(k), rows.iter().map(Vec::as_slice))?;

    let mut frows = Vec::with_capacity(traj.states.len());
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let f = evaluate_functionals(u, &sim.basis, &sim.noise, sim.lambda)?;
        let mut r = vec![*t];
        r.extend(f.values());
        frows.push(r);
    }
    let p = out.path("functionals.csv", "functional time series");
    write_float_csv(&p, &functional_header(), frows.iter().map(Vec::as_slice))?;

    let final_state = traj.final_state().expect("initial state is always recorded").clone();
    let final_step = start + cfg.steps as u64;
    let snap = Snapshot {
        step: final_step,
        time: final_step as f64 * sim.dt,
        state: final_state.clone(),
    };
    snap.write(&out.path("final.snap", "restart snapshot"))?;

    let f = evaluate_functionals(&final_state, &sim.basis, &sim.noise, sim.lambda)?;
    out.json(
        "summary.json",
        "summary",
        &json!({
            "steps": cfg.steps,
            "start_step": start,
            "dt": sim.dt,
            "final_time": snap.time,
            "final": f,
            "max_abs": final_state.max_abs(),
            "noise": noise_json(&sim.noise),
        }),
    )?;
    Ok(Outcome::default())
}

fn stationary_plan(cfg: &ExperimentConfig, sim: &SimConfig) -> SamplingPlan {
    SamplingPlan::scaled(cfg.t0, sim.nu, cfg.burn_in_fraction, cfg.stride)
        .keep_modes(cfg.dump_modes)
        .project_onto(StateVector::mode(cfg.modes, 1))
}

fn stationarity_warning(ens: &EmpiricalEnsemble, what: &str) -> Option<String> {
    ens.flagged().then(|| {
        let d = ens.stationarity;
        format!(
            "{what}: stationarity diagnostic failed (half means of h0 {} vs {}, joint s.e. {})",
            d.first_half_h0, d.second_half_h0, d.joint_se
        )
    })
}

fn write_ensemble(ens: &EmpiricalEnsemble, out: &mut ArtifactWriter) -> Result<()> {
    let k = ens.samples.first().map_or(0, |s| s.modes.len());
    let mut header = functional_header();
    header.push("forced".into());
    header.push("proj_e1".into());
    header.extend(mode_header(k).into_iter().skip(1));
    let rows: Vec<Vec<f64>> = ens
        .samples
        .iter()
        .map(|s| {
            let mut r = vec![s.t];
            r.extend(s.functionals.values());
            r.push(s.forced);
            r.extend(&s.projections);
            for c in &s.modes {
                r.push(c.re);
                r.push(c.im);
            }
            r
        })
        .collect();
    let p = out.path("ensemble.csv", "stationary ensemble");
    write_float_csv(&p, &header, rows.iter().map(Vec::as_slice))
}

fn write_histogram(h: &HistogramDensity, name: &str, role: &str, out: &mut ArtifactWriter) -> Result<()> {
    let edges = h.edges();
    let rows: Vec<[f64; 3]> = h
        .masses
        .iter()
        .enumerate()
        .map(|(i, m)| [edges[i], edges[i + 1], *m])
        .collect();
    let p = out.path(name, role);
    write_float_csv(
        &p,
        &["lo".into(), "hi".into(), "mass".into()],
        rows.iter().map(|r| &r[..]),
    )
}

pub(super) fn stats(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<Outcome> {
    let sim = cfg.sim_config()?;
    let mut outcome = Outcome::default();
    let ens = sample_stationary(&sim, &stationary_plan(cfg, &sim))?;
    outcome.timings.push(("sampling".into(), ens.wall_time_s));
    outcome.warnings.extend(stationarity_warning(&ens, "stats"));
    write_ensemble(&ens, out)?;

    let balance = match balance_and_moments(&ens, &sim.noise) {
        Ok(b) => Some(b),
        Err(Error::NotStationary(_)) => None,
        Err(e) => return Err(e),
    };
    let curve = small_ball_curve(&ens, &cfg.deltas);
    let rows: Vec<[f64; 5]> = curve
        .points
        .iter()
        .map(|p| [p.delta, p.count as f64, p.probability, p.ci_lo, p.ci_hi])
        .collect();
    let p = out.path("smallball.csv", "small-ball curve");
    write_float_csv(
        &p,
        &["delta", "count", "probability", "ci_lo", "ci_hi"].map(String::from),
        rows.iter().map(|r| &r[..]),
    )?;

    let h0 = estimate_density(&ens.series(|s| s.functionals.h0), cfg.n_bins)?;
    let h1 = estimate_density(&ens.series(|s| s.functionals.h1), cfg.n_bins)?;
    write_histogram(&h0, "density_h0.csv", "h0 histogram", out)?;
    write_histogram(&h1, "density_h1.csv", "h1 histogram", out)?;
    let proj = projection_density(&ens, 0, cfg.n_bins)?;
    write_histogram(&proj.histogram, "density_proj_e1.csv", "projection histogram", out)?;

    let alphas = sim.basis.alphas();
    let modes: Vec<_> = ens
        .mode_energy()
        .into_iter()
        .enumerate()
        .map(|(j, (mean, sem))| {
            let linear = sim.noise.b[j].powi(2) / alphas[j];
            json!({ "mode": j + 1, "mean_abs_sq": mean, "sem": sem, "linear_law": linear })
        })
        .collect();
    out.json(
        "summary.json",
        "summary",
        &json!({
            "samples": ens.len(),
            "effective_sample_size": ens.effective_sample_size,
            "burn_in_time": ens.burn_in_time,
            "stationarity": ens.stationarity,
            "zero_states": ens.zero_states,
            "noise": noise_json(&sim.noise),
            "balance": balance,
            "balanced": balance.map(|b| b.balanced()),
            "mode_energy": modes,
            "small_ball": {
                "fitted_c": curve.fitted_c,
                "shape": curve.shape,
                "monotone": curve.is_monotone(),
            },
            "density": {
                "h0_max_mass": h0.max_mass,
                "h0_bin_width": h0.bin_width,
                "h1_max_mass": h1.max_mass,
                "h1_bin_width": h1.bin_width,
                "projection_sup_density": proj.sup_density,
                "projection_d0": proj.d0,
                "projection_degenerate": proj.degenerate,
            },
        }),
    )?;
    Ok(outcome)
}

pub(super) fn identity(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<Outcome> {
    let sim = cfg.sim_config()?;
    let mut outcome = Outcome::default();
    let ens = sample_stationary(&sim, &stationary_plan(cfg, &sim))?;
    outcome.timings.push(("sampling".into(), ens.wall_time_s));
    outcome.warnings.extend(stationarity_warning(&ens, "identity"));
    let g = cfg.test_function();
    let gamma = interquartile_set(&ens, &g)?;
    // sample time quadruples between successive prefixes
    let n = ens.len();
    let study: Vec<_> = [n / 16, n / 4, n]
        .into_iter()
        .filter(|&m| m > 0)
        .map(|m| {
            let r = identity_residual(&ens.prefix(m), &g, &gamma);
            json!({ "samples": m, "sample_time": m as f64 * ens.stride as f64 * ens.dt, "result": r })
        })
        .collect();
    let full = identity_residual(&ens, &g, &gamma);
    if !full.informative {
        outcome.warnings.push("identity: no sample of g(||u||^2) fell in Gamma".into());
    }
    let passed = full.informative && full.residual <= 0.05 && full.within_confidence;
    outcome.passed = Some(passed);
    out.json(
        "summary.json",
        "summary",
        &json!({
            "test_function": g.label(),
            "gamma": gamma.intervals(),
            "result": full,
            "tolerance": { "relative": 0.05, "confidence_se": CONFIDENCE_SE },
            "passed": passed,
            "prefix_study": study,
            "stationarity": ens.stationarity,
        }),
    )?;
    Ok(outcome)
}

pub(super) fn localtime(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<Outcome> {
    let sim = cfg.sim_config()?;
    let id = cfg.functional_id()?;
    let (initial, start) = initial_state(cfg)?;
    let traj = integrate(&initial, &sim, cfg.steps, IntegrateOptions::full().starting_at(start), |_, _, _| {})?;
    let path = ScalarSemimartingalePath::from_trajectory(&traj, &id)?;
    let grid = LevelGrid::covering(&path, cfg.levels, cfg.margin)?;
    let field = local_time_field(&path, &grid, cfg.convention, cfg.stride)?;

    let t0 = traj.times[0];
    let k = field.levels.len();
    let mut rows = Vec::with_capacity(field.times.len() * k);
    for (i, t) in field.times.iter().enumerate() {
        for (a, v) in field.levels.iter().zip(field.row(i)) {
            rows.push([t0 + t, *a, *v]);
        }
    }
    let p = out.path("localtime.csv", "local-time field");
    write_float_csv(&p, &["t", "a", "local_time"].map(String::from), rows.iter().map(|r| &r[..]))?;

    let prows: Vec<[f64; 4]> = (0..=path.steps())
        .map(|n| [traj.times[n], path.values()[n], path.drift()[n], path.quadratic_rate(n)])
        .collect();
    let p = out.path("path.csv", "semimartingale path");
    write_float_csv(
        &p,
        &["t", "value", "drift", "quadratic_rate"].map(String::from),
        prows.iter().map(|r| &r[..]),
    )?;

    let whole = occupation_residual(&path, &field, &StepFunction::constant(1.0)?)?;
    let (lo, hi) = path.range();
    let middle = BorelSet::interval(lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo))?;
    let inner = occupation_residual(&path, &field, &StepFunction::indicator(&middle))?;
    let shape = field.check_shape(1e-9);
    let mut outcome = Outcome::default();
    if cfg.convention == Convention::Absolute {
        outcome
            .warnings
            .push("localtime: absolute-value convention; occupation and shape checks are not expected to hold".into());
    }
    out.json(
        "summary.json",
        "summary",
        &json!({
            "functional": cfg.functional,
            "convention": cfg.convention,
            "levels": k,
            "level_range": [grid.lo(), grid.hi()],
            "path_range": [lo, hi],
            "occupation": { "h_one": whole, "h_middle_half": inner },
            "step_tol": field.step_tol,
            "cumulative_tol": field.cumulative_tol,
            "shape": shape,
            "shape_passed": shape.passed(),
        }),
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    nu: f64,
    b0: f64,
    mean_grad_sq: f64,
    grad_sq_sem: f64,
    balance_residual: f64,
    balance_ok: bool,
    moment: f64,
    moment_sem: f64,
    small_ball_slope: f64,
    sup_projection_density: f64,
    samples: usize,
    effective_samples: f64,
    stationary: bool,
    error: &'a str,
}

impl<'a> From<&'a SweepRow> for SweepCsvRow<'a> {
    fn from(r: &'a SweepRow) -> Self {
        SweepCsvRow {
            nu: r.nu,
            b0: r.b0,
            mean_grad_sq: r.mean_grad_sq,
            grad_sq_sem: r.grad_sq_sem,
            balance_residual: r.balance_residual,
            balance_ok: r.balance_ok,
            moment: r.moment,
            moment_sem: r.moment_sem,
            small_ball_slope: r.small_ball_slope,
            sup_projection_density: r.sup_projection_density,
            samples: r.samples,
            effective_samples: r.effective_samples,
            stationary: r.stationary,
            error: r.error.as_deref().unwrap_or(""),
        }
    }
}

pub(super) fn sweep(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<Outcome> {
    let sim = cfg.sim_config()?;
    let plan = SweepPlan {
        t0: cfg.t0,
        burn_in_fraction: cfg.burn_in_fraction,
        sample_interval: cfg.stride as f64 * sim.dt,
        projection: StateVector::mode(cfg.modes, 1),
        deltas: cfg.deltas.clone(),
        n_bins: cfg.n_bins,
    };
    let table = nu_sweep(&sim, &cfg.nu_list, &plan)?;
    let mut outcome = Outcome::default();
    for r in &table.rows {
        outcome.timings.push((format!("nu={}", r.nu), r.runtime_s));
        if let Some(e) = &r.error {
            outcome.warnings.push(format!("sweep row nu = {}: {e}", r.nu));
        } else if !r.stationary {
            outcome
                .warnings
                .push(format!("sweep row nu = {}: stationarity diagnostic failed", r.nu));
        }
    }
    let rows: Vec<SweepCsvRow> = table.rows.iter().map(SweepCsvRow::from).collect();
    super::io::write_records_csv(&out.path("sweep.csv", "sweep table"), &rows)?;
    out.json(
        "summary.json",
        "summary",
        &json!({
            "nu_list": cfg.nu_list,
            "t0": cfg.t0,
            "moment_spread": table.moment_spread(),
            "moment_spread_bound": 2.0,
            "all_balanced": table.rows.iter().all(|r| r.balance_ok),
            "noise": noise_json(&sim.noise),
        }),
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
        }
    }
}

/// Analytic oracles on the configured truncation (8 modes in the golden
/// configuration).
pub(super) fn validate(cfg: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<Outcome> {
    let n = cfg.modes;
    let length = cfg.length;
    let mut checks = Vec::new();

    // orthonormality of the sampled sines and transform round trip
    let basis = Arc::new(SpectralBasis::with_default_grid(length, n)?);
    let mut gram_err = 0.0f64;
    for i in 1..=n {
        for j in 1..=n {
            let ip: f64 = (0..basis.grid_len())
                .map(|m| basis.eigenfunction_at(i, m) * basis.eigenfunction_at(j, m))
                .sum::<f64>()
                * basis.weight();
            gram_err = gram_err.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    checks.push(Check::below("orthonormality", gram_err, 1e-12));
    let probe = StateVector::from_coeffs(
        (1..=n)
            .map(|j| Complex64::new(1.0 / j as f64, (-1.0f64).powi(j as i32) / (j * j) as f64))
            .collect(),
    );
    let back = basis.to_coefficients(&basis.to_physical(&probe)?)?;
    let rt = back
        .coeffs()
        .iter()
        .zip(probe.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    checks.push(Check::below("transform_round_trip", rt, 1e-12));

    // linear unforced decay against exp(-(nu + i) alpha t)
    let nu = 0.5;
    let dt = 0.05;
    let steps = 40;
    let lin = SimConfig::new(basis.clone(), NoiseSpec::zero(&basis), nu, 0.0, dt)?;
    let traj = integrate(&probe, &lin, steps, IntegrateOptions::default(), |_, _, _| {})?;
    let t = steps as f64 * dt;
    let mut decay_err = 0.0f64;
    for (j, (u, u0)) in traj.final_state().unwrap().coeffs().iter().zip(probe.coeffs()).enumerate() {
        let alpha = ((j + 1) as f64 * PI / length).powi(2);
        let exact = u0 * (Complex64::new(-nu * alpha * t, -alpha * t)).exp();
        decay_err = decay_err.max((u - exact).norm() / exact.norm());
    }
    checks.push(Check::below("linear_decay", decay_err, 1e-8));

    // Ornstein-Uhlenbeck spectrum E|u_j|^2 = b_j^2 / alpha_j
    let b: Vec<f64> = (1..=n).map(|j| 1.0 / (j * j) as f64).collect();
    let noise = NoiseSpec::new(&basis, b.clone())?;
    let ou = SimConfig::new(basis.clone(), noise, nu, 0.0, 0.01)?
        .with_sampling(NoiseSampling::ExactConvolution)
        .with_seed(cfg.seed);
    let ens = sample_stationary(&ou, &SamplingPlan::new(20.0, 800.0, 10).keep_modes(n))?;
    let mut worst = 0.0f64;
    for (j, (mean, sem)) in ens.mode_energy().into_iter().enumerate() {
        let alpha = ((j + 1) as f64 * PI / length).powi(2);
        worst = worst.max((mean - b[j] * b[j] / alpha).abs() / sem);
    }
    checks.push(Check {
        name: "ou_spectrum_in_sem".into(),
        value: worst,
        tolerance: CONFIDENCE_SE,
        passed: worst <= CONFIDENCE_SE,
    });

    // occupation formula on a Brownian path
    let path = ScalarSemimartingalePath::brownian(cfg.seed, 0, 1e-4, 10_000, 1.0)?;
    let grid = LevelGrid::covering(&path, LevelGrid::DEFAULT_LEVELS, LevelGrid::DEFAULT_MARGIN)?;
    let field = local_time_field(&path, &grid, Convention::PositivePart, 10_000)?;
    let occ = occupation_residual(&path, &field, &StepFunction::constant(1.0)?)?;
    checks.push(Check::below("brownian_occupation", occ.residual, 0.02));

    let passed = checks.iter().all(|c| c.passed);
    out.json("validation.json", "oracle report", &json!({ "modes": n, "checks": checks, "passed": passed }))?;
    Ok(Outcome {
        passed: Some(passed),
        warnings: checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("validate: {} = {} exceeds {}", c.name, c.value, c.tolerance))
            .collect(),
        timings: Vec::new(),
    })
}
