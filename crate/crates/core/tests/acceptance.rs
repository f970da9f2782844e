//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test --test acceptance` runs everything;
//! `cargo test --test acceptance -- 4 7` runs the selected criteria.
//! Analytic reference values are computed here from closed forms rather
//! than through the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use cgl_core::dynamics::{integrate, IntegrateOptions, NoiseSampling, Scheme, SimConfig};
use cgl_core::functionals::{FunctionalId, TestFunction};
use cgl_core::local_time::{
    brownian_increments, BorelSet, coarsen_increments, local_time_field, occupation_residual, Convention, LevelGrid,
    ScalarSemimartingalePath, StepFunction,
};
use cgl_core::spectral::{NoiseSpec, SpectralBasis, StateVector};
use cgl_core::stats::{
    balance_and_moments, batch_mean_sem, estimate_density, identity_residual, interquartile_set, nu_sweep,
    projection_density, sample_stationary, IdentityResidual, small_ball_curve, wilson_interval, SamplingPlan, SweepPlan,
    CONFIDENCE_SE,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

type Check = Result<String, String>;

/// `ACCEPTANCE_SEED_SHIFT` moves every seed, for robustness studies.
fn seed(base: u64) -> u64 {
    base + std::env::var("ACCEPTANCE_SEED_SHIFT")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(0)
        * 1000
}

fn alpha(j: usize, length: f64) -> f64 {
    (j as f64 * PI / length).powi(2)
}

fn power_forcing(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 1.0 / (j * j) as f64).collect()
}

fn sim(n: usize, b: Vec<f64>, nu: f64, lambda: f64, dt: f64, seed: u64) -> SimConfig {
    let basis = Arc::new(SpectralBasis::with_default_grid(PI, n).unwrap());
    let noise = NoiseSpec::new(&basis, b).unwrap();
    SimConfig::new(basis, noise, nu, lambda, dt)
        .unwrap()
        .with_sampling(NoiseSampling::ExactConvolution)
        .with_seed(seed)
}

fn ensure(cond: bool, detail: String) -> Check {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

macro_rules! tryc {
    ($e:expr) => {
        $e.map_err(|e| format!("error: {e}"))?
    };
}

// 1 -------------------------------------------------------------------------

fn basis_sanity() -> Check {
    let start = Instant::now();
    let n = 64;
    let length = PI;
    let basis = tryc!(SpectralBasis::with_default_grid(length, n));
    // midpoint rule with K nodes integrates cos(k pi x / L) exactly for 0 < k < 2K
    let k_nodes = 1024;
    let h = length / k_nodes as f64;
    let xs: Vec<f64> = (0..k_nodes).map(|m| (m as f64 + 0.5) * h).collect();
    let table: Vec<Vec<f64>> = (1..=n)
        .map(|j| xs.iter().map(|&x| basis.eigenfunction(j, x)).collect())
        .collect();
    let mut ortho = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let ip: f64 = table[i].iter().zip(&table[j]).map(|(a, b)| a * b).sum::<f64>() * h;
            ortho = ortho.max((ip - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let state = StateVector::from_coeffs(
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect(),
    );
    let back = tryc!(basis.to_coefficients(&tryc!(basis.to_physical(&state))));
    let round = back
        .coeffs()
        .iter()
        .zip(state.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    ensure(
        ortho < 1e-10 && round < 1e-10 && secs < 1.0,
        format!("orthonormality {ortho:.2e}, round trip {round:.2e} (< 1e-10), {secs:.2}s"),
    )
}

// 2 -------------------------------------------------------------------------

fn linear_oracle() -> Check {
    let start = Instant::now();
    let n = 16;
    let nu = 0.5;
    let basis = Arc::new(tryc!(SpectralBasis::with_default_grid(PI, n)));
    let u0 = StateVector::from_coeffs(
        (1..=n)
            .map(|j| Complex64::new(1.0, 0.5) / j as f64)
            .collect(),
    );
    let mut worst = 0.0f64;
    for &(dt, steps) in &[(1e-3, 1000), (0.01, 100), (0.1, 10), (1.0, 1)] {
        let cfg = tryc!(SimConfig::new(basis.clone(), NoiseSpec::zero(&basis), nu, 0.0, dt));
        let traj = tryc!(integrate(&u0, &cfg, steps, IntegrateOptions::default(), |_, _, _| {}));
        for (n_rec, (t, u)) in traj.times.iter().zip(&traj.states).enumerate() {
            if n_rec % (steps / 10).max(1) != 0 && n_rec != steps {
                continue;
            }
            for (j, (c, c0)) in u.coeffs().iter().zip(u0.coeffs()).enumerate() {
                let a = alpha(j + 1, PI);
                let exact = c0 * Complex64::new(-nu * a * t, -a * t).exp();
                worst = worst.max((c - exact).norm() / exact.norm());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst < 1e-8 && secs < 1.0,
        format!("max relative error {worst:.2e} over dt in {{1e-3, 1e-2, 0.1, 1}} (< 1e-8), {secs:.2}s"),
    )
}

// 3 -------------------------------------------------------------------------

fn strang_run(dt: f64, steps: usize) -> Result<(f64, f64), String> {
    let n = 64;
    let basis = Arc::new(tryc!(SpectralBasis::collocation(PI, n)));
    let cfg = tryc!(tryc!(SimConfig::new(basis.clone(), NoiseSpec::zero(&basis), 0.0, 1.0, dt))
        .with_scheme(Scheme::StrangNls));
    let mut u0 = StateVector::zeros(n);
    u0.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
    u0.coeffs_mut()[1] = Complex64::new(0.0, 0.5);
    u0.coeffs_mut()[2] = Complex64::new(0.25, 0.25);
    // discrete H0 and H1: grid mass, spectral kinetic part plus grid quartic part
    let grid_mass = |u: &StateVector| -> f64 {
        let f = basis.to_physical(u).unwrap();
        0.5 * f.iter().map(|z| z.norm_sqr()).sum::<f64>() * basis.weight()
    };
    let energy = |u: &StateVector| -> f64 {
        let f = basis.to_physical(u).unwrap();
        let kinetic: f64 = u
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| alpha(j + 1, PI) * c.norm_sqr())
            .sum();
        0.5 * kinetic + 0.25 * f.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * basis.weight()
    };
    let m0 = grid_mass(&u0);
    let e0 = energy(&u0);
    let (mut mass_dev, mut energy_dev) = (0.0f64, 0.0f64);
    tryc!(integrate(
        &u0,
        &cfg,
        steps,
        IntegrateOptions {
            record_stride: None,
            ..IntegrateOptions::default()
        },
        |_, _, u| {
            mass_dev = mass_dev.max((grid_mass(u) - m0).abs() / m0);
            energy_dev = energy_dev.max((energy(u) - e0).abs() / e0);
        }
    ));
    Ok((mass_dev, energy_dev))
}

fn inviscid_conservation() -> Check {
    let start = Instant::now();
    let t_end = 2.0;
    let dt = 2e-3;
    let (m1, e1) = strang_run(dt, (t_end / dt) as usize)?;
    let (m2, e2) = strang_run(dt / 2.0, (2.0 * t_end / dt) as usize)?;
    let ratio = e1 / e2;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        m1.max(m2) < 1e-12 && (3.2..=4.8).contains(&ratio) && secs < 10.0,
        format!(
            "H0 drift {:.1e} over 1e3+ steps (< 1e-12); H1 drift {e1:.3e} -> {e2:.3e}, ratio {ratio:.2} (4 +- 20%), {secs:.1}s",
            m1.max(m2)
        ),
    )
}

// 4 -------------------------------------------------------------------------

fn gaussian_law() -> Check {
    let n = 16;
    let cfg = sim(n, power_forcing(n), 0.5, 0.0, 0.01, seed(4));
    let ens = tryc!(sample_stationary(&cfg, &SamplingPlan::new(20.0, 4000.0, 10).keep_modes(8)));
    let mut worst = 0.0f64;
    for (j, (mean, sem)) in ens.mode_energy().into_iter().enumerate() {
        let b = 1.0 / ((j + 1) * (j + 1)) as f64;
        let exact = b * b / alpha(j + 1, PI);
        worst = worst.max((mean - exact).abs() / sem);
    }
    let b0: f64 = (1..=n).map(|j| (j as f64).powi(-4)).sum();
    let (g, gs) = batch_mean_sem(&ens.series(|s| s.functionals.grad_sq));
    let gz = (g - b0).abs() / gs;
    ensure(
        worst <= CONFIDENCE_SE && gz <= CONFIDENCE_SE && !ens.flagged(),
        format!(
            "|u_j|^2 (j <= 8) worst {worst:.2} s.e.m.; grad_sq {g:.5} vs B0 {b0:.5} at {gz:.2} s.e.m. (<= 3); {} samples",
            ens.len()
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn nonlinear_balance() -> Check {
    let n = 32;
    let cfg = sim(n, power_forcing(n), 0.5, 1.0, 0.005, seed(5));
    let ens = tryc!(sample_stationary(&cfg, &SamplingPlan::new(20.0, 2000.0, 20)));
    let r = tryc!(balance_and_moments(&ens, &cfg.noise));
    let rel = r.residual.abs() / r.b0;
    ensure(
        r.balanced() && rel <= 0.05,
        format!(
            "mean grad_sq {:.5} vs B0 {:.5}: {:.2} s.e.m. (<= 3), {:.2}% (<= 5%); {:.0}s",
            r.mean_grad_sq,
            r.b0,
            r.residual_in_sem,
            100.0 * rel,
            ens.wall_time_s
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn brownian_residual(dt: f64, increments: Vec<f64>, levels: usize) -> Result<f64, String> {
    let path = tryc!(ScalarSemimartingalePath::brownian_from_increments(dt, increments, 1.0));
    let grid = tryc!(LevelGrid::covering(&path, levels, LevelGrid::DEFAULT_MARGIN));
    let field = tryc!(local_time_field(&path, &grid, Convention::PositivePart, usize::MAX));
    Ok(tryc!(occupation_residual(&path, &field, &tryc!(StepFunction::constant(1.0)))).residual)
}

fn occupation_identity() -> Check {
    let dt = 1e-4;
    let steps = 10_000;
    let single = brownian_residual(dt, brownian_increments(seed(6), 0, dt, steps), LevelGrid::DEFAULT_LEVELS)?;

    // refinement study: the finest increments are summed pairwise to build
    // the coarser paths, so every level sees the same Brownian motion
    let paths = 64;
    let halvings = 5;
    let mut means = vec![0.0; halvings + 1];
    for p in 0..paths {
        let mut inc = brownian_increments(seed(6), 1 + p as u64, dt, steps * 2);
        let mut h = dt;
        let mut level_res = Vec::new();
        for _ in 0..=halvings {
            level_res.push(brownian_residual(h, inc.clone(), 1024)?);
            inc = coarsen_increments(&inc);
            h *= 2.0;
        }
        level_res.reverse();
        for (m, r) in means.iter_mut().zip(level_res) {
            *m += r / paths as f64;
        }
    }
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);

    // stationary CGL: burn in, then record the H0 path with its own draws;
    // at dt = 1e-3 the Euler increments of H0 carry a few-percent bias
    let n = 16;
    let basis = Arc::new(tryc!(SpectralBasis::with_default_grid(PI, n)));
    let noise = tryc!(NoiseSpec::new(&basis, power_forcing(n)));
    let cfg = tryc!(SimConfig::new(basis, noise, 0.5, 1.0, 2.5e-4)).with_seed(seed(6));
    let burn = 40_000;
    let warm = tryc!(integrate(
        &StateVector::zeros(n),
        &cfg,
        burn,
        IntegrateOptions {
            record_stride: None,
            ..IntegrateOptions::default()
        },
        |_, _, _| {}
    ));
    let u_start = warm.final_state().unwrap().clone();
    let traj = tryc!(integrate(
        &u_start,
        &cfg,
        80_000,
        IntegrateOptions::full().starting_at(burn as u64),
        |_, _, _| {}
    ));
    let path = tryc!(ScalarSemimartingalePath::from_trajectory(&traj, &FunctionalId::H0));
    let grid = tryc!(LevelGrid::covering(&path, LevelGrid::DEFAULT_LEVELS, LevelGrid::DEFAULT_MARGIN));
    let field = tryc!(local_time_field(&path, &grid, Convention::PositivePart, usize::MAX));
    let whole = tryc!(occupation_residual(&path, &field, &tryc!(StepFunction::constant(1.0)))).residual;
    let (lo, hi) = path.range();
    let middle = tryc!(BorelSet::interval(
        lo + 0.25 * (hi - lo),
        lo + 0.75 * (hi - lo)
    ));
    let inner = tryc!(occupation_residual(&path, &field, &StepFunction::indicator(&middle))).residual;
    let cgl = whole.max(inner);

    let trend: Vec<String> = means.iter().map(|m| format!("{m:.4}")).collect();
    ensure(
        single < 0.02 && cgl < 0.05 && monotone,
        format!(
            "Brownian {:.2}% (< 2%); CGL H0 {:.2}% (h = 1) / {:.2}% (middle half) (< 5%); mean residual dt 3.2e-3 -> 1e-4: [{}] non-increasing: {monotone}",
            100.0 * single,
            100.0 * whole,
            100.0 * inner,
            trend.join(", ")
        ),
    )
}

// 7 -------------------------------------------------------------------------

fn convention() -> Check {
    let mut failures = 0;
    let mut worst_min = 0.0f64;
    for p in 0..100 {
        let path = tryc!(ScalarSemimartingalePath::ornstein_uhlenbeck(seed(7), p, 1e-3, 2000, 1.0, 1.0, 0.0));
        let grid = tryc!(LevelGrid::covering(&path, 64, LevelGrid::DEFAULT_MARGIN));
        let field = tryc!(local_time_field(&path, &grid, Convention::PositivePart, 20));
        let shape = field.check_shape(1e-12);
        worst_min = worst_min.min(shape.min_value);
        if !shape.passed() {
            failures += 1;
        }
    }
    // y(s) = s: no noise, monotone
    let n = 1000;
    let dt = 1.0 / n as f64;
    let line = tryc!(ScalarSemimartingalePath::new(
        dt,
        (0..=n).map(|k| k as f64 * dt).collect(),
        vec![1.0; n + 1],
        1,
        vec![0.0; n + 1],
        Some(vec![0.0; n]),
    ));
    let grid = tryc!(LevelGrid::uniform(0.25, 0.75, 3));
    let abs = tryc!(local_time_field(&line, &grid, Convention::Absolute, 1));
    let abs_shape = abs.check_shape(1e-12);
    let pos = tryc!(local_time_field(&line, &grid, Convention::PositivePart, 1));
    ensure(
        failures == 0 && !abs_shape.nonnegative && pos.check_shape(1e-12).passed(),
        format!(
            "positive part: {failures}/100 OU paths fail (min value {worst_min:.1e}); absolute value on y = t: min {:.3} (negative as expected)",
            abs_shape.min_value
        ),
    )
}

// 8 -------------------------------------------------------------------------

fn identity_23() -> Check {
    let n = 16;
    // the residual carries an O(dt) bias of the scheme: about -4% at dt = 0.005
    let cfg = sim(n, power_forcing(n), 0.5, 1.0, 0.00125, seed(8));
    let ens = tryc!(sample_stationary(&cfg, &SamplingPlan::new(20.0, 40_000.0, 10)));
    let mut ok = true;
    let mut lines = Vec::new();
    for g in [TestFunction::Identity, TestFunction::ShiftedSqrt { eps: 0.01 }] {
        let gamma = tryc!(interquartile_set(&ens, &g));
        let m = ens.len();
        let rs: Vec<_> = [m / 16, m / 4, m]
            .into_iter()
            .map(|k| identity_residual(&ens.prefix(k), &g, &gamma))
            .collect();
        let last = rs[2];
        // the point residual at a fixed sample time is itself a random
        // variable; the trend is taken on its 3 s.e.m. upper bound
        let bound = |r: &IdentityResidual| ((r.t1 + r.t2).abs() + CONFIDENCE_SE * r.sum_sem) / r.t1.abs().max(r.t2.abs());
        let decreasing = rs.windows(2).all(|w| bound(&w[1]) <= bound(&w[0]));
        ok &= last.informative && last.residual <= 0.05 && last.within_confidence && decreasing;
        lines.push(format!(
            "{}: {:.2}% (<= 5%), upper bound [{}], {:.2} s.e.m.",
            g.label(),
            100.0 * last.residual,
            rs.iter()
                .map(|r| format!("{:.2}%", 100.0 * bound(r)))
                .collect::<Vec<_>>()
                .join(" -> "),
            (last.t1 + last.t2).abs() / last.sum_sem
        ));
    }
    ensure(ok, lines.join("; "))
}

// 9 -------------------------------------------------------------------------

fn small_ball() -> Check {
    let n = 8;
    let mut b = vec![0.0; n];
    b[0] = 0.1;
    let cfg = sim(n, b, 0.5, 1.0, 0.01, seed(9));
    let ens = tryc!(sample_stationary(&cfg, &SamplingPlan::new(10.0, 8000.0, 5)));
    let deltas: Vec<f64> = (0..=8).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect();
    let full = small_ball_curve(&ens, &deltas);
    let half = small_ball_curve(&ens.prefix(ens.len() / 2), &deltas);
    let bounded = full
        .points
        .iter()
        .all(|p| p.probability <= full.fitted_c * p.delta + 1e-15);
    let stable = (half.fitted_c / full.fitted_c - 1.0).abs() <= 0.5;
    let norms = ens.series(|s| s.norm());
    let mut uppers = Vec::new();
    let mut zero_counts = true;
    for k in [norms.len() / 4, norms.len() / 2, norms.len()] {
        let count = norms[..k].iter().filter(|&&r| r <= 1e-4).count();
        zero_counts &= count == 0;
        uppers.push(wilson_interval(count, k, CONFIDENCE_SE).1);
    }
    let shrinking = uppers.windows(2).all(|w| w[1] < w[0]);
    ensure(
        bounded && stable && shrinking && zero_counts && ens.zero_states == 0 && full.is_monotone(),
        format!(
            "fitted C {:.3} (half sample {:.3}, within 50%: {stable}); P(|u| <= 1e-4) upper bound {:.2e} -> {:.2e} -> {:.2e}",
            full.fitted_c, half.fitted_c, uppers[0], uppers[1], uppers[2]
        ),
    )
}

// 10 ------------------------------------------------------------------------

fn density_proxies() -> Check {
    let n = 16;
    let cfg = sim(n, power_forcing(n), 0.5, 1.0, 0.01, seed(10));
    let ens = tryc!(sample_stationary(&cfg, &SamplingPlan::new(20.0, 20_000.0, 20)));
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, series) in [
        ("H0", ens.series(|s| s.functionals.h0)),
        ("H1", ens.series(|s| s.functionals.h1)),
    ] {
        // the H1 range [min, max] is stretched by its tail, so 32 bins
        // leave the peak unresolved; start at 64
        let masses: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&bins| estimate_density(&series, bins).map(|h| h.max_mass))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let r1 = masses[1] / masses[0];
        let r2 = masses[2] / masses[1];
        ok &= (0.35..=0.65).contains(&r1) && (0.35..=0.65).contains(&r2);
        lines.push(format!("{name} max-bin mass ratios {r1:.3}, {r2:.3}"));
    }
    ensure(ok, format!("{} (0.5 +- 30%)", lines.join("; ")))
}

// 11 ------------------------------------------------------------------------

fn projection_densities() -> Check {
    let n = 16;
    let e1 = StateVector::mode(n, 1);
    // linear case: Re u_1 ~ N(0, b_1^2 / (2 alpha_1))
    let cfg = sim(n, power_forcing(n), 0.5, 0.0, 0.01, seed(11));
    let ens = tryc!(sample_stationary(
        &cfg,
        &SamplingPlan::new(20.0, 4000.0, 10).project_onto(e1.clone())
    ));
    let law = Normal::new(0.0, (1.0 / (2.0 * alpha(1, PI))).sqrt()).unwrap();
    let mut z = ens.series(|s| s.projections[0]);
    z.sort_by(f64::total_cmp);
    let m = z.len() as f64;
    let ks = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max);
    // 99% DKW band, with the effective sample size standing in for n
    let band = 1.63 / ens.effective_sample_size.sqrt();

    // nonlinear case: growth of the sup-density along nu halvings
    let t0 = 1000.0;
    let mut sups = Vec::new();
    for (k, nu) in [0.5, 0.25, 0.125].into_iter().enumerate() {
        // the explicit cubic term needs the smaller step once nu is small
        let cfg = sim(n, power_forcing(n), nu, 1.0, 0.005, seed(110 + k as u64));
        let plan = SamplingPlan::scaled(t0, nu, 0.2, 20).project_onto(e1.clone());
        let ens = tryc!(sample_stationary(&cfg, &plan));
        let p = tryc!(projection_density(&ens, 0, 64));
        sups.push(p.sup_density);
    }
    let bound = 2.0 * 2f64.sqrt();
    let growth: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
    let finite = sups.iter().all(|s| s.is_finite());
    ensure(
        ks <= band && finite && growth.iter().all(|g| *g <= bound),
        format!(
            "lambda = 0: sup|F - Phi| {ks:.4} <= {band:.4}; lambda = 1: sup density [{}], growth [{}] (<= {bound:.3})",
            sups.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>().join(", "),
            growth.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 12 ------------------------------------------------------------------------

fn inviscid_sweep() -> Check {
    let n = 16;
    let base = sim(n, power_forcing(n), 0.5, 1.0, 0.0025, seed(12));
    let plan = SweepPlan {
        t0: 1000.0,
        burn_in_fraction: 0.2,
        sample_interval: 0.05,
        projection: StateVector::mode(n, 1),
        deltas: vec![1e-3, 1e-2, 1e-1],
        n_bins: 64,
    };
    let table = tryc!(nu_sweep(&base, &[0.5, 0.25, 0.125], &plan));
    let spread = table.moment_spread();
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| match &r.error {
            Some(e) => format!("nu {}: error {e}", r.nu),
            None => format!(
                "nu {}: moment {:.3}, balance {:.2} s.e.m. {}",
                r.nu,
                r.moment,
                r.balance_residual.abs() / r.grad_sq_sem,
                if r.balance_ok { "ok" } else { "FAIL" }
            ),
        })
        .collect();
    ensure(
        spread <= 2.0 && table.rows.iter().all(|r| r.balance_ok),
        format!("moment max/min {spread:.3} (<= 2); {}", rows.join("; ")),
    )
}

type Criterion = (u32, &'static str, fn() -> Check);

const CRITERIA: [Criterion; 12] = [
    (1, "basis sanity", basis_sanity),
    (2, "linear oracle", linear_oracle),
    (3, "inviscid conservation", inviscid_conservation),
    (4, "Gaussian stationary law", gaussian_law),
    (5, "nonlinear energy balance", nonlinear_balance),
    (6, "occupation identity", occupation_identity),
    (7, "local-time convention", convention),
    (8, "stationary local-time identity", identity_23),
    (9, "small-ball shape", small_ball),
    (10, "density proxies", density_proxies),
    (11, "projection density", projection_densities),
    (12, "inviscid-limit sweep", inviscid_sweep),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] {id:>2} {name}: {detail} [{:.1}s]",
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
