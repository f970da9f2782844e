//! Stationary sampling and the estimators built on it.
//!
//! A single long trajectory is started from the zero state, a burn-in
//! segment is discarded and the remainder is thinned into an
//! [`EmpiricalEnsemble`]. Every mean comes with a batch-means standard error
//! (32 batches) to account for autocorrelation, and every comparison is made
//! at three standard errors.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, IntegrateOptions, SimConfig};
use crate::error::{Error, Result};
use crate::functionals::{evaluate_functionals, projection_intensity, FunctionalSample, TestFunction};
use crate::local_time::BorelSet;
use crate::spectral::{NoiseSpec, StateVector};

/// Number of batches in batch-means error estimates.
pub const BATCHES: usize = 32;
/// Width of every confidence statement, in standard errors.
pub const CONFIDENCE_SE: f64 = 3.0;

/// Mean and batch-means standard error of an autocorrelated series.
pub fn batch_mean_sem(series: &[f64]) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    if n < 2 * BATCHES {
        let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let size = n / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (mean, (var / BATCHES as f64).sqrt())
}

fn sample_variance(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Effective sample size `var / sem^2` of an autocorrelated series.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let (_, sem) = batch_mean_sem(series);
    let var = sample_variance(series);
    if sem > 0.0 {
        (var / (sem * sem)).min(series.len() as f64)
    } else {
        series.len() as f64
    }
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Wilson score interval for `k` successes out of `n` at `z` standard errors.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// One post-burn-in sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSample {
    pub t: f64,
    pub functionals: FunctionalSample,
    /// `sum_j b_j^2 |u_j|^2`
    pub forced: f64,
    /// `(u, v)` for each requested direction `v`.
    pub projections: Vec<f64>,
    /// Leading complex coefficients `u_1..u_k`.
    pub modes: Vec<Complex64>,
}

impl EnsembleSample {
    pub fn norm(&self) -> f64 {
        (2.0 * self.functionals.h0).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        2.0 * self.functionals.h0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityDiagnostic {
    pub first_half_h0: f64,
    pub second_half_h0: f64,
    pub joint_se: f64,
    pub passed: bool,
}

impl StationarityDiagnostic {
    fn from_series(h0: &[f64]) -> Self {
        let mid = h0.len() / 2;
        let (m1, s1) = batch_mean_sem(&h0[..mid]);
        let (m2, s2) = batch_mean_sem(&h0[mid..]);
        let joint_se = (s1 * s1 + s2 * s2).sqrt();
        let diff = (m1 - m2).abs();
        let passed = if joint_se > 0.0 {
            diff <= CONFIDENCE_SE * joint_se
        } else {
            diff <= 1e-300
        };
        StationarityDiagnostic {
            first_half_h0: m1,
            second_half_h0: m2,
            joint_se,
            passed,
        }
    }
}

/// How to turn one trajectory into an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub burn_in_time: f64,
    pub sample_time: f64,
    /// Steps between retained samples.
    pub stride: usize,
    /// Number of leading modes kept per sample.
    pub keep_modes: usize,
    pub projections: Vec<StateVector>,
    pub trajectory_id: u64,
}

impl SamplingPlan {
    pub fn new(burn_in_time: f64, sample_time: f64, stride: usize) -> Self {
        SamplingPlan {
            burn_in_time,
            sample_time,
            stride,
            keep_modes: 0,
            projections: Vec::new(),
            trajectory_id: 0,
        }
    }

    /// Total time `T0 / nu` with the leading `burn_in_fraction` discarded.
    pub fn scaled(t0: f64, nu: f64, burn_in_fraction: f64, stride: usize) -> Self {
        let total = t0 / nu;
        Self::new(burn_in_fraction * total, (1.0 - burn_in_fraction) * total, stride)
    }

    pub fn keep_modes(mut self, k: usize) -> Self {
        self.keep_modes = k;
        self
    }

    pub fn project_onto(mut self, v: StateVector) -> Self {
        self.projections.push(v);
        self
    }

    pub fn trajectory(mut self, id: u64) -> Self {
        self.trajectory_id = id;
        self
    }
}

/// Empirical surrogate of the stationary measure.
#[derive(Debug, Clone)]
pub struct EmpiricalEnsemble {
    pub samples: Vec<EnsembleSample>,
    pub burn_in_time: f64,
    pub stride: usize,
    pub dt: f64,
    pub nu: f64,
    pub lambda: f64,
    pub seed: u64,
    pub trajectory_id: u64,
    pub noise: NoiseSpec,
    pub projections: Vec<StateVector>,
    pub effective_sample_size: f64,
    pub stationarity: StationarityDiagnostic,
    /// Samples equal to the zero state.
    pub zero_states: usize,
    pub wall_time_s: f64,
}

impl EmpiricalEnsemble {
    /// Set when the stationarity diagnostic failed.
    pub fn flagged(&self) -> bool {
        !self.stationarity.passed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn series(&self, f: impl Fn(&EnsembleSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// The first `n` samples as a new ensemble (diagnostics recomputed).
    pub fn prefix(&self, n: usize) -> EmpiricalEnsemble {
        let mut out = self.clone();
        out.samples.truncate(n);
        out.refresh_diagnostics();
        out
    }

    fn refresh_diagnostics(&mut self) {
        let h0 = self.series(|s| s.functionals.h0);
        self.stationarity = StationarityDiagnostic::from_series(&h0);
        self.effective_sample_size = effective_sample_size(&h0);
    }

    /// Mean and standard error of `|u_j|^2` for each kept mode.
    pub fn mode_energy(&self) -> Vec<(f64, f64)> {
        let k = self.samples.first().map_or(0, |s| s.modes.len());
        (0..k)
            .map(|j| batch_mean_sem(&self.series(|s| s.modes[j].norm_sqr())))
            .collect()
    }
}

/// Integrates from the zero state, discards the burn-in and keeps every
/// `stride`-th state of the sampling window.
pub fn sample_stationary(config: &SimConfig, plan: &SamplingPlan) -> Result<EmpiricalEnsemble> {
    if !(config.nu > 0.0) {
        return Err(Error::config("nu", "stationary sampling needs nu > 0"));
    }
    if !(plan.burn_in_time > 0.0) {
        return Err(Error::config("burn_in", "must be positive"));
    }
    if !(plan.sample_time > 0.0) {
        return Err(Error::config("sample_time", "must be positive"));
    }
    if plan.stride == 0 {
        return Err(Error::config("stride", "must be at least 1"));
    }
    let n = config.modes();
    if plan.keep_modes > n {
        return Err(Error::config("keep_modes", format!("at most {n}")));
    }
    for v in &plan.projections {
        if v.len() != n {
            return Err(Error::SizeMismatch {
                what: "projection direction",
                expected: n,
                found: v.len(),
            });
        }
    }
    let start = Instant::now();
    let burn_steps = (plan.burn_in_time / config.dt).ceil() as u64;
    let sample_steps = (plan.sample_time / config.dt).ceil() as u64;
    let total = burn_steps + sample_steps;
    let mut samples = Vec::with_capacity((sample_steps / plan.stride as u64) as usize + 1);
    let mut failure = None;
    let mut zero_states = 0;
    let options = IntegrateOptions {
        record_stride: None,
        retain_draws: false,
        trajectory_id: plan.trajectory_id,
        start_step: 0,
    };
    integrate(&StateVector::zeros(n), config, total as usize, options, |step, t, u| {
        if step <= burn_steps || (step - burn_steps) % plan.stride as u64 != 0 || failure.is_some() {
            return;
        }
        match evaluate_functionals(u, &config.basis, &config.noise, config.lambda) {
            Ok(f) => {
                if u.norm_sq() == 0.0 {
                    zero_states += 1;
                }
                samples.push(EnsembleSample {
                    t,
                    functionals: f,
                    forced: config.noise.forced_weight(u),
                    projections: plan.projections.iter().map(|v| u.inner(v)).collect(),
                    modes: u.coeffs()[..plan.keep_modes].to_vec(),
                });
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let mut ens = EmpiricalEnsemble {
        samples,
        burn_in_time: burn_steps as f64 * config.dt,
        stride: plan.stride,
        dt: config.dt,
        nu: config.nu,
        lambda: config.lambda,
        seed: config.seed,
        trajectory_id: plan.trajectory_id,
        noise: config.noise.clone(),
        projections: plan.projections.clone(),
        effective_sample_size: 0.0,
        stationarity: StationarityDiagnostic {
            first_half_h0: 0.0,
            second_half_h0: 0.0,
            joint_se: 0.0,
            passed: true,
        },
        zero_states,
        wall_time_s: 0.0,
    };
    ens.refresh_diagnostics();
    ens.wall_time_s = start.elapsed().as_secs_f64();
    Ok(ens)
}

/// Energy balance `E ||u_x||^2 = B0` and the `nu`-uniform moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub mean_grad_sq: f64,
    pub grad_sq_sem: f64,
    pub b0: f64,
    /// `mean(grad_sq) - B0`
    pub residual: f64,
    /// `|residual|` in standard errors.
    pub residual_in_sem: f64,
    /// `mean(||u||_{L6}^3 + (|u|^2, |u_x|^2) + ||Delta u||^2)`
    pub moment: f64,
    pub moment_sem: f64,
    /// `B1 + M B0`, the scale the moment is compared against.
    pub moment_scale: f64,
    pub samples: usize,
}

impl BalanceReport {
    /// Within three standard errors (exact zero counts when the error is zero).
    pub fn balanced(&self) -> bool {
        self.residual.abs() <= CONFIDENCE_SE * self.grad_sq_sem || self.residual.abs() <= 1e-300
    }
}

pub fn balance_and_moments(ens: &EmpiricalEnsemble, noise: &NoiseSpec) -> Result<BalanceReport> {
    if ens.flagged() {
        let d = ens.stationarity;
        return Err(Error::NotStationary(format!(
            "half means of h0 {} vs {} differ by more than {CONFIDENCE_SE} x {}",
            d.first_half_h0, d.second_half_h0, d.joint_se
        )));
    }
    if ens.is_empty() {
        return Err(Error::TooFewSamples { need: 1, have: 0 });
    }
    let (mean_grad_sq, grad_sq_sem) = batch_mean_sem(&ens.series(|s| s.functionals.grad_sq));
    let (moment, moment_sem) = batch_mean_sem(&ens.series(|s| s.functionals.moment_bound_lhs()));
    let residual = mean_grad_sq - noise.b0;
    Ok(BalanceReport {
        mean_grad_sq,
        grad_sq_sem,
        b0: noise.b0,
        residual,
        residual_in_sem: if grad_sq_sem > 0.0 {
            residual.abs() / grad_sq_sem
        } else {
            0.0
        },
        moment,
        moment_sem,
        moment_scale: noise.b1 + noise.m_const * noise.b0,
        samples: ens.len(),
    })
}

/// Uniform-bin histogram normalised to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramDensity {
    pub lo: f64,
    pub bin_width: f64,
    pub masses: Vec<f64>,
    pub max_mass: f64,
    /// All samples coincide; a single bin of zero width holds everything.
    pub atom_suspect: bool,
}

impl HistogramDensity {
    pub fn edges(&self) -> Vec<f64> {
        (0..=self.masses.len())
            .map(|k| self.lo + k as f64 * self.bin_width)
            .collect()
    }

    /// `max mass / bin width`; infinite for an atom.
    pub fn sup_density(&self) -> f64 {
        if self.atom_suspect || self.bin_width == 0.0 {
            f64::INFINITY
        } else {
            self.max_mass / self.bin_width
        }
    }
}

pub const MIN_DENSITY_SAMPLES: usize = 100;

/// Histogram over `[min, max]` of the samples.
pub fn estimate_density(samples: &[f64], n_bins: usize) -> Result<HistogramDensity> {
    if samples.len() < MIN_DENSITY_SAMPLES {
        return Err(Error::TooFewSamples {
            need: MIN_DENSITY_SAMPLES,
            have: samples.len(),
        });
    }
    if n_bins == 0 {
        return Err(Error::config("n_bins", "must be at least 1"));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return Ok(HistogramDensity {
            lo,
            bin_width: 0.0,
            masses: vec![1.0],
            max_mass: 1.0,
            atom_suspect: true,
        });
    }
    Ok(histogram_on(samples, lo, hi, n_bins))
}

/// Histogram on a fixed range; samples outside `[lo, hi]` are dropped from
/// the counts but not from the normalisation.
pub fn histogram_on(samples: &[f64], lo: f64, hi: f64, n_bins: usize) -> HistogramDensity {
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in samples {
        if v < lo || v > hi {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let max_mass = masses.iter().copied().fold(0.0, f64::max);
    HistogramDensity {
        lo,
        bin_width: width,
        masses,
        max_mass,
        atom_suspect: false,
    }
}

/// `r -> max` empirical mass of an interval of length `r` (the modulus of
/// the law on interval families).
pub fn empirical_modulus(samples: &[f64], widths: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    widths
        .iter()
        .map(|&r| {
            let mut best = 0;
            let mut hi = 0;
            for lo in 0..n {
                while hi < n && sorted[hi] - sorted[lo] <= r {
                    hi += 1;
                }
                best = best.max(hi - lo);
            }
            (r, if n == 0 { 0.0 } else { best as f64 / n as f64 })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallBallPoint {
    pub delta: f64,
    pub count: usize,
    pub probability: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallCurve {
    pub points: Vec<SmallBallPoint>,
    pub samples: usize,
    /// `sup_delta P(||u|| <= delta) / delta` over `delta > 0`.
    pub fitted_c: f64,
    /// `B0^{-1} sqrt(B1 + M B0)`
    pub shape: f64,
}

impl SmallBallCurve {
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].probability >= w[0].probability)
    }
}

/// Empirical `P(||u|| <= delta)` with Wilson intervals.
pub fn small_ball_curve(ens: &EmpiricalEnsemble, deltas: &[f64]) -> SmallBallCurve {
    let mut norms = ens.series(|s| s.norm());
    norms.sort_by(f64::total_cmp);
    let n = norms.len();
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    let points: Vec<SmallBallPoint> = deltas
        .iter()
        .map(|&delta| {
            let count = norms.partition_point(|&r| r <= delta);
            let (ci_lo, ci_hi) = wilson_interval(count, n, CONFIDENCE_SE);
            SmallBallPoint {
                delta,
                count,
                probability: if n == 0 { 0.0 } else { count as f64 / n as f64 },
                ci_lo,
                ci_hi,
            }
        })
        .collect();
    let fitted_c = points
        .iter()
        .filter(|p| p.delta > 0.0)
        .map(|p| p.probability / p.delta)
        .fold(0.0, f64::max);
    SmallBallCurve {
        points,
        samples: n,
        fitted_c,
        shape: ens.noise.small_ball_shape(),
    }
}

/// Both sides of the stationary local-time identity for `f = g(||u||^2)`:
///
/// ```text
/// T1 = int_Gamma E[ 1_{f > a} ( g'(B0 - ||u_x||^2) + g'' sum b_j^2 u_j^2 ) ] da
/// T2 = E[ 1_Gamma(f) g'^2 sum b_j^2 u_j^2 ]
/// ```
///
/// whose sum vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub t1: f64,
    pub t2: f64,
    pub sum_sem: f64,
    /// `|T1 + T2| / max(|T1|, |T2|, floor)`
    pub residual: f64,
    /// `|T1 + T2| <= 3 sem`
    pub within_confidence: bool,
    /// False when no sample of `f` falls in `Gamma`; the identity then
    /// degenerates to a plain moment balance or to `0 = 0`.
    pub informative: bool,
    pub samples: usize,
}

pub fn identity_residual(ens: &EmpiricalEnsemble, g: &TestFunction, gamma: &BorelSet) -> IdentityResidual {
    let b0 = ens.noise.b0;
    let mut t1s = Vec::with_capacity(ens.len());
    let mut t2s = Vec::with_capacity(ens.len());
    let mut reached = false;
    for s in &ens.samples {
        let x = s.norm_sq();
        let f = g.value(x);
        let g1 = g.first(x);
        let g2 = g.second(x);
        let below = gamma.measure_below(f);
        if gamma.contains(f) {
            reached = true;
        }
        let k = g1 * (b0 - s.functionals.grad_sq) + g2 * s.forced;
        t1s.push(if below > 0.0 { below * k } else { 0.0 });
        t2s.push(if gamma.contains(f) { g1 * g1 * s.forced } else { 0.0 });
    }
    let sums: Vec<f64> = t1s.iter().zip(&t2s).map(|(a, b)| a + b).collect();
    let n = ens.len().max(1) as f64;
    let t1 = t1s.iter().sum::<f64>() / n;
    let t2 = t2s.iter().sum::<f64>() / n;
    let (_, sum_sem) = batch_mean_sem(&sums);
    let total = t1 + t2;
    let scale = t1.abs().max(t2.abs()).max(crate::local_time::RESIDUAL_FLOOR);
    IdentityResidual {
        t1,
        t2,
        sum_sem,
        residual: total.abs() / scale,
        within_confidence: total.abs() <= CONFIDENCE_SE * sum_sem || total == 0.0,
        informative: reached && !gamma.is_empty(),
        samples: ens.len(),
    }
}

/// Interquartile interval of `g(||u||^2)` over the ensemble.
pub fn interquartile_set(ens: &EmpiricalEnsemble, g: &TestFunction) -> Result<BorelSet> {
    let values = ens.series(|s| g.value(s.norm_sq()));
    if values.is_empty() {
        return Err(Error::TooFewSamples { need: 1, have: 0 });
    }
    BorelSet::interval(quantile(&values, 0.25), quantile(&values, 0.75))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionDensity {
    pub histogram: HistogramDensity,
    pub sup_density: f64,
    /// `D0 = sum b_j^2 (v, e_j)^2`
    pub d0: f64,
    pub degenerate: bool,
    pub nu: f64,
}

/// Histogram of `z = (u, v)` for the `index`-th recorded direction.
pub fn projection_density(ens: &EmpiricalEnsemble, index: usize, n_bins: usize) -> Result<ProjectionDensity> {
    let v = ens.projections.get(index).ok_or_else(|| {
        Error::config("projection", format!("ensemble records {} directions", ens.projections.len()))
    })?;
    let d0 = projection_intensity(&ens.noise, v);
    let z = ens.series(|s| s.projections[index]);
    let histogram = estimate_density(&z, n_bins)?;
    Ok(ProjectionDensity {
        sup_density: histogram.sup_density(),
        histogram,
        d0,
        degenerate: d0 == 0.0,
        nu: ens.nu,
    })
}

/// Inputs of a viscosity sweep beyond the base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Total time is `t0 / nu`.
    pub t0: f64,
    pub burn_in_fraction: f64,
    /// Time between retained samples (converted to a step stride).
    pub sample_interval: f64,
    pub projection: StateVector,
    pub deltas: Vec<f64>,
    pub n_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nu: f64,
    pub b0: f64,
    pub mean_grad_sq: f64,
    pub grad_sq_sem: f64,
    pub balance_residual: f64,
    pub balance_ok: bool,
    pub moment: f64,
    pub moment_sem: f64,
    pub small_ball_slope: f64,
    pub sup_projection_density: f64,
    pub samples: usize,
    pub effective_samples: f64,
    pub runtime_s: f64,
    pub stationary: bool,
    pub error: Option<String>,
}

impl SweepRow {
    pub const COLUMNS: [&'static str; 15] = [
        "nu",
        "b0",
        "mean_grad_sq",
        "grad_sq_sem",
        "balance_residual",
        "balance_ok",
        "moment",
        "moment_sem",
        "small_ball_slope",
        "sup_projection_density",
        "samples",
        "effective_samples",
        "runtime_s",
        "stationary",
        "error",
    ];

    fn failed(nu: f64, b0: f64, error: String) -> Self {
        SweepRow {
            nu,
            b0,
            mean_grad_sq: f64::NAN,
            grad_sq_sem: f64::NAN,
            balance_residual: f64::NAN,
            balance_ok: false,
            moment: f64::NAN,
            moment_sem: f64::NAN,
            small_ball_slope: f64::NAN,
            sup_projection_density: f64::NAN,
            samples: 0,
            effective_samples: 0.0,
            runtime_s: 0.0,
            stationary: false,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `max / min` of the moment column over rows without errors.
    pub fn moment_spread(&self) -> f64 {
        let m: Vec<f64> = self.rows.iter().filter(|r| r.error.is_none()).map(|r| r.moment).collect();
        let max = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = m.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

fn sweep_row(base: &SimConfig, nu: f64, plan: &SweepPlan, trajectory: u64) -> Result<SweepRow> {
    let cfg = base.clone().with_nu(nu)?;
    let stride = ((plan.sample_interval / cfg.dt).round() as usize).max(1);
    let sampling = SamplingPlan::scaled(plan.t0, nu, plan.burn_in_fraction, stride)
        .project_onto(plan.projection.clone())
        .trajectory(trajectory);
    let ens = sample_stationary(&cfg, &sampling)?;
    let stationary = !ens.flagged();
    let (mean_grad_sq, grad_sq_sem) = batch_mean_sem(&ens.series(|s| s.functionals.grad_sq));
    let (moment, moment_sem) = batch_mean_sem(&ens.series(|s| s.functionals.moment_bound_lhs()));
    let balance_residual = mean_grad_sq - cfg.noise.b0;
    let curve = small_ball_curve(&ens, &plan.deltas);
    let proj = projection_density(&ens, 0, plan.n_bins)?;
    Ok(SweepRow {
        nu,
        b0: cfg.noise.b0,
        mean_grad_sq,
        grad_sq_sem,
        balance_residual,
        balance_ok: stationary && balance_residual.abs() <= CONFIDENCE_SE * grad_sq_sem,
        moment,
        moment_sem,
        small_ball_slope: curve.fitted_c,
        sup_projection_density: proj.sup_density,
        samples: ens.len(),
        effective_samples: ens.effective_sample_size,
        runtime_s: ens.wall_time_s,
        stationary,
        error: None,
    })
}

/// One stationary ensemble per viscosity, run concurrently; a failing row is
/// recorded and the sweep continues.
pub fn nu_sweep(base: &SimConfig, nus: &[f64], plan: &SweepPlan) -> Result<SweepTable> {
    if nus.is_empty() {
        return Err(Error::config("nu_list", "must not be empty"));
    }
    if nus.windows(2).any(|w| w[1] >= w[0]) || nus.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::config("nu_list", "must be positive and strictly decreasing"));
    }
    let rows = nus
        .par_iter()
        .enumerate()
        .map(|(i, &nu)| {
            sweep_row(base, nu, plan, i as u64).unwrap_or_else(|e| SweepRow::failed(nu, base.noise.b0, e.to_string()))
        })
        .collect();
    Ok(SweepTable { rows })
}
