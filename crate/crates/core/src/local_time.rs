//! Pathwise local time of a discretised scalar semimartingale
//!
//! ```text
//! y_t = y_0 + int_0^t x_s ds + sum_j int_0^t theta^j_s dbeta_j
//! ```
//!
//! The field is obtained from the change-of-variable formula
//!
//! ```text
//! L_t(a) = phi(y_t - a) - phi(y_0 - a) - int_0^t 1_{(a, inf)}(y_s) dy_s
//! ```
//!
//! with `phi(r) = r^+` by default. Stochastic integrals are formed from the
//! very increments that generated the path, with the indicator evaluated at
//! the left endpoint of each step. With the positive part, the occupation
//! formula `2 int h(a) L_t(a) da = int_0^t h(y_s) |theta_s|^2 ds` holds for
//! every nonnegative Borel `h`. The absolute-value variant `phi(r) = |r|` is
//! kept for comparison: it is not monotone in `t` and can be negative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::functionals::{Decomposer, FunctionalId};
use crate::rng::NoiseStream;

/// Sampled `(y, x, theta, dw)` of one realisation.
///
/// `values`, `drift` and the rows of `theta` are given at every time point
/// `t_n = n dt`, `n = 0..=steps`; `increments` holds one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSemimartingalePath {
    dt: f64,
    width: usize,
    values: Vec<f64>,
    drift: Vec<f64>,
    theta: Vec<f64>,
    increments: Option<Vec<f64>>,
}

impl ScalarSemimartingalePath {
    pub fn new(
        dt: f64,
        values: Vec<f64>,
        drift: Vec<f64>,
        width: usize,
        theta: Vec<f64>,
        increments: Option<Vec<f64>>,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        let n = values.len();
        if n == 0 {
            return Err(Error::TooFewSamples { need: 1, have: 0 });
        }
        if drift.len() != n {
            return Err(Error::SizeMismatch {
                what: "drift samples",
                expected: n,
                found: drift.len(),
            });
        }
        if theta.len() != n * width {
            return Err(Error::SizeMismatch {
                what: "diffusion coefficients",
                expected: n * width,
                found: theta.len(),
            });
        }
        if let Some(inc) = &increments {
            if inc.len() != (n - 1) * width {
                return Err(Error::SizeMismatch {
                    what: "increments",
                    expected: (n - 1) * width,
                    found: inc.len(),
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("values", "path contains non-finite values"));
        }
        Ok(ScalarSemimartingalePath {
            dt,
            width,
            values,
            drift,
            theta,
            increments,
        })
    }

    /// `y = y0 + scale * W` built from the given standard Brownian increments
    /// (each of variance `dt`).
    pub fn brownian_from_increments(dt: f64, increments: Vec<f64>, scale: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut y = 0.0;
        values.push(y);
        for dw in &increments {
            y += scale * dw;
            values.push(y);
        }
        let n = values.len();
        Self::new(dt, values, vec![0.0; n], 1, vec![scale; n], Some(increments))
    }

    /// Scaled Brownian path on `[0, n_steps dt]` from the counter-addressed stream.
    pub fn brownian(seed: u64, trajectory: u64, dt: f64, n_steps: usize, scale: f64) -> Result<Self> {
        Self::brownian_from_increments(dt, brownian_increments(seed, trajectory, dt, n_steps), scale)
    }

    /// Euler-Maruyama Ornstein-Uhlenbeck path `dy = -kappa y dt + sigma dW`.
    pub fn ornstein_uhlenbeck(
        seed: u64,
        trajectory: u64,
        dt: f64,
        n_steps: usize,
        kappa: f64,
        sigma: f64,
        y0: f64,
    ) -> Result<Self> {
        let increments = brownian_increments(seed, trajectory, dt, n_steps);
        let mut values = Vec::with_capacity(n_steps + 1);
        let mut drift = Vec::with_capacity(n_steps + 1);
        let mut y = y0;
        for dw in &increments {
            values.push(y);
            drift.push(-kappa * y);
            y += -kappa * y * dt + sigma * dw;
        }
        values.push(y);
        drift.push(-kappa * y);
        Self::new(dt, values, drift, 1, vec![sigma; n_steps + 1], Some(increments))
    }

    /// The semimartingale `f(u(t))` along a simulated trajectory, using its
    /// retained increments.
    pub fn from_trajectory(traj: &Trajectory, id: &FunctionalId) -> Result<Self> {
        let draws = traj.draws.as_ref().ok_or(Error::MissingDraws)?;
        if traj.stride != 1 {
            return Err(Error::Thinned { stride: traj.stride });
        }
        let width = 2 * traj.config.modes();
        let n = traj.states.len();
        let mut dec = Decomposer::new(&traj.config);
        let mut values = Vec::with_capacity(n);
        let mut drift = Vec::with_capacity(n);
        let mut theta = Vec::with_capacity(n * width);
        for state in &traj.states {
            let d = dec.decompose(state, id)?;
            values.push(d.value);
            drift.push(d.drift);
            theta.extend_from_slice(&d.theta);
        }
        let mut increments = Vec::with_capacity((n - 1) * width);
        for m in 0..n - 1 {
            increments.extend_from_slice(draws.step(m));
        }
        Self::new(traj.dt(), values, drift, width, theta, Some(increments))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn theta(&self, n: usize) -> &[f64] {
        &self.theta[n * self.width..(n + 1) * self.width]
    }

    pub fn has_increments(&self) -> bool {
        self.increments.is_some()
    }

    /// `sum_j |theta^j(t_n)|^2`
    pub fn quadratic_rate(&self, n: usize) -> f64 {
        self.theta(n).iter().map(|t| t * t).sum()
    }

    /// `theta(t_m) . dw(t_m) + x(t_m) dt`, the modelled increment of step `m`.
    fn model_increments(&self) -> Result<Vec<f64>> {
        let inc = self.increments.as_ref().ok_or(Error::MissingDraws)?;
        Ok((0..self.steps())
            .map(|m| {
                let dw = &inc[m * self.width..(m + 1) * self.width];
                let noise: f64 = self.theta(m).iter().zip(dw).map(|(t, w)| t * w).sum();
                noise + self.drift[m] * self.dt
            })
            .collect())
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// `n_steps` increments of a standard Brownian motion at spacing `dt`.
pub fn brownian_increments(seed: u64, trajectory: u64, dt: f64, n_steps: usize) -> Vec<f64> {
    let mut stream = NoiseStream::new(seed, trajectory);
    let sd = dt.sqrt();
    // one block of the stream serves 4096 steps
    const BLOCK: usize = 4096;
    let mut out = Vec::with_capacity(n_steps);
    let mut block = 0u64;
    while out.len() < n_steps {
        let take = BLOCK.min(n_steps - out.len());
        out.extend(stream.normals(block, take).into_iter().map(|z| sd * z));
        block += 1;
    }
    out
}

/// Sums consecutive pairs: the same Brownian path sampled at twice the step.
pub fn coarsen_increments(increments: &[f64]) -> Vec<f64> {
    increments.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

/// Uniform grid of levels `a_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelGrid {
    levels: Vec<f64>,
}

impl LevelGrid {
    pub const DEFAULT_LEVELS: usize = 256;
    pub const DEFAULT_MARGIN: f64 = 0.05;

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("levels", "need at least two levels"));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config("levels", format!("empty level range [{lo}, {hi}]")));
        }
        let da = (hi - lo) / (n - 1) as f64;
        Ok(LevelGrid {
            levels: (0..n).map(|k| lo + k as f64 * da).collect(),
        })
    }

    /// Covers `[min y - margin, max y + margin]` with `margin` a fraction of
    /// the path range.
    pub fn covering(path: &ScalarSemimartingalePath, n: usize, margin: f64) -> Result<Self> {
        let (lo, hi) = path.range();
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        Self::uniform(lo - margin * span, hi + margin * span, n)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn spacing(&self) -> f64 {
        self.levels[1] - self.levels[0]
    }

    pub fn lo(&self) -> f64 {
        self.levels[0]
    }

    pub fn hi(&self) -> f64 {
        *self.levels.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `phi(r) = max(r, 0)`
    #[default]
    PositivePart,
    /// `phi(r) = |r|`
    Absolute,
}

impl Convention {
    fn phi(self, r: f64) -> f64 {
        match self {
            Convention::PositivePart => r.max(0.0),
            Convention::Absolute => r.abs(),
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive-part" => Ok(Convention::PositivePart),
            "absolute" | "absolute-value" => Ok(Convention::Absolute),
            other => Err(Error::config(
                "convention",
                format!("unknown convention `{other}` (expected positive-part | absolute)"),
            )),
        }
    }
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Convention::PositivePart => "positive-part",
            Convention::Absolute => "absolute",
        })
    }
}

/// `L(t_n, a_k)` on a subset of time indices (always including the last).
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeField {
    pub convention: Convention,
    pub levels: Vec<f64>,
    pub time_indices: Vec<usize>,
    pub times: Vec<f64>,
    /// Row-major: one row per recorded time.
    pub values: Vec<f64>,
    /// Largest one-step mismatch `|dy - (theta . dw + x dt)|`; bounds how far
    /// a single step can decrease the positive-part field.
    pub step_tol: f64,
    /// Accumulated mismatch; bounds how negative the positive-part field can be.
    pub cumulative_tol: f64,
}

impl LocalTimeField {
    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.levels.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn final_row(&self) -> &[f64] {
        self.row(self.times.len() - 1)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest decrease of `t -> L(t, a)` between consecutive recorded times.
    pub fn max_decrease(&self) -> f64 {
        let k = self.levels.len();
        let mut worst = 0.0f64;
        for i in 1..self.times.len() {
            for j in 0..k {
                worst = worst.max(self.values[(i - 1) * k + j] - self.values[i * k + j]);
            }
        }
        worst
    }

    /// Non-negativity and monotonicity in time, up to the reported tolerances
    /// plus `slack` for round-off.
    pub fn check_shape(&self, slack: f64) -> ShapeCheck {
        let min_value = self.min_value();
        let max_decrease = self.max_decrease();
        let scale = self.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let eps = slack * scale;
        ShapeCheck {
            min_value,
            max_decrease,
            nonnegative: min_value >= -(self.cumulative_tol + eps),
            monotone: max_decrease <= self.step_tol * (self.time_indices.len().max(2) - 1) as f64 + eps
                && max_decrease <= self.cumulative_tol + eps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeCheck {
    pub min_value: f64,
    pub max_decrease: f64,
    pub nonnegative: bool,
    pub monotone: bool,
}

impl ShapeCheck {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.monotone
    }
}

/// Computes the local-time field on `grid`, storing every `time_stride`-th
/// time (and the final one).
pub fn local_time_field(
    path: &ScalarSemimartingalePath,
    grid: &LevelGrid,
    convention: Convention,
    time_stride: usize,
) -> Result<LocalTimeField> {
    if time_stride == 0 {
        return Err(Error::config("time_stride", "must be at least 1"));
    }
    let model = path.model_increments()?;
    let steps = path.steps();
    let mut time_indices: Vec<usize> = (0..=steps).step_by(time_stride).collect();
    if *time_indices.last().unwrap() != steps {
        time_indices.push(steps);
    }
    let y = path.values();
    let mut step_tol = 0.0f64;
    let mut cumulative_tol = 0.0;
    for (m, inc) in model.iter().enumerate() {
        let mismatch = (y[m + 1] - y[m] - inc).abs();
        step_tol = step_tol.max(mismatch);
        cumulative_tol += mismatch;
    }
    let columns: Vec<Vec<f64>> = grid
        .levels()
        .par_iter()
        .map(|&a| {
            let base = convention.phi(y[0] - a);
            let mut col = Vec::with_capacity(time_indices.len());
            let mut integral = 0.0;
            let mut next = 0;
            for n in 0..=steps {
                if time_indices[next] == n {
                    col.push(convention.phi(y[n] - a) - base - integral);
                    next += 1;
                    if next == time_indices.len() {
                        break;
                    }
                }
                if y[n] > a {
                    integral += model[n];
                }
            }
            col
        })
        .collect();
    let k = grid.levels().len();
    let rows = time_indices.len();
    let mut values = vec![0.0; rows * k];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * k + j] = *v;
        }
    }
    Ok(LocalTimeField {
        convention,
        levels: grid.levels().to_vec(),
        times: time_indices.iter().map(|&n| n as f64 * path.dt()).collect(),
        time_indices,
        values,
        step_tol,
        cumulative_tol,
    })
}

/// Finite union of disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorelSet {
    intervals: Vec<(f64, f64)>,
}

impl BorelSet {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::InvalidSet(format!("[{a}, {b}] is not an interval")));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in intervals.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::InvalidSet(format!(
                    "[{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(BorelSet { intervals })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    pub fn empty() -> Self {
        BorelSet { intervals: Vec::new() }
    }

    pub fn real_line() -> Self {
        BorelSet {
            intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure `l(Gamma)`.
    pub fn lebesgue(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// `l(Gamma intersected with (-inf, x))`
    pub fn measure_below(&self, x: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| (b.min(x) - a).max(0.0))
            .sum()
    }

    /// The set scaled by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        BorelSet {
            intervals: self.intervals.iter().map(|&(a, b)| (a * factor, b * factor)).collect(),
        }
    }
}

/// Nonnegative step function `h = sum_i w_i 1_{Gamma_i}` over disjoint pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pieces: Vec<(f64, f64, f64)>,
}

impl StepFunction {
    pub fn indicator(set: &BorelSet) -> Self {
        StepFunction {
            pieces: set.intervals().iter().map(|&(a, b)| (a, b, 1.0)).collect(),
        }
    }

    pub fn constant(weight: f64) -> Result<Self> {
        Self::new(vec![(f64::NEG_INFINITY, f64::INFINITY, weight)])
    }

    /// Pieces `(a, b, weight)`; intervals may touch at an endpoint but must
    /// not overlap, weights must be nonnegative.
    pub fn new(mut pieces: Vec<(f64, f64, f64)>) -> Result<Self> {
        for &(a, b, w) in &pieces {
            if !(w >= 0.0) {
                return Err(Error::InvalidSet(format!("negative weight {w} on [{a}, {b}]")));
            }
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::InvalidSet(format!("[{a}, {b}] is not an interval")));
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in pieces.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidSet(format!(
                    "[{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(StepFunction { pieces })
    }

    pub fn value(&self, a: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| p.0 <= a && a <= p.1)
            .map(|p| p.2)
            .sum()
    }

    pub fn pieces(&self) -> &[(f64, f64, f64)] {
        &self.pieces
    }

    /// Pointwise sum (up to the finitely many breakpoints).
    pub fn plus(&self, other: &StepFunction) -> Result<Self> {
        let mut cuts: Vec<f64> = self
            .pieces
            .iter()
            .chain(&other.pieces)
            .flat_map(|p| [p.0, p.1])
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let probe = match (a.is_finite(), b.is_finite()) {
                (true, true) => 0.5 * (a + b),
                (false, true) => b - 1.0,
                (true, false) => a + 1.0,
                (false, false) => 0.0,
            };
            let weight = self.value(probe) + other.value(probe);
            if weight == 0.0 {
                continue;
            }
            match pieces.last_mut() {
                Some(last) if last.1 == a && last.2 == weight => last.1 = b,
                _ => pieces.push((a, b, weight)),
            }
        }
        Self::new(pieces)
    }

    /// `int h(a) f(a) da` for `f` linear between the grid levels.
    fn integrate_against(&self, levels: &[f64], f: &[f64]) -> f64 {
        let mut total = 0.0;
        for &(lo, hi, w) in &self.pieces {
            if w == 0.0 {
                continue;
            }
            for k in 0..levels.len() - 1 {
                let (a0, a1) = (levels[k], levels[k + 1]);
                let l = a0.max(lo);
                let r = a1.min(hi);
                if r <= l {
                    continue;
                }
                let slope = (f[k + 1] - f[k]) / (a1 - a0);
                let fl = f[k] + slope * (l - a0);
                let fr = f[k] + slope * (r - a0);
                total += w * 0.5 * (fl + fr) * (r - l);
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupationResidual {
    /// `2 int h(a) L_t(a) da`
    pub lhs: f64,
    /// `sum_n h(y_n) |theta_n|^2 dt`
    pub rhs: f64,
    pub residual: f64,
}

/// Residual floor below which both sides count as zero.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Relative mismatch of the occupation formula at the field's final time.
pub fn occupation_residual(
    path: &ScalarSemimartingalePath,
    field: &LocalTimeField,
    h: &StepFunction,
) -> Result<OccupationResidual> {
    let (ylo, yhi) = path.range();
    let (glo, ghi) = (field.levels[0], *field.levels.last().unwrap());
    for &(a, b, w) in h.pieces() {
        if w == 0.0 {
            continue;
        }
        let need_lo = a.max(ylo);
        let need_hi = b.min(yhi);
        if need_lo <= need_hi && (need_lo < glo || need_hi > ghi) {
            return Err(Error::GridCoverage {
                lo: glo,
                hi: ghi,
                need_lo,
                need_hi,
            });
        }
    }
    let last = *field.time_indices.last().unwrap();
    let lhs = 2.0 * h.integrate_against(&field.levels, field.final_row());
    let y = path.values();
    let rhs: f64 = (0..last)
        .map(|n| h.value(y[n]) * path.quadratic_rate(n) * path.dt())
        .sum();
    let residual = (lhs - rhs).abs() / rhs.abs().max(RESIDUAL_FLOOR);
    Ok(OccupationResidual { lhs, rhs, residual })
}
