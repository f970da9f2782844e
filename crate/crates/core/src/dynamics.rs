//! Time stepping of the Galerkin-truncated stochastic Ginzburg-Landau system
//!
//! ```text
//! du_j = [-(nu + i) alpha_j u_j - i lambda P_N(|u|^2 u)_j] dt + sqrt(nu) b_j (dbeta_j^+ + i dbeta_j^-)
//! ```
//!
//! Two schemes are provided. Exponential Euler integrates the linear part
//! exactly and treats the projected cubic term with the `phi_1` weight; the
//! noise is added either as the raw Brownian increment (so that discrete
//! stochastic integrals can be formed from the same numbers) or with the exact
//! Ornstein-Uhlenbeck convolution variance. Strang splitting is reserved for
//! the unforced, inviscid equation and preserves the discrete `L^2` norm.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{NoiseDraws, NoiseStream};
use crate::spectral::{NoiseSpec, SpectralBasis, StateVector};

/// Coefficient magnitude treated as a numerical blow-up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExponentialEuler,
    /// Split-step for `nu = 0`: half linear phase, pointwise nonlinear phase,
    /// half linear phase.
    StrangNls,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential-euler" => Ok(Scheme::ExponentialEuler),
            "strang-nls" => Ok(Scheme::StrangNls),
            other => Err(Error::config(
                "scheme",
                format!("unknown scheme `{other}` (expected exponential-euler | strang-nls)"),
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::ExponentialEuler => "exponential-euler",
            Scheme::StrangNls => "strang-nls",
        })
    }
}

/// How the additive noise enters an exponential-Euler step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSampling {
    /// `sqrt(nu) b_j dbeta_j`: the increments of the driving Brownian motion.
    RawIncrements,
    /// Same Gaussian draws rescaled to the exact stochastic-convolution
    /// variance `(1 - exp(-2 nu alpha_j dt)) / (2 nu alpha_j)`; the linear
    /// system is then sampled exactly in law.
    ExactConvolution,
}

impl std::str::FromStr for NoiseSampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "raw-increments" => Ok(NoiseSampling::RawIncrements),
            "exact-convolution" => Ok(NoiseSampling::ExactConvolution),
            other => Err(Error::config(
                "noise_sampling",
                format!("unknown sampling `{other}` (expected raw | exact-convolution)"),
            )),
        }
    }
}

impl std::fmt::Display for NoiseSampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseSampling::RawIncrements => "raw",
            NoiseSampling::ExactConvolution => "exact-convolution",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub nu: f64,
    pub lambda: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub sampling: NoiseSampling,
    pub seed: u64,
    pub basis: Arc<SpectralBasis>,
    pub noise: NoiseSpec,
}

impl SimConfig {
    /// Exponential-Euler configuration with raw increments and seed 0.
    pub fn new(basis: Arc<SpectralBasis>, noise: NoiseSpec, nu: f64, lambda: f64, dt: f64) -> Result<Self> {
        let cfg = SimConfig {
            nu,
            lambda,
            dt,
            scheme: Scheme::ExponentialEuler,
            sampling: NoiseSampling::RawIncrements,
            seed: 0,
            basis,
            noise,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Result<Self> {
        self.scheme = scheme;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sampling(mut self, sampling: NoiseSampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        self.nu = nu;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0 && self.nu <= 1.0) {
            return Err(Error::config("nu", format!("must lie in [0, 1], got {}", self.nu)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(
                "lambda",
                format!("must be finite and nonnegative, got {}", self.lambda),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.noise.b.len() != self.basis.modes() {
            return Err(Error::SizeMismatch {
                what: "forcing coefficients",
                expected: self.basis.modes(),
                found: self.noise.b.len(),
            });
        }
        if self.scheme == Scheme::StrangNls {
            if self.nu != 0.0 {
                return Err(Error::config("scheme", "strang-nls requires nu = 0"));
            }
            if !self.basis.is_collocation() {
                return Err(Error::config(
                    "scheme",
                    "strang-nls requires a collocation basis (grid points = modes)",
                ));
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    /// Noise is switched off for the inviscid equation.
    pub fn is_forced(&self) -> bool {
        self.nu > 0.0 && self.noise.is_forced()
    }
}

/// `(e^z - 1) / z`, accurate near the origin.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Precomputed step factors and work buffers for one configuration.
#[derive(Debug, Clone)]
pub struct Stepper {
    config: SimConfig,
    linear: Vec<Complex64>,
    half_linear: Vec<Complex64>,
    nonlinear_weight: Vec<Complex64>,
    noise_scale: Vec<f64>,
    field: Vec<Complex64>,
    projected: StateVector,
}

impl Stepper {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let dt = config.dt;
        let nu = config.nu;
        let forced = config.is_forced();
        let mut linear = Vec::new();
        let mut half_linear = Vec::new();
        let mut nonlinear_weight = Vec::new();
        let mut noise_scale = Vec::new();
        for (&alpha, &b) in config.basis.alphas().iter().zip(&config.noise.b) {
            let z = Complex64::new(-nu * alpha, -alpha) * dt;
            linear.push(z.exp());
            half_linear.push((z / 2.0).exp());
            nonlinear_weight.push(phi1(z) * dt);
            let scale = if !forced {
                0.0
            } else {
                match config.sampling {
                    NoiseSampling::RawIncrements => nu.sqrt() * b,
                    NoiseSampling::ExactConvolution => {
                        let rate = 2.0 * nu * alpha;
                        let var = -(-rate * dt).exp_m1() / rate;
                        nu.sqrt() * b * (var / dt).sqrt()
                    }
                }
            };
            noise_scale.push(scale);
        }
        Ok(Stepper {
            config: config.clone(),
            linear,
            half_linear,
            nonlinear_weight,
            noise_scale,
            field: vec![Complex64::new(0.0, 0.0); config.basis.grid_len()],
            projected: StateVector::zeros(config.modes()),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    /// Advances `state` by one step using the interleaved increments `draws`
    /// (length `2N`, each component of variance `dt`).
    pub fn advance(&mut self, state: &mut StateVector, draws: &[f64]) -> Result<()> {
        let n = self.config.modes();
        if state.len() != n {
            return Err(Error::SizeMismatch {
                what: "state vector",
                expected: n,
                found: state.len(),
            });
        }
        if draws.len() != 2 * n {
            return Err(Error::SizeMismatch {
                what: "noise draws",
                expected: 2 * n,
                found: draws.len(),
            });
        }
        match self.config.scheme {
            Scheme::ExponentialEuler => self.exponential_euler(state, draws),
            Scheme::StrangNls => self.strang(state),
        }
    }

    fn exponential_euler(&mut self, state: &mut StateVector, draws: &[f64]) -> Result<()> {
        let lambda = self.config.lambda;
        let with_cubic = lambda != 0.0;
        if with_cubic {
            cubic_projection(&self.config.basis, state, &mut self.field, &mut self.projected)?;
        }
        let minus_i_lambda = Complex64::new(0.0, -lambda);
        for (j, u) in state.coeffs_mut().iter_mut().enumerate() {
            let mut next = self.linear[j] * *u;
            if with_cubic {
                next += self.nonlinear_weight[j] * minus_i_lambda * self.projected.coeffs()[j];
            }
            let s = self.noise_scale[j];
            if s != 0.0 {
                next += Complex64::new(s * draws[2 * j], s * draws[2 * j + 1]);
            }
            *u = next;
        }
        Ok(())
    }

    fn strang(&mut self, state: &mut StateVector) -> Result<()> {
        let basis = self.config.basis.clone();
        let rotation = self.config.lambda * self.config.dt;
        for (u, p) in state.coeffs_mut().iter_mut().zip(&self.half_linear) {
            *u *= p;
        }
        basis.to_physical_into(state, &mut self.field)?;
        for v in self.field.iter_mut() {
            *v *= Complex64::from_polar(1.0, -rotation * v.norm_sqr());
        }
        basis.to_coefficients_into(&self.field, state)?;
        for (u, p) in state.coeffs_mut().iter_mut().zip(&self.half_linear) {
            *u *= p;
        }
        Ok(())
    }
}

/// `P_N(|u|^2 u)` through pointwise evaluation on the collocation grid.
pub fn cubic_projection(
    basis: &SpectralBasis,
    state: &StateVector,
    field: &mut [Complex64],
    out: &mut StateVector,
) -> Result<()> {
    basis.to_physical_into(state, field)?;
    for v in field.iter_mut() {
        *v *= v.norm_sqr();
    }
    basis.to_coefficients_into(field, out)
}

/// One step of the configured scheme.
pub fn step(state: &StateVector, config: &SimConfig, draws: &NoiseDraws) -> Result<StateVector> {
    let mut stepper = Stepper::new(config)?;
    let mut next = state.clone();
    stepper.advance(&mut next, draws.as_slice())?;
    check_finite(&next, 0, 0, 0.0)?;
    Ok(next)
}

fn check_finite(state: &StateVector, trajectory: u64, step: u64, time: f64) -> Result<()> {
    let max_abs = state.max_abs();
    if !state.is_finite() || max_abs > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp {
            trajectory,
            step,
            time,
            max_abs,
        });
    }
    Ok(())
}

/// Increments of every step of a run, `2N` interleaved values per step.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawLog {
    modes: usize,
    dt: f64,
    values: Vec<f64>,
}

impl DrawLog {
    pub fn new(modes: usize, dt: f64) -> Self {
        DrawLog {
            modes,
            dt,
            values: Vec::new(),
        }
    }

    /// Generates `n_steps` blocks from the counter-addressed stream.
    pub fn generate(seed: u64, trajectory: u64, modes: usize, dt: f64, n_steps: usize) -> Self {
        let mut stream = NoiseStream::new(seed, trajectory);
        let mut log = DrawLog::new(modes, dt);
        log.values.resize(2 * modes * n_steps, 0.0);
        for (step, block) in log.values.chunks_mut(2 * modes).enumerate() {
            stream.fill(step as u64, dt, block);
        }
        log
    }

    pub fn push(&mut self, draws: &[f64]) {
        debug_assert_eq!(draws.len(), 2 * self.modes);
        self.values.extend_from_slice(draws);
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        if self.modes == 0 {
            0
        } else {
            self.values.len() / (2 * self.modes)
        }
    }

    /// Interleaved increments of step `n`.
    pub fn step(&self, n: usize) -> &[f64] {
        let w = 2 * self.modes;
        &self.values[n * w..(n + 1) * w]
    }

    /// The same Brownian path on the grid with twice the step: consecutive
    /// pairs of increments are summed.
    pub fn coarsen(&self) -> DrawLog {
        let w = 2 * self.modes;
        let pairs = self.steps() / 2;
        let mut values = Vec::with_capacity(pairs * w);
        for p in 0..pairs {
            let a = self.step(2 * p);
            let b = self.step(2 * p + 1);
            values.extend(a.iter().zip(b).map(|(x, y)| x + y));
        }
        DrawLog {
            modes: self.modes,
            dt: 2.0 * self.dt,
            values,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub trajectory_id: u64,
    /// Steps between recorded states.
    pub stride: usize,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub draws: Option<DrawLog>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.last()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOptions {
    /// Record every `stride`-th state (always including the initial one);
    /// `None` records only the initial state.
    pub record_stride: Option<usize>,
    pub retain_draws: bool,
    pub trajectory_id: u64,
    /// Global index of the first step; a run restarted from a snapshot taken
    /// at step `s` with `start_step = s` continues the original noise path.
    pub start_step: u64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            record_stride: Some(1),
            retain_draws: false,
            trajectory_id: 0,
            start_step: 0,
        }
    }
}

impl IntegrateOptions {
    pub fn full() -> Self {
        IntegrateOptions {
            record_stride: Some(1),
            retain_draws: true,
            trajectory_id: 0,
            start_step: 0,
        }
    }

    pub fn trajectory(mut self, id: u64) -> Self {
        self.trajectory_id = id;
        self
    }

    pub fn starting_at(mut self, step: u64) -> Self {
        self.start_step = step;
        self
    }
}

enum Source<'a> {
    Stream(NoiseStream),
    Replay(&'a DrawLog),
}

/// Integrates `n_steps` steps with increments from the configured seed.
///
/// `observer(step, t, state)` is invoked for the initial state and after
/// every step.
pub fn integrate<F>(
    initial: &StateVector,
    config: &SimConfig,
    n_steps: usize,
    options: IntegrateOptions,
    observer: F,
) -> Result<Trajectory>
where
    F: FnMut(u64, f64, &StateVector),
{
    let stream = NoiseStream::new(config.seed, options.trajectory_id);
    run(initial, config, n_steps, options, Source::Stream(stream), observer)
}

/// Integrates along a prescribed Brownian path (one step per logged block).
pub fn integrate_replay<F>(
    initial: &StateVector,
    config: &SimConfig,
    draws: &DrawLog,
    options: IntegrateOptions,
    observer: F,
) -> Result<Trajectory>
where
    F: FnMut(u64, f64, &StateVector),
{
    if draws.modes() != config.modes() {
        return Err(Error::SizeMismatch {
            what: "draw log modes",
            expected: config.modes(),
            found: draws.modes(),
        });
    }
    if (draws.dt() - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::config(
            "dt",
            format!("draw log was generated with dt = {}, config has {}", draws.dt(), config.dt),
        ));
    }
    run(initial, config, draws.steps(), options, Source::Replay(draws), observer)
}

fn run<F>(
    initial: &StateVector,
    config: &SimConfig,
    n_steps: usize,
    options: IntegrateOptions,
    mut source: Source<'_>,
    mut observer: F,
) -> Result<Trajectory>
where
    F: FnMut(u64, f64, &StateVector),
{
    let mut stepper = Stepper::new(config)?;
    let n = config.modes();
    if initial.len() != n {
        return Err(Error::SizeMismatch {
            what: "initial state",
            expected: n,
            found: initial.len(),
        });
    }
    if let Some(0) = options.record_stride {
        return Err(Error::config("stride", "must be at least 1"));
    }
    let mut state = initial.clone();
    let t0 = options.start_step as f64 * config.dt;
    let mut times = vec![t0];
    let mut states = vec![state.clone()];
    let mut log = options.retain_draws.then(|| DrawLog::new(n, config.dt));
    let mut buf = vec![0.0; 2 * n];
    let forced = config.is_forced();
    observer(options.start_step, t0, &state);
    for k in 0..n_steps {
        let step_index = options.start_step + k as u64;
        let draws: &[f64] = match &mut source {
            Source::Stream(stream) => {
                if forced || log.is_some() {
                    stream.fill(step_index, config.dt, &mut buf);
                }
                &buf
            }
            Source::Replay(d) => d.step(k),
        };
        stepper.advance(&mut state, draws)?;
        if let Some(log) = log.as_mut() {
            log.push(draws);
        }
        let t = (step_index + 1) as f64 * config.dt;
        check_finite(&state, options.trajectory_id, step_index + 1, t)?;
        if let Some(stride) = options.record_stride {
            if (k + 1) % stride == 0 {
                times.push(t);
                states.push(state.clone());
            }
        }
        observer(step_index + 1, t, &state);
    }
    Ok(Trajectory {
        config: config.clone(),
        trajectory_id: options.trajectory_id,
        stride: options.record_stride.unwrap_or(usize::MAX),
        times,
        states,
        draws: log,
    })
}
