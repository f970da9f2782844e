//! Scalar functionals of the state and their semimartingale decompositions.
//!
//! The real basis `{e_j, e_{-j} = i e_j}` of `L^2` is realised through the
//! complex coefficients: `(u, e_j) = Re u_j` and `(u, e_{-j}) = Im u_j`.
//! Diffusion coefficient vectors are interleaved the same way as the noise
//! draws, `[+1, -1, +2, -2, ...]`, so that `sum theta^j dw_j` is a plain dot
//! product with one step of a [`DrawLog`](crate::dynamics::DrawLog).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{cubic_projection, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{NoiseSpec, SpectralBasis, StateVector};

/// Values of every functional entering the energy balances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    /// `H0 = ||u||^2 / 2`
    pub h0: f64,
    /// `H1 = ||u_x||^2 / 2 + lambda/4 ||u||_{L4}^4`
    pub h1: f64,
    pub grad_sq: f64,
    pub lap_sq: f64,
    /// `||u||_{L4}^4`
    pub l4: f64,
    /// `||u||_{L6}^6`
    pub l6: f64,
    /// `(|u|^2, |u_x|^2)`
    pub mix1: f64,
    /// `(u^2, (u_x)^2) = Re int u^2 conj(u_x^2)`
    pub mix2: f64,
    /// `sum_j b_j^2 (|u|^2, e_j^2)`
    pub weighted: f64,
}

impl FunctionalSample {
    pub const COLUMNS: [&'static str; 9] = [
        "h0", "h1", "grad_sq", "lap_sq", "l4", "l6", "mix1", "mix2", "weighted",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.h0,
            self.h1,
            self.grad_sq,
            self.lap_sq,
            self.l4,
            self.l6,
            self.mix1,
            self.mix2,
            self.weighted,
        ]
    }

    /// `||u||_{L6}^3 + (|u|^2, |u_x|^2) + ||Delta u||^2`, the moment bounded
    /// uniformly in `nu`.
    pub fn moment_bound_lhs(&self) -> f64 {
        self.l6.sqrt() + self.mix1 + self.lap_sq
    }
}

/// Evaluates all functionals: `h0`, `grad_sq`, `lap_sq` from coefficient sums,
/// the rest by grid quadrature.
pub fn evaluate_functionals(
    state: &StateVector,
    basis: &SpectralBasis,
    noise: &NoiseSpec,
    lambda: f64,
) -> Result<FunctionalSample> {
    if noise.b.len() != basis.modes() {
        return Err(Error::SizeMismatch {
            what: "forcing coefficients",
            expected: basis.modes(),
            found: noise.b.len(),
        });
    }
    let field = basis.to_physical(state)?;
    let deriv = basis.derivative_to_physical(state)?;
    let mut grad_sq = 0.0;
    let mut lap_sq = 0.0;
    for (c, a) in state.coeffs().iter().zip(basis.alphas()) {
        let p = c.norm_sqr();
        grad_sq += a * p;
        lap_sq += a * a * p;
    }
    let m_len = basis.grid_len();
    let (mut l4, mut l6, mut mix1, mut mix2, mut weighted) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for m in 0..m_len {
        let u = field[m];
        let ux = deriv[m];
        let p = u.norm_sqr();
        l4 += p * p;
        l6 += p * p * p;
        mix1 += p * ux.norm_sqr();
        mix2 += (u * u * (ux * ux).conj()).re;
        let env: f64 = noise
            .b
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, b)| {
                let e = basis.eigenfunction_at(j + 1, m);
                b * b * e * e
            })
            .sum();
        weighted += p * env;
    }
    let w = basis.weight();
    let h0 = 0.5 * state.norm_sq();
    Ok(FunctionalSample {
        h0,
        h1: 0.5 * grad_sq + 0.25 * lambda * l4 * w,
        grad_sq,
        lap_sq,
        l4: l4 * w,
        l6: l6 * w,
        mix1: mix1 * w,
        mix2: mix2 * w,
        weighted: weighted * w,
    })
}

/// Twice continuously differentiable test function of polynomial growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Identity,
    /// `sqrt(x + eps)`, a smooth stand-in for `sqrt` away from the origin.
    ShiftedSqrt { eps: f64 },
    /// `sum_k c_k x^k`
    Polynomial { coeffs: Vec<f64> },
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        TestFunction::Polynomial { coeffs: vec![c] }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::Identity => x,
            TestFunction::ShiftedSqrt { eps } => (x + eps).sqrt(),
            TestFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    pub fn first(&self, x: f64) -> f64 {
        match self {
            TestFunction::Identity => 1.0,
            TestFunction::ShiftedSqrt { eps } => 0.5 / (x + eps).sqrt(),
            TestFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
        }
    }

    pub fn second(&self, x: f64) -> f64 {
        match self {
            TestFunction::Identity => 0.0,
            TestFunction::ShiftedSqrt { eps } => -0.25 * (x + eps).powf(-1.5),
            TestFunction::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + (k * (k - 1)) as f64 * c),
        }
    }

    /// Name used in configuration files and reports.
    pub fn label(&self) -> String {
        match self {
            TestFunction::Identity => "identity".into(),
            TestFunction::ShiftedSqrt { eps } => format!("shifted-sqrt({eps})"),
            TestFunction::Polynomial { coeffs } => format!("polynomial({coeffs:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FunctionalId {
    H0,
    H1,
    /// `g(||u||^2)`
    GOfNormSq(TestFunction),
    /// `(u, v)`
    Projection(StateVector),
}

impl FunctionalId {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "h0" | "H0" => Ok(FunctionalId::H0),
            "h1" | "H1" => Ok(FunctionalId::H1),
            "norm-sq" => Ok(FunctionalId::GOfNormSq(TestFunction::Identity)),
            other => Err(Error::config(
                "functional",
                format!("unknown functional `{other}` (expected h0 | h1 | norm-sq)"),
            )),
        }
    }
}

/// Drift and diffusion coefficients of `f(u(t))` at one state:
/// `df = drift dt + sum_{j in Z*} theta^j dw_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub id: FunctionalId,
    pub value: f64,
    /// Full drift coefficient, including its `nu` factor.
    pub drift: f64,
    /// Interleaved `[theta^{+1}, theta^{-1}, theta^{+2}, ...]`, length `2N`.
    pub theta: Vec<f64>,
    /// Set when the diffusion vanishes identically for every state (projection
    /// onto a direction carrying no forced mode).
    pub degenerate_diffusion: bool,
}

impl Decomposition {
    pub fn theta_sq(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }

    pub fn noise_term(&self, draws: &[f64]) -> f64 {
        self.theta.iter().zip(draws).map(|(t, w)| t * w).sum()
    }
}

/// Reusable evaluator avoiding per-state allocation of work buffers.
#[derive(Debug, Clone)]
pub struct Decomposer {
    config: SimConfig,
    field: Vec<Complex64>,
    cubic: StateVector,
}

impl Decomposer {
    pub fn new(config: &SimConfig) -> Self {
        Decomposer {
            config: config.clone(),
            field: vec![Complex64::new(0.0, 0.0); config.basis.grid_len()],
            cubic: StateVector::zeros(config.modes()),
        }
    }

    pub fn decompose(&mut self, state: &StateVector, id: &FunctionalId) -> Result<Decomposition> {
        let cfg = &self.config;
        let basis = cfg.basis.as_ref();
        let n = basis.modes();
        if state.len() != n {
            return Err(Error::SizeMismatch {
                what: "state vector",
                expected: n,
                found: state.len(),
            });
        }
        let nu = cfg.nu;
        let lambda = cfg.lambda;
        let sqrt_nu = nu.sqrt();
        let b = &cfg.noise.b;
        let noise = &cfg.noise;
        let alphas = basis.alphas();
        let grad_sq: f64 = state
            .coeffs()
            .iter()
            .zip(alphas)
            .map(|(c, a)| a * c.norm_sqr())
            .sum();
        let mut theta = vec![0.0; 2 * n];
        let mut degenerate_diffusion = false;
        let (value, drift) = match id {
            FunctionalId::H0 => {
                for (j, c) in state.coeffs().iter().enumerate() {
                    theta[2 * j] = sqrt_nu * b[j] * c.re;
                    theta[2 * j + 1] = sqrt_nu * b[j] * c.im;
                }
                (0.5 * state.norm_sq(), nu * (noise.b0 - grad_sq))
            }
            FunctionalId::H1 => {
                let f = evaluate_functionals(state, basis, noise, lambda)?;
                if lambda != 0.0 {
                    cubic_projection(basis, state, &mut self.field, &mut self.cubic)?;
                } else {
                    self.cubic = StateVector::zeros(n);
                }
                for (j, c) in state.coeffs().iter().enumerate() {
                    let w = alphas[j] * c + lambda * self.cubic.coeffs()[j];
                    theta[2 * j] = sqrt_nu * b[j] * w.re;
                    theta[2 * j + 1] = sqrt_nu * b[j] * w.im;
                }
                let drift = nu
                    * (noise.b1 - f.lap_sq - 2.0 * lambda * f.mix1 - lambda * f.mix2
                        + 2.0 * lambda * f.weighted);
                (f.h1, drift)
            }
            FunctionalId::GOfNormSq(g) => {
                let x = state.norm_sq();
                let g1 = g.first(x);
                let g2 = g.second(x);
                let forced = noise.forced_weight(state);
                let a = 2.0 * (g1 * (noise.b0 - grad_sq) + g2 * forced);
                for (j, c) in state.coeffs().iter().enumerate() {
                    theta[2 * j] = 2.0 * sqrt_nu * b[j] * g1 * c.re;
                    theta[2 * j + 1] = 2.0 * sqrt_nu * b[j] * g1 * c.im;
                }
                (g.value(x), nu * a)
            }
            FunctionalId::Projection(v) => {
                if v.len() != n {
                    return Err(Error::SizeMismatch {
                        what: "projection direction",
                        expected: n,
                        found: v.len(),
                    });
                }
                if lambda != 0.0 {
                    cubic_projection(basis, state, &mut self.field, &mut self.cubic)?;
                }
                let mut drift = 0.0;
                let mut d0 = 0.0;
                for (j, (c, vj)) in state.coeffs().iter().zip(v.coeffs()).enumerate() {
                    // (nu + i) Delta u - i lambda |u|^2 u, the drift of the equation itself
                    let mut rate = Complex64::new(-nu * alphas[j], -alphas[j]) * c;
                    if lambda != 0.0 {
                        rate += Complex64::new(0.0, -lambda) * self.cubic.coeffs()[j];
                    }
                    drift += (rate * vj.conj()).re;
                    theta[2 * j] = sqrt_nu * b[j] * vj.re;
                    theta[2 * j + 1] = sqrt_nu * b[j] * vj.im;
                    d0 += b[j] * b[j] * vj.norm_sqr();
                }
                degenerate_diffusion = d0 == 0.0;
                (state.inner(v), drift)
            }
        };
        Ok(Decomposition {
            id: id.clone(),
            value,
            drift,
            theta,
            degenerate_diffusion,
        })
    }
}

/// Drift and diffusion of a functional at `state` under `config`.
pub fn decompose(state: &StateVector, id: &FunctionalId, config: &SimConfig) -> Result<Decomposition> {
    Decomposer::new(config).decompose(state, id)
}

/// `D0 = sum_{j in Z*} b_j^2 (v, e_j)^2`, the diffusion intensity of `(u, v)`.
pub fn projection_intensity(noise: &NoiseSpec, v: &StateVector) -> f64 {
    noise.forced_weight(v)
}

/// How the drift integral is discretised in [`ito_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftQuadrature {
    /// Left-endpoint rule.
    #[default]
    LeftPoint,
    /// For `H0` only: integrates each mode's dissipation `-nu alpha_j |u_j|^2`
    /// exactly along the linear decay `exp(-2 nu alpha_j s)` within a step.
    LinearExact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItoResidual {
    pub path: Vec<f64>,
    pub max_abs: f64,
}

/// Discrete Itô residual
/// `r(t_n) = f(t_n) - f(0) - sum_{m<n} drift(t_m) dt - sum_{m<n} theta(t_m) . dw(t_m)`.
pub fn ito_residual(traj: &Trajectory, id: &FunctionalId, quadrature: DriftQuadrature) -> Result<ItoResidual> {
    let draws = traj.draws.as_ref().ok_or(Error::MissingDraws)?;
    if traj.stride != 1 {
        return Err(Error::Thinned { stride: traj.stride });
    }
    if quadrature == DriftQuadrature::LinearExact && *id != FunctionalId::H0 {
        return Err(Error::config(
            "quadrature",
            "linear-exact drift quadrature is only defined for H0",
        ));
    }
    let cfg = &traj.config;
    let dt = cfg.dt;
    let mut dec = Decomposer::new(cfg);
    let steps = traj.states.len() - 1;
    if draws.steps() < steps {
        return Err(Error::SizeMismatch {
            what: "draw log steps",
            expected: steps,
            found: draws.steps(),
        });
    }
    let mut path = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    let mut f0 = None;
    for (n, state) in traj.states.iter().enumerate() {
        let d = dec.decompose(state, id)?;
        let f0 = *f0.get_or_insert(d.value);
        path.push(d.value - f0 - acc);
        if n == steps {
            break;
        }
        let drift = match quadrature {
            DriftQuadrature::LeftPoint => d.drift * dt,
            DriftQuadrature::LinearExact => {
                let nu = cfg.nu;
                let mut integral = nu * cfg.noise.b0 * dt;
                for (c, a) in state.coeffs().iter().zip(cfg.basis.alphas()) {
                    let rate = 2.0 * nu * a;
                    let weight = if rate * dt < 1e-12 { dt } else { -(-rate * dt).exp_m1() / rate };
                    integral -= nu * a * c.norm_sqr() * weight;
                }
                integral
            }
        };
        acc += drift + d.noise_term(draws.step(n));
    }
    let max_abs = path.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(ItoResidual { path, max_abs })
}
