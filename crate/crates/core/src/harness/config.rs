//! Line-based `key = value` experiment configuration.
//!
//! ```text
//! # comments run to end of line
//! kind = stats
//! modes = 16
//! nu = 0.5
//! forcing = power
//! ```
//!
//! Unknown keys are rejected. Environment variables `CGL_<KEY>` (upper
//! case) override the file; command-line flags override both.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::dynamics::{NoiseSampling, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::functionals::{FunctionalId, TestFunction};
use crate::local_time::{Convention, LevelGrid};
use crate::spectral::{ForcingProfile, NoiseSpec, SpectralBasis};

pub const ENV_PREFIX: &str = "CGL_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Simulate,
    Stats,
    LocalTime,
    Identity,
    Sweep,
    Validate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Simulate,
        ExperimentKind::Stats,
        ExperimentKind::LocalTime,
        ExperimentKind::Identity,
        ExperimentKind::Sweep,
        ExperimentKind::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Stats => "stats",
            ExperimentKind::LocalTime => "localtime",
            ExperimentKind::Identity => "identity",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "kind",
                    format!("unknown experiment `{s}` (expected simulate | stats | localtime | identity | sweep | validate)"),
                )
            })
    }
}

/// Named forcing family; its parameters live in the `forcing_*` keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingFamily {
    Power,
    Geometric,
    Single,
    Zero,
    List,
}

impl FromStr for ForcingFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "power" => ForcingFamily::Power,
            "geometric" => ForcingFamily::Geometric,
            "single" => ForcingFamily::Single,
            "zero" => ForcingFamily::Zero,
            "list" => ForcingFamily::List,
            other => {
                return Err(Error::config(
                    "forcing",
                    format!("unknown family `{other}` (expected power | geometric | single | zero | list)"),
                ))
            }
        })
    }
}

impl ForcingFamily {
    fn name(self) -> &'static str {
        match self {
            ForcingFamily::Power => "power",
            ForcingFamily::Geometric => "geometric",
            ForcingFamily::Single => "single",
            ForcingFamily::Zero => "zero",
            ForcingFamily::List => "list",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunctionKind {
    Identity,
    ShiftedSqrt,
}

/// Every knob of an experiment. Field names double as configuration keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub out: Option<PathBuf>,
    pub length: f64,
    pub modes: usize,
    /// Quadrature points; `None` means `4 * modes`.
    pub grid: Option<usize>,
    pub nu: f64,
    pub lambda: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub noise_sampling: NoiseSampling,
    pub seed: u64,
    pub forcing: ForcingFamily,
    pub forcing_amplitude: f64,
    pub forcing_exponent: f64,
    pub forcing_ratio: f64,
    pub forcing_mode: usize,
    pub forcing_list: Vec<f64>,
    /// Total stationary time is `t0 / nu`.
    pub t0: f64,
    pub burn_in_fraction: f64,
    /// Steps of `simulate` and `localtime` runs.
    pub steps: usize,
    /// Steps between recorded states / samples / local-time rows.
    pub stride: usize,
    pub dump_modes: usize,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub nu_list: Vec<f64>,
    pub deltas: Vec<f64>,
    pub n_bins: usize,
    pub levels: usize,
    pub margin: f64,
    pub convention: Convention,
    pub functional: String,
    pub test_function: TestFunctionKind,
    pub sqrt_eps: f64,
    pub initial_snapshot: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Simulate,
            out: None,
            length: PI,
            modes: 32,
            grid: None,
            nu: 0.5,
            lambda: 1.0,
            dt: 0.01,
            scheme: Scheme::ExponentialEuler,
            noise_sampling: NoiseSampling::RawIncrements,
            seed: 0,
            forcing: ForcingFamily::Power,
            forcing_amplitude: 1.0,
            forcing_exponent: 2.0,
            forcing_ratio: 0.5,
            forcing_mode: 1,
            forcing_list: Vec::new(),
            t0: 100.0,
            burn_in_fraction: 0.2,
            steps: 1000,
            stride: 1,
            dump_modes: 4,
            threads: 0,
            nu_list: vec![0.5, 0.25, 0.125],
            deltas: vec![1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1],
            n_bins: 64,
            levels: LevelGrid::DEFAULT_LEVELS,
            margin: LevelGrid::DEFAULT_MARGIN,
            convention: Convention::PositivePart,
            functional: "h0".into(),
            test_function: TestFunctionKind::Identity,
            sqrt_eps: 0.01,
            initial_snapshot: None,
        }
    }
}

pub const KEYS: [&str; 33] = [
    "kind",
    "out",
    "length",
    "modes",
    "grid",
    "nu",
    "lambda",
    "dt",
    "scheme",
    "noise_sampling",
    "seed",
    "forcing",
    "forcing_amplitude",
    "forcing_exponent",
    "forcing_ratio",
    "forcing_mode",
    "forcing_list",
    "t0",
    "burn_in_fraction",
    "steps",
    "stride",
    "dump_modes",
    "threads",
    "nu_list",
    "deltas",
    "n_bins",
    "levels",
    "margin",
    "convention",
    "functional",
    "test_function",
    "sqrt_eps",
    "initial_snapshot",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn optional_path(value: &str) -> Option<PathBuf> {
    match value {
        "" | "none" => None,
        v => Some(PathBuf::from(v)),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies `CGL_<KEY>` overrides from the given variables; other
    /// variables are ignored.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut overrides: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|s| (s.to_ascii_lowercase(), v)))
            .collect();
        overrides.sort();
        for (key, value) in overrides {
            self.set(&key, value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = value.parse()?,
            "out" => self.out = optional_path(value),
            "length" => self.length = num(key, value)?,
            "modes" => self.modes = num(key, value)?,
            "grid" => {
                self.grid = match value {
                    "auto" | "" => None,
                    v => Some(num(key, v)?),
                }
            }
            "nu" => self.nu = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "noise_sampling" => self.noise_sampling = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            "forcing" => self.forcing = value.parse()?,
            "forcing_amplitude" => self.forcing_amplitude = num(key, value)?,
            "forcing_exponent" => self.forcing_exponent = num(key, value)?,
            "forcing_ratio" => self.forcing_ratio = num(key, value)?,
            "forcing_mode" => self.forcing_mode = num(key, value)?,
            "forcing_list" => self.forcing_list = list(key, value)?,
            "t0" => self.t0 = num(key, value)?,
            "burn_in_fraction" => self.burn_in_fraction = num(key, value)?,
            "steps" => self.steps = num(key, value)?,
            "stride" => self.stride = num(key, value)?,
            "dump_modes" => self.dump_modes = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "nu_list" => self.nu_list = list(key, value)?,
            "deltas" => self.deltas = list(key, value)?,
            "n_bins" => self.n_bins = num(key, value)?,
            "levels" => self.levels = num(key, value)?,
            "margin" => self.margin = num(key, value)?,
            "convention" => self.convention = value.parse()?,
            "functional" => {
                FunctionalId::parse(value)?;
                self.functional = value.to_string();
            }
            "test_function" => {
                self.test_function = match value {
                    "identity" => TestFunctionKind::Identity,
                    "shifted-sqrt" | "sqrt" => TestFunctionKind::ShiftedSqrt,
                    other => {
                        return Err(Error::config(
                            key,
                            format!("unknown test function `{other}` (expected identity | shifted-sqrt)"),
                        ))
                    }
                }
            }
            "sqrt_eps" => self.sqrt_eps = num(key, value)?,
            "initial_snapshot" => self.initial_snapshot = optional_path(value),
            other => return Err(Error::config(other, "unknown configuration key")),
        }
        Ok(())
    }

    /// Range checks that do not need the basis to be built.
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        };
        positive("t0", self.t0)?;
        positive("sqrt_eps", self.sqrt_eps)?;
        if !(0.0..1.0).contains(&self.burn_in_fraction) || self.burn_in_fraction == 0.0 {
            return Err(Error::config(
                "burn_in_fraction",
                format!("must lie in (0, 1), got {}", self.burn_in_fraction),
            ));
        }
        if self.stride == 0 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        if self.dump_modes > self.modes {
            return Err(Error::config(
                "dump_modes",
                format!("at most modes = {}, got {}", self.modes, self.dump_modes),
            ));
        }
        if self.n_bins == 0 {
            return Err(Error::config("n_bins", "must be at least 1"));
        }
        if self.levels < 2 {
            return Err(Error::config("levels", "need at least 2 levels"));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::config("margin", "must be non-negative"));
        }
        if self.deltas.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::config("deltas", "must be non-negative"));
        }
        self.sim_config().map(|_| ())
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        match self.scheme {
            Scheme::StrangNls => {
                if let Some(g) = self.grid {
                    if g != self.modes {
                        return Err(Error::config(
                            "grid",
                            "strang-nls uses the collocation grid; grid must equal modes or be auto",
                        ));
                    }
                }
                SpectralBasis::collocation(self.length, self.modes)
            }
            Scheme::ExponentialEuler => match self.grid {
                Some(g) => SpectralBasis::new(self.length, self.modes, g),
                None => SpectralBasis::with_default_grid(self.length, self.modes),
            },
        }
    }

    pub fn forcing_profile(&self) -> ForcingProfile {
        match self.forcing {
            ForcingFamily::Power => ForcingProfile::Power {
                amplitude: self.forcing_amplitude,
                exponent: self.forcing_exponent,
            },
            ForcingFamily::Geometric => ForcingProfile::Geometric {
                amplitude: self.forcing_amplitude,
                ratio: self.forcing_ratio,
            },
            ForcingFamily::Single => ForcingProfile::Single {
                mode: self.forcing_mode,
                amplitude: self.forcing_amplitude,
            },
            ForcingFamily::Zero => ForcingProfile::Zero,
            ForcingFamily::List => ForcingProfile::List(self.forcing_list.clone()),
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let basis = Arc::new(self.basis()?);
        let b = self.forcing_profile().coefficients(self.modes)?;
        let noise = NoiseSpec::new(&basis, b)?;
        let cfg = SimConfig::new(basis, noise, self.nu, self.lambda, self.dt)?
            .with_sampling(self.noise_sampling)
            .with_seed(self.seed);
        cfg.with_scheme(self.scheme)
    }

    pub fn test_function(&self) -> TestFunction {
        match self.test_function {
            TestFunctionKind::Identity => TestFunction::Identity,
            TestFunctionKind::ShiftedSqrt => TestFunction::ShiftedSqrt { eps: self.sqrt_eps },
        }
    }

    pub fn functional_id(&self) -> Result<FunctionalId> {
        FunctionalId::parse(&self.functional)
    }

    /// Canonical text form: every key except `out`, in a fixed order,
    /// parseable by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let path = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("kind", self.kind.name().into());
        kv("length", self.length.to_string());
        kv("modes", self.modes.to_string());
        kv("grid", self.grid.map_or("auto".into(), |g| g.to_string()));
        kv("nu", self.nu.to_string());
        kv("lambda", self.lambda.to_string());
        kv("dt", self.dt.to_string());
        kv("scheme", self.scheme.to_string());
        kv("noise_sampling", self.noise_sampling.to_string());
        kv("seed", self.seed.to_string());
        kv("forcing", self.forcing.name().into());
        kv("forcing_amplitude", self.forcing_amplitude.to_string());
        kv("forcing_exponent", self.forcing_exponent.to_string());
        kv("forcing_ratio", self.forcing_ratio.to_string());
        kv("forcing_mode", self.forcing_mode.to_string());
        kv("forcing_list", join(&self.forcing_list));
        kv("t0", self.t0.to_string());
        kv("burn_in_fraction", self.burn_in_fraction.to_string());
        kv("steps", self.steps.to_string());
        kv("stride", self.stride.to_string());
        kv("dump_modes", self.dump_modes.to_string());
        kv("threads", self.threads.to_string());
        kv("nu_list", join(&self.nu_list));
        kv("deltas", join(&self.deltas));
        kv("n_bins", self.n_bins.to_string());
        kv("levels", self.levels.to_string());
        kv("margin", self.margin.to_string());
        kv("convention", self.convention.to_string());
        kv("functional", self.functional.clone());
        kv(
            "test_function",
            match self.test_function {
                TestFunctionKind::Identity => "identity",
                TestFunctionKind::ShiftedSqrt => "shifted-sqrt",
            }
            .into(),
        );
        kv("sqrt_eps", self.sqrt_eps.to_string());
        kv("initial_snapshot", path(&self.initial_snapshot));
        s
    }
}
