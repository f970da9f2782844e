//! Experiment orchestration: one configuration in, a directory of CSV/JSON
//! artifacts and a `manifest.json` out.
//!
//! | kind        | artifacts                                                                 |
//! |-------------|---------------------------------------------------------------------------|
//! | `simulate`  | `trajectory.csv`, `functionals.csv`, `final.snap`, `summary.json`         |
//! | `stats`     | `ensemble.csv`, `smallball.csv`, `density_{h0,h1,proj_e1}.csv`, `summary.json` |
//! | `identity`  | `summary.json`                                                            |
//! | `localtime` | `localtime.csv`, `path.csv`, `summary.json`                               |
//! | `sweep`     | `sweep.csv`, `summary.json`                                               |
//! | `validate`  | `validation.json`                                                         |
//!
//! Every run also writes `resolved.cfg`, the full configuration in canonical
//! form. Wall-clock data goes only into the manifest, so reruns of one
//! resolved configuration give byte-identical artifacts.

pub mod config;
mod experiments;
pub mod io;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub use config::{ExperimentConfig, ExperimentKind};
pub use io::{Manifest, Snapshot};

use crate::error::{Error, Result};
use io::{ArtifactWriter, RESOLVED_CONFIG_FILE};

/// Runs the configured experiment inside its own thread pool when
/// `threads > 0`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?;
        pool.install(|| run(cfg))
    } else {
        run(cfg)
    }
}

fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    let dir: PathBuf = cfg
        .out
        .clone()
        .ok_or_else(|| Error::config("out", "no output directory given"))?;
    let started = Instant::now();
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut out = ArtifactWriter::create(&dir)?;
    out.text(RESOLVED_CONFIG_FILE, "resolved configuration", &cfg.to_text())?;
    let outcome = match cfg.kind {
        ExperimentKind::Simulate => experiments::simulate(cfg, &mut out),
        ExperimentKind::Stats => experiments::stats(cfg, &mut out),
        ExperimentKind::LocalTime => experiments::localtime(cfg, &mut out),
        ExperimentKind::Identity => experiments::identity(cfg, &mut out),
        ExperimentKind::Sweep => experiments::sweep(cfg, &mut out),
        ExperimentKind::Validate => experiments::validate(cfg, &mut out),
    }?;
    out.finish(Manifest {
        kind: cfg.kind.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.seed,
        files: Vec::new(),
        warnings: outcome.warnings,
        timings: outcome.timings,
        wall_time_s: started.elapsed().as_secs_f64(),
        started_unix_s,
        threads: rayon::current_num_threads(),
        passed: outcome.passed,
    })
}

/// Machine-readable description of a failed run.
pub fn error_report(err: &Error) -> serde_json::Value {
    let mut v = serde_json::json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    });
    if let Some(f) = err.field() {
        v["error"]["field"] = f.into();
    }
    if let Error::BlowUp {
        trajectory,
        step,
        time,
        max_abs,
    } = err
    {
        v["error"]["trajectory"] = serde_json::json!({
            "id": trajectory, "step": step, "time": time, "max_abs": max_abs,
        });
    }
    v
}
