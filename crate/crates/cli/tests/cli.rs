use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cgl-lab"));
    // keep the caller's CGL_* settings out of the tests
    for (k, _) in std::env::vars() {
        if k.starts_with("CGL_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    lab()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

const SIMULATE: &str = "modes = 8\nnu = 0.5\nlambda = 1\ndt = 0.01\nsteps = 100\ndump_modes = 8\nseed = 11\n";

#[test]
fn golden_validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "modes = 8\nseed = 20240601\n");
    let out = dir.path().join("out");
    let o = run(&["validate"], &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    for want in ["orthonormality", "linear_decay", "ou_spectrum_in_sem"] {
        assert!(names.contains(&want), "{want}");
    }
    assert_eq!(manifest(&out)["passed"], true);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["simulate"], &cfg, &a).status.success());
    assert!(run(&["simulate"], &cfg, &b).status.success());
    for f in ["trajectory.csv", "functionals.csv", "final.snap", "summary.json", "resolved.cfg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,re_u1,im_u1,"));
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn every_output_is_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let out = dir.path().join("out");
    assert!(run(&["simulate"], &cfg, &out).status.success());
    let m = manifest(&out);
    let mut listed: Vec<String> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["file"].as_str().unwrap().to_string())
        .collect();
    listed.sort();
    let mut present: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    present.sort();
    assert_eq!(listed, present);
    assert_eq!(m["seed"], 11);
}

#[test]
fn negative_nu_fails_naming_nu() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "nu = -1\n");
    let o = run(&["simulate"], &cfg, &dir.path().join("out"));
    assert!(!o.status.success());
    let e = error_json(&o);
    assert_eq!(e["error"]["field"], "nu");
    assert_eq!(e["error"]["kind"], "config");
}

#[test]
fn environment_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let o = lab()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("CGL_NU", "-1")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert_eq!(error_json(&o)["error"]["field"], "nu");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "viscosity = 0.1\n");
    let o = run(&["stats"], &cfg, &dir.path().join("out"));
    assert!(!o.status.success());
    assert_eq!(error_json(&o)["error"]["field"], "viscosity");
}

#[test]
fn seed_flag_changes_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["simulate"], &cfg, &a).status.success());
    assert!(run(&["simulate", "--seed", "12"], &cfg, &b).status.success());
    assert_ne!(
        fs::read(a.join("trajectory.csv")).unwrap(),
        fs::read(b.join("trajectory.csv")).unwrap()
    );
    assert_eq!(manifest(&b)["seed"], 12);
}

#[test]
fn restart_from_snapshot_continues_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let whole = dir.path().join("whole");
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(run(&["simulate"], &cfg, &whole).status.success());
    assert!(run(&["simulate", "--set", "steps = 60"], &cfg, &first).status.success());
    let snap = first.join("final.snap");
    let o = run(
        &["simulate", "--set", "steps = 40", "--set", &format!("initial_snapshot = {}", snap.display())],
        &cfg,
        &second,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(whole.join("final.snap")).unwrap(),
        fs::read(second.join("final.snap")).unwrap()
    );
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "modes = 4\nlambda = 1\ndt = 0.02\nt0 = 4\nstride = 5\nnu_list = 0.5, 0.25\nforcing = geometric\nseed = 3\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["sweep", "--threads", "1"], &cfg, &a).status.success());
    assert!(run(&["sweep", "--threads", "2"], &cfg, &b).status.success());
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
    assert_eq!(manifest(&b)["threads"], 2);
}
