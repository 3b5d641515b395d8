use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mixflow::exit;
use mixflow::meshio::read_mesh;
use mixflow::output::{parse_snapshot, NORMS_HEADER};

fn mixflow(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixflow")).args(args).current_dir(cwd).output().expect("spawn mixflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn norms(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(NORMS_HEADER));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

const CAVITY: &str = r#"
[mesh]
generate = "square"
resolution = 3
sides = [1, 7, 1, 1]

[problem]
variant = "I"
nu = 1.0

[time]
t_end = 0.3
steps = 3
"#;

#[test]
fn solve_zero_data_writes_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zero.toml", &(CAVITY.to_string() + "[output]\ndir = \"out\"\nsnapshots = \"final\"\n"));
    let o = mixflow(&["solve", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = norms(&dir.path().join("out/norms.csv"));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!((r[1], r[2]), (0.0, 0.0));
    }
    let echo = read_mesh(&dir.path().join("out/mesh.txt")).unwrap();
    assert_eq!(echo.triangles.len(), 18);
    let snap_path = dir.path().join("out/snapshots/field_00003.txt");
    let snap = parse_snapshot(&std::fs::read_to_string(&snap_path).unwrap(), &snap_path).unwrap();
    assert_eq!(snap.velocity.len(), 49);
    assert_eq!(snap.pressure.len(), 16);
    assert!(snap.velocity.iter().all(|r| r[2] == 0.0 && r[3] == 0.0));
    assert!(dir.path().join("out/coercivity.txt").exists() && dir.path().join("out/compat.txt").exists());
}

#[test]
fn large_forcing_exits_with_picard_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let text = CAVITY.replace("\"I\"", "\"II\"").replace("steps = 3", "steps = 1").replace("t_end = 0.3", "t_end = 0.5")
        + "[data]\nf = [\"1e6*sin(3*y)\", \"1e6*x^2\"]\n[solver]\nmax_picard_iters = 30\n[compat]\ncheck = false\n";
    let cfg = write(dir.path(), "big.toml", &text);
    let o = mixflow(&["solve", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&o), exit::PICARD_DIVERGENCE, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smallness"));
}

#[test]
fn strict_compat_fails_on_boundary_functional() {
    let dir = tempfile::tempdir().unwrap();
    let text = CAVITY.replace("sides = [1, 7, 1, 1]", "sides = [2, 1, 1, 1]").replace("resolution = 3", "resolution = 4") + "[data]\nphi2 = \"1\"\n";
    let cfg = write(dir.path(), "phi2.toml", &text);
    let lax = mixflow(&["compat", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&lax), exit::OK);
    let report = String::from_utf8_lossy(&lax.stdout);
    assert!(report.contains("verdict = not_in_H") && report.contains("functional = w0bar"), "{report}");
    assert!(String::from_utf8_lossy(&lax.stderr).contains("warning"));
    let strict = mixflow(&["--strict", "compat", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&strict), exit::NOT_IN_H);
    let solve = mixflow(&["solve", cfg.to_str().unwrap(), "--out", "o", "--strict"], dir.path());
    assert_eq!(code(&solve), exit::NOT_IN_H);
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mixflow(&["frobnicate"], dir.path())), exit::USAGE);
    assert_eq!(code(&mixflow(&["solve"], dir.path())), exit::USAGE);
    let bad = write(dir.path(), "bad.toml", &(CAVITY.to_string() + "[data]\nf = [\"sin(\", \"0\"]\n"));
    let o = mixflow(&["solve", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), exit::USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.f[0]"));
    let broken = write(dir.path(), "broken.toml", "[problem\n");
    let o = mixflow(&["coercivity", broken.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), exit::USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    write(dir.path(), "m.mesh", "mesh2d 1\nnodes 1\n0\n");
    let cfg = write(dir.path(), "m.toml", "[mesh]\nfile = \"m.mesh\"\n[problem]\nvariant = \"I\"\nnu = 1\n");
    let o = mixflow(&["solve", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), exit::USAGE);
    assert!(String::from_utf8_lossy(&o.stderr).contains("m.mesh:3"));
    let missing = mixflow(&["solve", "does-not-exist.toml"], dir.path());
    assert_eq!(code(&missing), exit::FAILURE);
}

#[test]
fn verify_identities_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixflow(&["verify-identities"], dir.path());
    assert_eq!(code(&o), exit::OK);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("identity"));
    assert!(out.contains("failed = 0"));
    assert!(out.contains("normal-trace") && out.contains("circle R=2"));
}

#[test]
fn coercivity_reports_key_values() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[mesh]\ngenerate = \"annulus\"\ninner = 0.25\nresolution = 4\nsides = [1, 2]\n[problem]\nvariant = \"I\"\nnu = 1\n";
    let cfg = write(dir.path(), "ann.toml", text);
    let o = mixflow(&["coercivity", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    let get = |k: &str| -> f64 {
        out.lines().find_map(|l| l.strip_prefix(&format!("{k} = "))).unwrap_or_else(|| panic!("{k} missing in {out}")).parse().unwrap()
    };
    assert!(get("shift_k") > 0.0);
    assert!(get("korn_beta") > 0.0);
    assert_eq!(get("margin_delta"), get("korn_beta") / 2.0);
    assert!(out.contains("flat_shortcut = false"));
    assert_eq!(std::fs::read_to_string(dir.path().join("o/coercivity.txt")).unwrap(), out);
}

#[test]
fn zero_perturbation_gives_zero_response() {
    let dir = tempfile::tempdir().unwrap();
    let text = CAVITY.to_string() + "[data]\nf = [\"sin(pi*y)\", \"x\"]\n[perturbation]\nf = [\"0\", \"0\"]\n[output]\nsnapshots = \"all\"\n";
    let cfg = write(dir.path(), "p.toml", &text);
    let o = mixflow(&["perturb", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    for r in norms(&dir.path().join("o/perturbation_norms.csv")) {
        assert!(r[1] <= 1e-12 && r[2] <= 1e-12, "{r:?}");
    }
    let base = norms(&dir.path().join("o/norms.csv"));
    assert!(base.last().unwrap()[1] > 0.0);
    assert!(dir.path().join("o/snapshots/perturbed_00003.txt").exists());
    let no_section = write(dir.path(), "q.toml", CAVITY);
    assert_eq!(code(&mixflow(&["perturb", no_section.to_str().unwrap(), "--out", "o"], dir.path())), exit::USAGE);
}

#[test]
fn convergence_study_reports_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[problem]\nvariant = \"I\"\nnu = 1\n[study]\nresolutions = [4, 8]\n");
    let o = mixflow(&["convergence-study", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/convergence.csv")).unwrap();
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let l2_rate: f64 = last[3].parse().unwrap();
    let h1_rate: f64 = last[5].parse().unwrap();
    assert!(l2_rate >= 1.9 && h1_rate >= 0.9, "{csv}");
}
