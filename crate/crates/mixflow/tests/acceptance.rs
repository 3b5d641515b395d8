//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mixflow::exit;
use mixflow_core::boundary_calculus::verify_suite;
use mixflow_core::coercivity::{compute_shift, min_coercivity_ratio};
use mixflow_core::compat::{compat_study, Verdict};
use mixflow_core::discretization::Discretization;
use mixflow_core::evolution::{run, run_perturbation, PicardStart, SolveConfig};
use mixflow_core::forms::velocity_errors;
use mixflow_core::geometry::{generate_mesh, SegmentPlan, Shape};
use mixflow_core::lifting::LiftingField;
use mixflow_core::manufactured::ChannelSolution;
use mixflow_core::math::{dot_slice, fit_slope, max_abs, scale, PI};
use mixflow_core::{Datum, Mesh, ProblemSpec, Segment, TimeGrid, Variant};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("boundary identities", boundary_identities),
        ("discrete consistency on the disk", discrete_consistency),
        ("coercivity after the shift", coercivity),
        ("manufactured-solution convergence", manufactured_convergence),
        ("rescaling equivalence", rescaling_equivalence),
        ("uniqueness surrogate", uniqueness),
        ("perturbation mode", perturbation),
        ("compatibility checker", compatibility),
        ("flux compatibility", flux_compatibility),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {} failed", criteria.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("{what} took {:.1}s, limit {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn boundary_identities() -> Result<String, String> {
    let start = Instant::now();
    let rows = verify_suite(64).map_err(e2s)?;
    let elapsed = start.elapsed();
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    ensure(rows.iter().all(|r| r.residual < 1e-10), || format!("max residual {worst:.3e}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {:.3}s", elapsed.as_secs_f64()))?;
    Ok(format!("{} rows, max residual {worst:.2e}", rows.len()))
}

/// Assembled principal form plus the vorticity boundary pairing against
/// `−(Δv, u) = −4π` for `v = (1 + r²)(−y, x)`, `u = (1 + x)(−y, x)`.
fn discrete_consistency() -> Result<String, String> {
    let start = Instant::now();
    let mut orders = Vec::new();
    for variant in [Variant::ProblemI, Variant::ProblemII] {
        let (mut hs, mut errs) = (Vec::new(), Vec::new());
        for res in [4, 8, 16] {
            let mesh = generate_mesh(Shape::Disk, res, &SegmentPlan::uniform(Segment::G3)).map_err(e2s)?;
            let d = Discretization::new(mesh, &ProblemSpec::new(variant, 1.0, TimeGrid::new(1.0, 1))).map_err(e2s)?;
            let v = d.map.interpolate(&|p| {
                let s = 1.0 + p[0] * p[0] + p[1] * p[1];
                [-p[1] * s, p[0] * s]
            });
            let u = d.map.interpolate(&|p| [-(1.0 + p[0]) * p[1], (1.0 + p[0]) * p[0]]);
            let rot = d.sys.boundary_functional(&d.mesh, &d.frames, &d.map, Segment::G3, &|p, f| {
                scale(2.0 + 4.0 * (p[0] * p[0] + p[1] * p[1]), f.tangent)
            });
            hs.push(d.mesh.h().ln());
            errs.push((d.sys.principal.bilinear(&u, &v) - dot_slice(&rot, &u) + 4.0 * PI).abs().ln());
        }
        let order = fit_slope(&hs, &errs);
        ensure(order >= 1.8, || format!("{variant:?}: order {order:.3}"))?;
        orders.push(order);
    }
    within(Duration::from_secs(30), start, "study")?;
    Ok(format!("orders {:.2} (strain form), {:.2} (gradient form)", orders[0], orders[1]))
}

fn coercivity() -> Result<String, String> {
    let cases: [(Shape, &[Segment], Variant); 6] = [
        (Shape::UnitSquare, &[Segment::G1], Variant::ProblemI),
        (Shape::UnitSquare, &[Segment::G1, Segment::G7, Segment::G1, Segment::G1], Variant::ProblemII),
        (Shape::Disk, &[Segment::G1, Segment::G3], Variant::ProblemI),
        (Shape::Disk, &[Segment::G2], Variant::ProblemI),
        (Shape::Annulus { inner: 0.25 }, &[Segment::G1, Segment::G2], Variant::ProblemI),
        (Shape::Disk, &[Segment::G5], Variant::ProblemII),
    ];
    let mut worst = f64::INFINITY;
    let mut shifted = 0;
    for (shape, sides, variant) in cases {
        let mesh = generate_mesh(shape, 4, &SegmentPlan::sides(sides)).map_err(e2s)?;
        let d = Discretization::new(mesh, &ProblemSpec::new(variant, 1.0, TimeGrid::new(1.0, 1))).map_err(e2s)?;
        let r = compute_shift(&d.sys, &d.map, None).map_err(e2s)?;
        let ratio = min_coercivity_ratio(&d.sys, &d.map, r.shift_k, None).map_err(e2s)?;
        ensure(ratio >= r.margin_delta - 1e-8, || format!("{shape:?} {sides:?}: λ_min {ratio:.4e} < δ {:.4e}", r.margin_delta))?;
        worst = worst.min(ratio - r.margin_delta);
        shifted += usize::from(r.shift_k > 0.0);
    }
    ensure(shifted >= 2, || format!("only {shifted} meshes needed a shift"))?;
    for (sides, variant) in [
        ([Segment::G2, Segment::G1, Segment::G3, Segment::G7], Variant::ProblemI),
        ([Segment::G2, Segment::G1, Segment::G3, Segment::G5], Variant::ProblemII),
    ] {
        let mesh = generate_mesh(Shape::UnitSquare, 4, &SegmentPlan::sides(&sides)).map_err(e2s)?;
        let d = Discretization::new(mesh, &ProblemSpec::new(variant, 1.0, TimeGrid::new(1.0, 1))).map_err(e2s)?;
        let r = compute_shift(&d.sys, &d.map, None).map_err(e2s)?;
        ensure(r.flat_shortcut && r.shift_k == 0.0, || format!("{sides:?}: no shortcut (shift {})", r.shift_k))?;
        let ratio = min_coercivity_ratio(&d.sys, &d.map, 0.0, None).map_err(e2s)?;
        ensure(ratio >= r.korn_beta / 2.0 - 1e-8, || format!("{sides:?}: λ_min {ratio:.4e} < β/2"))?;
    }
    Ok(format!("6 meshes ({shifted} shifted), min λ_min − δ = {worst:.3e}; flat shortcut holds"))
}

fn manufactured_convergence() -> Result<String, String> {
    let mut out = Vec::new();
    for variant in [Variant::ProblemI, Variant::ProblemII] {
        let sol = ChannelSolution::new(variant, 1.0, 1.0);
        let t_end = 0.125;
        let mut errs = Vec::new();
        for n in [4usize, 8, 16] {
            let start = Instant::now();
            let spec = sol.spec(TimeGrid::new(t_end, n * n / 16));
            let d = Discretization::new(sol.mesh(n).map_err(e2s)?, &spec).map_err(e2s)?;
            let run_out = run(&d, &spec, &SolveConfig::default()).map_err(e2s)?;
            let v = &run_out.trajectory.physical.last().expect("final field").velocity;
            errs.push(velocity_errors(&d.sys, v, &|p| (sol.velocity(p, t_end), sol.gradient(p, t_end))));
            within(Duration::from_secs(120), start, "run")?;
        }
        let hs: Vec<f64> = [4.0f64, 8.0, 16.0].iter().map(|n| (1.0 / n).ln()).collect();
        let l2 = fit_slope(&hs, &errs.iter().map(|e| e.0.ln()).collect::<Vec<_>>());
        let h1 = fit_slope(&hs, &errs.iter().map(|e| e.1.ln()).collect::<Vec<_>>());
        ensure(l2 >= 1.9 && h1 >= 0.9, || format!("{variant:?}: L2 order {l2:.3}, H1 order {h1:.3}"))?;
        out.push(format!("{variant:?} L2 {l2:.2} H1 {h1:.2}"));
    }
    Ok(out.join(", "))
}

fn rescaling_equivalence() -> Result<String, String> {
    let sol = ChannelSolution::new(Variant::ProblemI, 1.0, 1.0);
    let mut gaps = Vec::new();
    for steps in [4, 8, 16] {
        let spec = sol.spec(TimeGrid::new(0.5, steps));
        let d = Discretization::new(sol.mesh(4).map_err(e2s)?, &spec).map_err(e2s)?;
        let computed = compute_shift(&d.sys, &d.map, None).map_err(e2s)?;
        ensure(computed.shift_k == 0.0, || format!("shift 0 is not admissible here ({})", computed.shift_k))?;
        let a = run(&d, &spec, &SolveConfig { shift_override: Some(1.0), ..Default::default() }).map_err(e2s)?;
        let b = run(&d, &spec, &SolveConfig { shift_override: Some(0.0), ..Default::default() }).map_err(e2s)?;
        let va = &a.trajectory.physical.last().expect("final").velocity;
        let vb = &b.trajectory.physical.last().expect("final").velocity;
        gaps.push(d.sys.l2_norm(&va.iter().zip(vb).map(|(x, y)| x - y).collect::<Vec<_>>()));
    }
    let rates: Vec<f64> = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    ensure(rates.iter().all(|r| (0.8..1.3).contains(r)), || format!("gaps {gaps:.3?}, rates {rates:.3?}"))?;
    Ok(format!("gaps {:.2e} {:.2e} {:.2e}, rates {:.2} {:.2}", gaps[0], gaps[1], gaps[2], rates[0], rates[1]))
}

fn uniqueness() -> Result<String, String> {
    let sol = ChannelSolution::new(Variant::ProblemII, 1.0, 0.5);
    let spec = sol.spec(TimeGrid::new(0.25, 4));
    let d = Discretization::new(sol.mesh(4).map_err(e2s)?, &spec).map_err(e2s)?;
    let tol = SolveConfig::default().picard_tol;
    let a = run(&d, &spec, &SolveConfig { picard_start: PicardStart::Zero, ..Default::default() }).map_err(e2s)?;
    let b = run(&d, &spec, &SolveConfig { picard_start: PicardStart::Lifting, ..Default::default() }).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for (k, (x, y)) in a.trajectory.rescaled.iter().zip(&b.trajectory.rescaled).enumerate() {
        let diff = max_abs(&x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>());
        let bound = 10.0 * tol * max_abs(x).max(1.0);
        ensure(diff <= bound, || format!("step {k}: difference {diff:.3e} > {bound:.3e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("max coefficient difference {worst:.2e} (bound 10·tol·max(1, |z|))"))
}

fn perturbation() -> Result<String, String> {
    let sol = ChannelSolution::new(Variant::ProblemII, 1.0, 1.0);
    let spec = sol.spec(TimeGrid::new(0.25, 2));
    let d = Discretization::new(sol.mesh(4).map_err(e2s)?, &spec).map_err(e2s)?;
    let base_run = run(&d, &spec, &SolveConfig::default()).map_err(e2s)?;
    let vel = base_run.trajectory.physical.iter().map(|f| f.velocity.clone()).collect();
    let w = LiftingField::from_samples(&d.map, &spec.time.times(), vel).map_err(e2s)?;

    let zero = ProblemSpec::new(Variant::ProblemII, 1.0, spec.time);
    let out = run_perturbation(&d, &w, &zero, &SolveConfig::default()).map_err(e2s)?;
    let zmax = out.trajectory.deviation.iter().map(|z| max_abs(&z.velocity)).fold(0.0, f64::max);
    ensure(zmax <= 1e-12, || format!("zero perturbation gave |z̄| = {zmax:.3e}"))?;

    let mut norms = Vec::new();
    for eps in [1e-3, 1e-4] {
        let mut pert = ProblemSpec::new(Variant::ProblemII, 1.0, spec.time);
        pert.data.f = Some(Arc::new(move |p, _| [eps * (1.0 + p[1]), eps * p[0]]));
        let out = run_perturbation(&d, &w, &pert, &SolveConfig::default()).map_err(e2s)?;
        let dt = spec.time.dt();
        norms.push(out.trajectory.records[1..].iter().map(|r| r.h1_velocity * r.h1_velocity * dt).sum::<f64>().sqrt());
    }
    let ratio = norms[0] / norms[1];
    ensure((ratio / 10.0 - 1.0).abs() < 0.05, || format!("response ratio {ratio:.4}, expected 10 within 5%"))?;
    Ok(format!("zero response {zmax:.1e}, ε-ratio {ratio:.4}"))
}

fn squares(sides: &[Segment]) -> Result<Vec<Mesh>, String> {
    [4, 8, 16].iter().map(|&n| generate_mesh(Shape::UnitSquare, n, &SegmentPlan::sides(sides)).map_err(e2s)).collect()
}

fn compatibility() -> Result<String, String> {
    let spec = || ProblemSpec::new(Variant::ProblemI, 1.0, TimeGrid::new(1.0, 1));
    let mut detail = Vec::new();

    let start = Instant::now();
    let r = compat_study(&squares(&[Segment::G1])?, &spec(), None, None).map_err(e2s)?;
    ensure(r.verdict == Verdict::InH && r.levels.iter().all(|l| l.1 == 0.0), || format!("zero data: {} {:?}", r.verdict, r.levels))?;
    within(Duration::from_secs(60), start, "zero-data study")?;
    detail.push("zero data in_H".to_string());

    let start = Instant::now();
    let mut s = spec();
    s.data.f = Some(Arc::new(|_, _| [1.0, 0.0]));
    let r = compat_study(&squares(&[Segment::G1])?, &s, None, None).map_err(e2s)?;
    ensure(r.verdict == Verdict::InH && r.growth_exponent <= 0.1, || format!("L2 forcing: {} slope {:.3}", r.verdict, r.growth_exponent))?;
    within(Duration::from_secs(60), start, "forcing study")?;
    detail.push(format!("L2 forcing slope {:.3} in_H", r.growth_exponent));

    let start = Instant::now();
    let mut s = spec();
    s.data.set_phi(Segment::G2, Datum::Scalar(Arc::new(|_, _| 1.0)));
    let r = compat_study(&squares(&[Segment::G2, Segment::G1, Segment::G1, Segment::G1])?, &s, None, None).map_err(e2s)?;
    ensure(r.verdict == Verdict::NotInH && r.growth_exponent >= 0.4, || format!("boundary datum: {} slope {:.3}", r.verdict, r.growth_exponent))?;
    within(Duration::from_secs(60), start, "boundary-datum study")?;
    detail.push(format!("boundary datum slope {:.3} not_in_H", r.growth_exponent));
    Ok(detail.join(", "))
}

fn mixflow(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mixflow")).args(args).current_dir(cwd).output().expect("spawn mixflow")
}

const CAVITY: &str = r#"
[mesh]
generate = "square"
resolution = 4

[problem]
variant = "I"
nu = 1.0

[data]
h1 = ["PROFILE", "0"]

[time]
t_end = 0.2
steps = 2
"#;

fn flux_compatibility() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let imbalanced = dir.path().join("imbalanced.toml");
    std::fs::write(&imbalanced, CAVITY.replace("PROFILE", "y*(1-y)*(1-x)")).map_err(e2s)?;
    let o = mixflow(&["solve", "imbalanced.toml", "--out", "a"], dir.path());
    let code = o.status.code();
    ensure(code == Some(exit::FLUX_INCOMPATIBLE), || format!("imbalanced cavity exit {code:?}: {}", String::from_utf8_lossy(&o.stderr)))?;

    let balanced = dir.path().join("balanced.toml");
    std::fs::write(&balanced, CAVITY.replace("PROFILE", "y*(1-y)")).map_err(e2s)?;
    let o = mixflow(&["solve", "balanced.toml", "--out", "b"], dir.path());
    ensure(o.status.success(), || format!("balanced cavity failed: {}", String::from_utf8_lossy(&o.stderr)))?;
    let stdout = String::from_utf8_lossy(&o.stdout);
    let inflow: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("solve.inlet_inflow = "))
        .ok_or("no inflow reported")?
        .parse()
        .map_err(e2s)?;
    let err = (inflow - 1.0 / 6.0).abs();
    ensure(err <= 1e-10, || format!("inflow {inflow:.15e} differs from 1/6 by {err:.2e}"))?;
    Ok(format!("imbalanced exit {}, inflow error {err:.1e}", exit::FLUX_INCOMPATIBLE))
}

fn reproducibility() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let cfg = CAVITY.replace("PROFILE", "y*(1-y)") + "[output]\nsnapshots = \"all\"\n";
    std::fs::write(dir.path().join("run.toml"), cfg.replace("[data]", "[data]\nf = [\"sin(pi*y)\", \"x*t\"]")).map_err(e2s)?;
    let mut csvs = Vec::new();
    for out in ["r1", "r2"] {
        let o = mixflow(&["solve", "run.toml", "--out", out], dir.path());
        ensure(o.status.success(), || format!("solve failed: {}", String::from_utf8_lossy(&o.stderr)))?;
        csvs.push(std::fs::read(dir.path().join(out).join("norms.csv")).map_err(e2s)?);
    }
    ensure(csvs[0] == csvs[1], || "norm CSVs differ".to_string())?;
    let snap = |d: &str| std::fs::read(dir.path().join(d).join("snapshots/field_00002.txt"));
    ensure(snap("r1").map_err(e2s)? == snap("r2").map_err(e2s)?, || "snapshots differ".to_string())?;
    Ok(format!("norms.csv identical ({} bytes)", csvs[0].len()))
}
