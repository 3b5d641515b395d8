use std::sync::Arc;

use mixflow_core::discretization::Discretization;
use mixflow_core::evolution::*;
use mixflow_core::forms::velocity_errors;
use mixflow_core::geometry::*;
use mixflow_core::lifting::LiftingField;
use mixflow_core::manufactured::ChannelSolution;
use mixflow_core::math::max_abs;
use mixflow_core::*;

fn cavity(variant: Variant, steps: usize) -> (Discretization, ProblemSpec) {
    let mesh = generate_mesh(Shape::UnitSquare, 4, &SegmentPlan::sides(&[Segment::G1, Segment::G7, Segment::G1, Segment::G1])).unwrap();
    let spec = ProblemSpec::new(variant, 1.0, TimeGrid::new(0.5, steps));
    (Discretization::new(mesh, &spec).unwrap(), spec)
}

#[test]
fn zero_data_stays_zero() {
    for variant in [Variant::ProblemI, Variant::ProblemII] {
        let (d, spec) = cavity(variant, 3);
        let out = run(&d, &spec, &SolveConfig::default()).unwrap();
        for (z, r) in out.trajectory.rescaled.iter().zip(&out.trajectory.records) {
            assert!(z.iter().all(|&v| v == 0.0));
            assert_eq!(r.l2_velocity, 0.0);
        }
    }
}

#[test]
fn manufactured_solution_converges() {
    for variant in [Variant::ProblemI, Variant::ProblemII] {
        let sol = ChannelSolution::new(variant, 1.0, 1.0);
        let errs: Vec<(f64, f64)> = [4usize, 8]
            .iter()
            .map(|&n| {
                let spec = sol.spec(TimeGrid::new(0.125, n * n / 16));
                let d = Discretization::new(sol.mesh(n).unwrap(), &spec).unwrap();
                let out = run(&d, &spec, &SolveConfig::default()).unwrap();
                let v = &out.trajectory.physical.last().unwrap().velocity;
                velocity_errors(&d.sys, v, &|p| (sol.velocity(p, 0.125), sol.gradient(p, 0.125)))
            })
            .collect();
        let l2 = (errs[0].0 / errs[1].0).log2();
        let h1 = (errs[0].1 / errs[1].1).log2();
        assert!(l2 >= 1.9 && h1 >= 0.9, "{variant:?}: {errs:?}");
    }
}

#[test]
fn converged_steps_satisfy_the_fixed_point() {
    let sol = ChannelSolution::new(Variant::ProblemII, 1.0, 1.0);
    let spec = sol.spec(TimeGrid::new(0.25, 2));
    let d = Discretization::new(sol.mesh(4).unwrap(), &spec).unwrap();
    let cfg = SolveConfig::default();
    let out = run(&d, &spec, &cfg).unwrap();
    for r in &out.trajectory.records[1..] {
        assert!(r.residual <= cfg.picard_tol);
        assert!(r.picard_iters >= 1);
        assert!(r.skew_defect.is_finite());
    }
}

#[test]
fn crank_nicolson_is_accurate_on_linear_in_time_solution() {
    let sol = ChannelSolution::new(Variant::ProblemI, 1.0, 0.5);
    let spec = sol.spec(TimeGrid::new(0.25, 4));
    let d = Discretization::new(sol.mesh(4).unwrap(), &spec).unwrap();
    let cfg = SolveConfig { scheme: Scheme::CrankNicolson, ..Default::default() };
    let out = run(&d, &spec, &cfg).unwrap();
    let v = &out.trajectory.physical.last().unwrap().velocity;
    let (l2, _) = velocity_errors(&d.sys, v, &|p| (sol.velocity(p, 0.25), sol.gradient(p, 0.25)));
    assert!(l2 < 1e-2, "{l2}");
}

#[test]
fn shifted_and_unshifted_runs_agree_to_first_order() {
    let sol = ChannelSolution::new(Variant::ProblemI, 1.0, 1.0);
    let gaps: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&steps| {
            let spec = sol.spec(TimeGrid::new(0.5, steps));
            let d = Discretization::new(sol.mesh(4).unwrap(), &spec).unwrap();
            let a = run(&d, &spec, &SolveConfig { shift_override: Some(1.0), ..Default::default() }).unwrap();
            let b = run(&d, &spec, &SolveConfig { shift_override: Some(0.0), ..Default::default() }).unwrap();
            let va = &a.trajectory.physical.last().unwrap().velocity;
            let vb = &b.trajectory.physical.last().unwrap().velocity;
            d.sys.l2_norm(&va.iter().zip(vb).map(|(x, y)| x - y).collect::<Vec<_>>())
        })
        .collect();
    for w in gaps.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((0.8..1.3).contains(&rate), "{gaps:?}");
    }
}

#[test]
fn picard_start_does_not_change_the_solution() {
    let sol = ChannelSolution::new(Variant::ProblemII, 1.0, 0.5);
    let spec = sol.spec(TimeGrid::new(0.25, 4));
    let d = Discretization::new(sol.mesh(4).unwrap(), &spec).unwrap();
    let tol = SolveConfig::default().picard_tol;
    let a = run(&d, &spec, &SolveConfig { picard_start: PicardStart::Zero, ..Default::default() }).unwrap();
    let b = run(&d, &spec, &SolveConfig { picard_start: PicardStart::Lifting, ..Default::default() }).unwrap();
    for (x, y) in a.trajectory.rescaled.iter().zip(&b.trajectory.rescaled) {
        let diff: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
        assert!(max_abs(&diff) <= 10.0 * tol * max_abs(x).max(1.0));
    }
}

#[test]
fn large_data_reports_picard_divergence() {
    let (d, mut spec) = cavity(Variant::ProblemII, 1);
    spec.data.f = Some(Arc::new(|p, _| [1e6 * (3.0 * p[1]).sin(), 1e6 * p[0] * p[0]]));
    let cfg = SolveConfig { max_picard_iters: 30, ..Default::default() };
    match run(&d, &spec, &cfg) {
        Err(Error::PicardDivergence { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected divergence, got {:?}", other.map(|o| o.trajectory.records.last().unwrap().residual)),
    }
}

fn base(d: &Discretization, spec: &ProblemSpec) -> LiftingField {
    let out = run(d, spec, &SolveConfig::default()).unwrap();
    let v = out.trajectory.physical.iter().map(|f| f.velocity.clone()).collect();
    LiftingField::from_samples(&d.map, &spec.time.times(), v).unwrap()
}

#[test]
fn zero_perturbation_gives_zero_response() {
    let sol = ChannelSolution::new(Variant::ProblemI, 1.0, 1.0);
    let spec = sol.spec(TimeGrid::new(0.25, 2));
    let d = Discretization::new(sol.mesh(4).unwrap(), &spec).unwrap();
    let w = base(&d, &spec);
    let pert = ProblemSpec::new(Variant::ProblemI, 1.0, spec.time);
    let out = run_perturbation(&d, &w, &pert, &SolveConfig::default()).unwrap();
    for (z, v) in out.trajectory.deviation.iter().zip(&out.trajectory.physical) {
        assert!(max_abs(&z.velocity) < 1e-12);
        assert_eq!(v.velocity.len(), z.velocity.len());
    }
}

#[test]
fn perturbation_around_zero_matches_standard_mode() {
    let (d, mut spec) = cavity(Variant::ProblemI, 2);
    spec.data.f = Some(Arc::new(|p, t| [p[1] * (1.0 + t), -p[0]]));
    let std_run = run(&d, &spec, &SolveConfig { shift_override: Some(0.0), ..Default::default() }).unwrap();
    let zero = LiftingField::zero(&d.map, &spec.time.times());
    let pert = run_perturbation(&d, &zero, &spec, &SolveConfig { shift_override: Some(0.0), ..Default::default() }).unwrap();
    for (a, b) in std_run.trajectory.physical.iter().zip(&pert.trajectory.physical) {
        let diff: Vec<f64> = a.velocity.iter().zip(&b.velocity).map(|(x, y)| x - y).collect();
        assert!(max_abs(&diff) < 1e-12);
    }
}

#[test]
fn small_perturbations_respond_linearly() {
    let sol = ChannelSolution::new(Variant::ProblemII, 1.0, 1.0);
    let spec = sol.spec(TimeGrid::new(0.25, 2));
    let d = Discretization::new(sol.mesh(4).unwrap(), &spec).unwrap();
    let w = base(&d, &spec);
    let norms: Vec<f64> = [1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let mut pert = ProblemSpec::new(Variant::ProblemII, 1.0, spec.time);
            pert.data.f = Some(Arc::new(move |p, _| [eps * (1.0 + p[1]), eps * p[0]]));
            let out = run_perturbation(&d, &w, &pert, &SolveConfig::default()).unwrap();
            out.trajectory.records[1..].iter().map(|r| r.h1_velocity.powi(2) * spec.time.dt()).sum::<f64>().sqrt()
        })
        .collect();
    let ratio = norms[0] / norms[1];
    assert!((ratio / 10.0 - 1.0).abs() < 0.05, "{norms:?}");
}
