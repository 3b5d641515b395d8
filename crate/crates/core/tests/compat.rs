use std::sync::{Arc, LazyLock};

use mixflow_core::compat::*;
use mixflow_core::discretization::Discretization;
use mixflow_core::geometry::*;
use mixflow_core::lifting::build_lifting;
use mixflow_core::math::max_abs;
use mixflow_core::*;
use proptest::prelude::*;

fn squares(sides: &[Segment]) -> Vec<Mesh> {
    [4, 8, 16].iter().map(|&n| generate_mesh(Shape::UnitSquare, n, &SegmentPlan::sides(sides)).unwrap()).collect()
}

fn spec(variant: Variant) -> ProblemSpec {
    ProblemSpec::new(variant, 1.0, TimeGrid::new(1.0, 1))
}

#[test]
fn zero_data_is_in_h_with_zero_norm() {
    for variant in [Variant::ProblemI, Variant::ProblemII] {
        let r = compat_study(&squares(&[Segment::G1]), &spec(variant), None, None).unwrap();
        assert_eq!(r.verdict, Verdict::InH);
        assert!(r.levels.iter().all(|l| l.1 == 0.0));
        assert_eq!(r.finest_norm, 0.0);
    }
}

#[test]
fn square_integrable_forcing_is_in_h() {
    let mut s = spec(Variant::ProblemI);
    s.data.f = Some(Arc::new(|_, _| [1.0, 0.0]));
    let r = compat_study(&squares(&[Segment::G1]), &s, None, None).unwrap();
    assert_eq!(r.verdict, Verdict::InH, "{r:?}");
    assert!(r.growth_exponent <= 0.1);
    assert!(r.finest_norm <= 1.0 + 1e-12);
}

#[test]
fn boundary_pressure_datum_is_not_in_h() {
    let mut s = spec(Variant::ProblemI);
    s.data.set_phi(Segment::G2, Datum::Scalar(Arc::new(|_, _| 1.0)));
    let r = compat_study(&squares(&[Segment::G2, Segment::G1, Segment::G1, Segment::G1]), &s, None, None).unwrap();
    assert_eq!(r.verdict, Verdict::NotInH, "{r:?}");
    assert!(r.growth_exponent >= 0.4);
}

#[test]
fn perturbation_functional_is_labelled() {
    let mut s = spec(Variant::ProblemII);
    s.data.f = Some(Arc::new(|_, _| [0.0, 1.0]));
    let base = |p: [f64; 2]| [p[1] * (1.0 - p[1]), 0.0];
    let r = compat_study(&squares(&[Segment::G1]), &s, Some(0.0), Some(&base)).unwrap();
    assert_eq!(r.functional, FunctionalId::W3);
    assert_eq!(r.verdict, Verdict::InH);
}

#[test]
fn operator_form_differs_by_lifting_terms() {
    let mesh = generate_mesh(Shape::Channel { length: 1.0 }, 4, &SegmentPlan::sides(&[Segment::G1, Segment::G7, Segment::G1, Segment::G1])).unwrap();
    let mut s = ProblemSpec::new(Variant::ProblemI, 1.0, TimeGrid::new(0.5, 2));
    s.data.h1 = Some(Arc::new(|p, t| [(1.0 + t) * p[1] * (1.0 - p[1]) * (1.0 - p[0]), 0.0]));
    s.data.v0 = Some(Arc::new(|p, _| [p[1] * (1.0 - p[1]) * (1.0 - p[0]) + 0.1 * (3.0 * p[0]).sin() * p[1] * (1.0 - p[1]), 0.0]));
    s.data.f = Some(Arc::new(|p, _| [p[0], 1.0]));
    let d = Discretization::new(mesh, &s).unwrap();
    let l = build_lifting(&s, &d.mesh, &d.frames, &d.map, &d.sys).unwrap();
    let k = 0.7;
    let w = assemble_compat_functional(&d, &s, k, None).unwrap();
    let op = operator_form_functional(&d, &s, k, &l).unwrap();
    let mu = d.sys.mass.mul_vec(&l.derivatives[0]);
    let mu0 = d.sys.mass.mul_vec(l.velocity(0));
    let expected: Vec<f64> = (0..w.len()).map(|i| -mu[i] + k * mu0[i]).collect();
    let diff: Vec<f64> = (0..w.len()).map(|i| op[i] - w[i] - expected[i]).collect();
    assert!(max_abs(&d.map.restrict(&diff)) < 1e-12 * (1.0 + max_abs(&w)));
}

static DISC: LazyLock<Discretization> = LazyLock::new(|| {
    let mesh = generate_mesh(Shape::Disk, 3, &SegmentPlan::sides(&[Segment::G1, Segment::G3])).unwrap();
    Discretization::new(mesh, &spec(Variant::ProblemI)).unwrap()
});

#[test]
fn zero_functional_has_zero_norm() {
    let d = &*DISC;
    assert_eq!(riesz_l2_norm(&vec![0.0; d.map.n_velocity()], &d.map, &d.sys.mass).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn riesz_norm_of_mass_image_is_the_l2_norm(seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let d = &*DISC;
        let n = d.map.n_reduced();
        let r: Vec<f64> = (0..n).map(|i| seed[i % 16] + 0.01 * i as f64).collect();
        let e = d.map.expand(&r, None);
        let b = d.sys.mass.mul_vec(&e);
        let norm = riesz_l2_norm(&b, &d.map, &d.sys.mass).unwrap();
        let expect = d.sys.l2_norm(&e);
        prop_assert!((norm - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn riesz_norm_is_absolutely_homogeneous(c in -100.0f64..100.0, seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let d = &*DISC;
        let b: Vec<f64> = (0..d.map.n_velocity()).map(|i| seed[i % 16]).collect();
        let cb: Vec<f64> = b.iter().map(|v| c * v).collect();
        let n1 = riesz_l2_norm(&b, &d.map, &d.sys.mass).unwrap();
        let n2 = riesz_l2_norm(&cb, &d.map, &d.sys.mass).unwrap();
        prop_assert!((n2 - c.abs() * n1).abs() <= 1e-10 * (1.0 + n2));
    }
}
