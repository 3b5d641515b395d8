//! Pointwise boundary identities linking strain, rotation and normal
//! derivatives of a vector field on a curved boundary.
//!
//! With `n` the outward normal, `τ = perp(n)` and `k = div n`:
//!
//! * strain/rotation: `(ε(v)n, τ) = ½ rot v − k (v·τ)` when `v·n = 0`
//! * rotation/normal derivative: `rot v = (∂v/∂n, τ) + k (v·τ)` when `v·n = 0`
//! * strain/normal derivative: `(ε(v)n, τ) = ½ (∂v/∂n, τ) − ½ k (v·τ)` when `v·n = 0`
//! * normal trace: `(ε(v)n, n) = (∂v/∂n, n) = −k (v·n)` when `v·τ = 0` and `div v = 0`
//!
//! In the plane the rotation `(rot v × n, τ)` is the scalar curl.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{AnalyticBoundary, Curve, Frame};
use crate::math::{abs, dot, Vec2};
use crate::quadrature::gauss_legendre;

/// `grad[i][j] = ∂v_i/∂x_j`.
pub type Grad = [[f64; 2]; 2];

pub trait AnalyticField {
    fn value(&self, p: Vec2) -> Vec2;
    fn grad(&self, p: Vec2) -> Grad;

    fn div(&self, p: Vec2) -> f64 {
        let g = self.grad(p);
        g[0][0] + g[1][1]
    }

    fn rot(&self, p: Vec2) -> f64 {
        let g = self.grad(p);
        g[1][0] - g[0][1]
    }
}

/// Largest deviation between the supplied gradient and central differences.
pub fn gradient_self_check(field: &dyn AnalyticField, points: &[Vec2]) -> f64 {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for &p in points {
        let g = field.grad(p);
        for j in 0..2 {
            let mut a = p;
            let mut b = p;
            a[j] += h;
            b[j] -= h;
            let (va, vb) = (field.value(a), field.value(b));
            for i in 0..2 {
                worst = worst.max(abs((va[i] - vb[i]) / (2.0 * h) - g[i][j]));
            }
        }
    }
    worst
}

pub fn strain(g: &Grad) -> Grad {
    let off = 0.5 * (g[0][1] + g[1][0]);
    [[g[0][0], off], [off, g[1][1]]]
}

fn apply(m: &Grad, n: Vec2) -> Vec2 {
    [m[0][0] * n[0] + m[0][1] * n[1], m[1][0] * n[0] + m[1][1] * n[1]]
}

/// A curve with a chosen outward side and the parameter range to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedCurve {
    pub curve: Curve,
    pub outward: f64,
    pub range: (f64, f64),
}

impl OrientedCurve {
    pub fn new(curve: Curve, outward: f64) -> Self {
        Self { curve, outward, range: curve.range() }
    }

    /// Gauss points in parameter space with their frames.
    pub fn samples(&self, count: usize) -> Result<Vec<(Vec2, Frame)>> {
        let (a, b) = self.range;
        gauss_legendre(count)
            .into_iter()
            .map(|(s, _)| {
                let s = a + (b - a) * s;
                Ok((self.curve.point(s), self.curve.frame(s, self.outward)?))
            })
            .collect()
    }
}

/// Terms of the identities at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTerms {
    pub strain_nt: f64,
    pub strain_nn: f64,
    pub dn_t: f64,
    pub dn_n: f64,
    pub rot: f64,
    pub k_vt: f64,
    pub k_vn: f64,
    pub v_n: f64,
    pub v_t: f64,
    pub div: f64,
}

pub fn point_terms(field: &dyn AnalyticField, p: Vec2, f: &Frame) -> PointTerms {
    let g = field.grad(p);
    let v = field.value(p);
    let en = apply(&strain(&g), f.normal);
    let dn = apply(&g, f.normal);
    PointTerms {
        strain_nt: dot(en, f.tangent),
        strain_nn: dot(en, f.normal),
        dn_t: dot(dn, f.tangent),
        dn_n: dot(dn, f.normal),
        rot: g[1][0] - g[0][1],
        k_vt: f.curvature * dot(v, f.tangent),
        k_vn: f.curvature * dot(v, f.normal),
        v_n: dot(v, f.normal),
        v_t: dot(v, f.tangent),
        div: g[0][0] + g[1][1],
    }
}

const HYPOTHESIS_TOL: f64 = 1e-10;

fn terms_with<F>(field: &dyn AnalyticField, curve: &OrientedCurve, samples: usize, check: F) -> Result<Vec<PointTerms>>
where
    F: Fn(&PointTerms) -> Option<(&'static str, f64)>,
{
    let pts = curve.samples(samples)?;
    let mut out = Vec::with_capacity(pts.len());
    for (k, (p, f)) in pts.iter().enumerate() {
        let t = point_terms(field, *p, f);
        if let Some((what, value)) = check(&t) {
            return Err(Error::Hypothesis { what, value, sample: k });
        }
        out.push(t);
    }
    Ok(out)
}

fn tangential_hypothesis(t: &PointTerms) -> Option<(&'static str, f64)> {
    (abs(t.v_n) > HYPOTHESIS_TOL).then_some(("v·n = 0", t.v_n))
}

fn normal_hypothesis(t: &PointTerms) -> Option<(&'static str, f64)> {
    if abs(t.v_t) > HYPOTHESIS_TOL {
        Some(("v·τ = 0", t.v_t))
    } else if abs(t.div) > HYPOTHESIS_TOL {
        Some(("div v = 0", t.div))
    } else {
        None
    }
}

fn max_of(terms: &[PointTerms], r: impl Fn(&PointTerms) -> f64) -> f64 {
    terms.iter().map(r).fold(0.0, f64::max)
}

/// `max |(ε(v)n, τ) − ½ rot v + k (v·τ)|`; requires `v·n = 0`.
pub fn residual_strain_rot(field: &dyn AnalyticField, curve: &OrientedCurve, samples: usize) -> Result<f64> {
    let t = terms_with(field, curve, samples, tangential_hypothesis)?;
    Ok(max_of(&t, strain_rot))
}

/// `max |rot v − (∂v/∂n, τ) − k (v·τ)|`; requires `v·n = 0`.
pub fn residual_rot_normal(field: &dyn AnalyticField, curve: &OrientedCurve, samples: usize) -> Result<f64> {
    let t = terms_with(field, curve, samples, tangential_hypothesis)?;
    Ok(max_of(&t, rot_normal))
}

/// `max |(ε(v)n, τ) − ½ (∂v/∂n, τ) + ½ k (v·τ)|`; requires `v·n = 0`.
pub fn residual_strain_normal(field: &dyn AnalyticField, curve: &OrientedCurve, samples: usize) -> Result<f64> {
    let t = terms_with(field, curve, samples, tangential_hypothesis)?;
    Ok(max_of(&t, strain_normal))
}

/// Max of `|(ε(v)n, n) − (∂v/∂n, n)|` and `|(∂v/∂n, n) + k (v·n)|`;
/// requires `v·τ = 0` and `div v = 0`.
pub fn residual_normal_trace(field: &dyn AnalyticField, curve: &OrientedCurve, samples: usize) -> Result<f64> {
    let t = terms_with(field, curve, samples, normal_hypothesis)?;
    Ok(max_of(&t, |t| abs(t.strain_nn - t.dn_n).max(abs(t.dn_n + t.k_vn))))
}

pub fn strain_rot(t: &PointTerms) -> f64 {
    abs(t.strain_nt - 0.5 * t.rot + t.k_vt)
}

pub fn rot_normal(t: &PointTerms) -> f64 {
    abs(t.rot - t.dn_t - t.k_vt)
}

pub fn strain_normal(t: &PointTerms) -> f64 {
    abs(t.strain_nt - 0.5 * t.dn_t + 0.5 * t.k_vt)
}

/// Rigid rotation `(−y, x)`.
#[derive(Debug, Clone, Copy)]
pub struct RigidRotation;

impl AnalyticField for RigidRotation {
    fn value(&self, p: Vec2) -> Vec2 {
        [-p[1], p[0]]
    }
    fn grad(&self, _: Vec2) -> Grad {
        [[0.0, -1.0], [1.0, 0.0]]
    }
}

/// Simple shear `(y, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct Shear;

impl AnalyticField for Shear {
    fn value(&self, p: Vec2) -> Vec2 {
        [p[1], 0.0]
    }
    fn grad(&self, _: Vec2) -> Grad {
        [[0.0, 1.0], [0.0, 0.0]]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub Vec2);

impl AnalyticField for Constant {
    fn value(&self, _: Vec2) -> Vec2 {
        self.0
    }
    fn grad(&self, _: Vec2) -> Grad {
        [[0.0; 2]; 2]
    }
}

/// Source field `c (x, y) / r²`, divergence free away from the origin.
#[derive(Debug, Clone, Copy)]
pub struct Radial(pub f64);

impl AnalyticField for Radial {
    fn value(&self, p: Vec2) -> Vec2 {
        let r2 = dot(p, p);
        [self.0 * p[0] / r2, self.0 * p[1] / r2]
    }
    fn grad(&self, p: Vec2) -> Grad {
        let r2 = dot(p, p);
        let r4 = r2 * r2;
        let c = self.0;
        [
            [c * (p[1] * p[1] - p[0] * p[0]) / r4, -2.0 * c * p[0] * p[1] / r4],
            [-2.0 * c * p[0] * p[1] / r4, c * (p[0] * p[0] - p[1] * p[1]) / r4],
        ]
    }
}

/// `ψ(x, y) · (−y, x)` with `ψ = Σ c_ab x^a y^b` (a + b ≤ 2); tangential on
/// every circle about the origin.
#[derive(Debug, Clone, Copy)]
pub struct ScaledRotation {
    /// Coefficients of `1, x, y, x², xy, y²`.
    pub coeffs: [f64; 6],
}

impl ScaledRotation {
    fn psi(&self, p: Vec2) -> (f64, f64, f64) {
        let [c0, cx, cy, cxx, cxy, cyy] = self.coeffs;
        let (x, y) = (p[0], p[1]);
        let v = c0 + cx * x + cy * y + cxx * x * x + cxy * x * y + cyy * y * y;
        let dx = cx + 2.0 * cxx * x + cxy * y;
        let dy = cy + cxy * x + 2.0 * cyy * y;
        (v, dx, dy)
    }
}

impl AnalyticField for ScaledRotation {
    fn value(&self, p: Vec2) -> Vec2 {
        let (s, _, _) = self.psi(p);
        [-s * p[1], s * p[0]]
    }
    fn grad(&self, p: Vec2) -> Grad {
        let (s, sx, sy) = self.psi(p);
        let (x, y) = (p[0], p[1]);
        [[-y * sx, -s - y * sy], [s + x * sx, x * sy]]
    }
}

/// One row of the built-in verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub identity: &'static str,
    pub field: &'static str,
    pub curve: &'static str,
    pub residual: f64,
}

pub const IDENTITY_STRAIN_ROT: &str = "strain-rotation";
pub const IDENTITY_ROT_NORMAL: &str = "rotation-normal-derivative";
pub const IDENTITY_STRAIN_NORMAL: &str = "strain-normal-derivative";
pub const IDENTITY_NORMAL_TRACE: &str = "normal-trace";

fn circle(r: f64) -> Curve {
    Curve::Circle { center: [0.0, 0.0], radius: r }
}

/// Runs every identity over the built-in (field, curve) suite.
pub fn verify_suite(samples: usize) -> Result<Vec<IdentityRow>> {
    let psi = ScaledRotation { coeffs: [1.0, 0.3, -0.7, 0.2, 0.5, -0.4] };
    let flat = OrientedCurve { curve: Curve::Line { a: [0.0, 0.0], b: [1.0, 0.0] }, outward: 1.0, range: (-2.0, 2.0) };
    let unit = OrientedCurve::new(circle(1.0), 1.0);
    let big = OrientedCurve::new(circle(2.0), 1.0);
    let hole = OrientedCurve::new(circle(0.5), -1.0);
    let tangential: [(&'static str, &dyn AnalyticField, &'static str, OrientedCurve); 8] = [
        ("rigid rotation", &RigidRotation, "unit circle", unit),
        ("rigid rotation", &RigidRotation, "circle R=2", big),
        ("rigid rotation", &RigidRotation, "annulus inner circle R=0.5", hole),
        ("psi*(-y,x)", &psi, "unit circle", unit),
        ("psi*(-y,x)", &psi, "circle R=2", big),
        ("psi*(-y,x)", &psi, "annulus inner circle R=0.5", hole),
        ("shear (y,0)", &Shear, "flat y=0", flat),
        ("constant (1,0)", &Constant([1.0, 0.0]), "flat y=0", flat),
    ];
    let normal: [(&'static str, &dyn AnalyticField, &'static str, OrientedCurve); 4] = [
        ("radial (x,y)/r^2", &Radial(1.0), "unit circle", unit),
        ("radial (x,y)/r^2", &Radial(1.0), "circle R=2", big),
        ("radial (x,y)/r^2", &Radial(1.0), "annulus inner circle R=0.5", hole),
        ("constant (0,1)", &Constant([0.0, 1.0]), "flat y=0", flat),
    ];
    let mut rows = Vec::new();
    for (fname, field, cname, curve) in tangential.iter() {
        let checks: [(&'static str, fn(&dyn AnalyticField, &OrientedCurve, usize) -> Result<f64>); 3] = [
            (IDENTITY_STRAIN_ROT, residual_strain_rot),
            (IDENTITY_ROT_NORMAL, residual_rot_normal),
            (IDENTITY_STRAIN_NORMAL, residual_strain_normal),
        ];
        for (id, f) in checks {
            rows.push(IdentityRow { identity: id, field: fname, curve: cname, residual: f(*field, curve, samples)? });
        }
    }
    for (fname, field, cname, curve) in normal.iter() {
        rows.push(IdentityRow {
            identity: IDENTITY_NORMAL_TRACE,
            field: fname,
            curve: cname,
            residual: residual_normal_trace(*field, curve, samples)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_exact() {
        for row in verify_suite(64).unwrap() {
            assert!(row.residual < 1e-10, "{row:?}");
        }
    }

    #[test]
    fn gradients_match_differences() {
        let pts = [[0.3, -0.8], [1.1, 0.4], [-0.6, 0.9]];
        let psi = ScaledRotation { coeffs: [0.5, -1.0, 2.0, 0.3, -0.2, 0.7] };
        let fields: [&dyn AnalyticField; 4] = [&RigidRotation, &Shear, &Radial(2.0), &psi];
        for f in fields {
            assert!(gradient_self_check(f, &pts) < 1e-6);
        }
    }

    #[test]
    fn normal_derivative_on_radius_two() {
        let big = OrientedCurve::new(circle(2.0), 1.0);
        let (p, f) = big.samples(3).unwrap()[1];
        let t = point_terms(&Radial(1.0), p, &f);
        assert!((t.dn_n + 0.25).abs() < 1e-14);
        assert!((t.k_vn - 0.25).abs() < 1e-14);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let unit = OrientedCurve::new(circle(1.0), 1.0);
        let e = residual_strain_rot(&Constant([1.0, 0.0]), &unit, 8).unwrap_err();
        assert!(matches!(e, Error::Hypothesis { what: "v·n = 0", .. }));
        let e = residual_normal_trace(&RigidRotation, &unit, 8).unwrap_err();
        assert!(matches!(e, Error::Hypothesis { what: "v·τ = 0", .. }));
    }
}
