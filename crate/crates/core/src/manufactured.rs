//! Closed-form solution on the unit channel for convergence studies.
//!
//! `v = (1 + t) A (cos πx cos πy, sin πx sin πy)`, `p = (1 + t) cos πx cos πy`
//! on `[0,1]²` with Γ1 on inlet and walls and Γ7 on the outlet `x = 1`,
//! where `v·τ = 0`. The forcing and the outlet datum are derived for the
//! chosen variant and viscosity.

use alloc::sync::Arc;

use crate::data::{Datum, ProblemData, ProblemSpec, TimeGrid};
use crate::error::Result;
use crate::geometry::{generate_mesh, Mesh, Segment, SegmentPlan, Shape};
use crate::math::{cos, sin, Vec2, PI};
use crate::spaces::Variant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSolution {
    pub variant: Variant,
    pub nu: f64,
    pub amplitude: f64,
}

impl ChannelSolution {
    pub fn new(variant: Variant, nu: f64, amplitude: f64) -> Self {
        Self { variant, nu, amplitude }
    }

    fn g(t: f64) -> f64 {
        1.0 + t
    }

    pub fn velocity(&self, p: Vec2, t: f64) -> Vec2 {
        let (x, y) = (PI * p[0], PI * p[1]);
        let s = Self::g(t) * self.amplitude;
        [s * cos(x) * cos(y), s * sin(x) * sin(y)]
    }

    /// `grad[i][j] = ∂ⱼ vᵢ`
    pub fn gradient(&self, p: Vec2, t: f64) -> [[f64; 2]; 2] {
        let (x, y) = (PI * p[0], PI * p[1]);
        let s = Self::g(t) * self.amplitude * PI;
        [[-s * sin(x) * cos(y), -s * cos(x) * sin(y)], [s * cos(x) * sin(y), s * sin(x) * cos(y)]]
    }

    pub fn pressure(&self, p: Vec2, t: f64) -> f64 {
        Self::g(t) * cos(PI * p[0]) * cos(PI * p[1])
    }

    /// `v_t − νΔv + (v·∇)v + ∇p`
    pub fn forcing(&self, p: Vec2, t: f64) -> Vec2 {
        let v = self.velocity(p, t);
        let g = self.gradient(p, t);
        let vt = [v[0] / Self::g(t), v[1] / Self::g(t)];
        let (x, y) = (PI * p[0], PI * p[1]);
        let gp = [-PI * Self::g(t) * sin(x) * cos(y), -PI * Self::g(t) * cos(x) * sin(y)];
        let lap = -2.0 * PI * PI;
        let mut f = [0.0; 2];
        for i in 0..2 {
            f[i] = vt[i] - self.nu * lap * v[i] + v[0] * g[i][0] + v[1] * g[i][1] + gp[i];
        }
        f
    }

    /// Outlet datum: `−p + ν ∂ₙv·n` (strain form) or `−p n + ν ∂ₙv` (gradient form).
    pub fn outlet(&self, p: Vec2, t: f64) -> Vec2 {
        let g = self.gradient(p, t);
        let q = self.pressure(p, t);
        [-q + self.nu * g[0][0], self.nu * g[1][0]]
    }

    pub fn mesh(&self, resolution: usize) -> Result<Mesh> {
        let plan = SegmentPlan::sides(&[Segment::G1, Segment::G7, Segment::G1, Segment::G1]);
        generate_mesh(Shape::Channel { length: 1.0 }, resolution, &plan)
    }

    pub fn spec(&self, time: TimeGrid) -> ProblemSpec {
        let mut spec = ProblemSpec::new(self.variant, self.nu, time);
        let s = *self;
        let mut data = ProblemData {
            f: Some(Arc::new(move |p, t| s.forcing(p, t))),
            h1: Some(Arc::new(move |p, t| s.velocity(p, t))),
            v0: Some(Arc::new(move |p, _| s.velocity(p, 0.0))),
            ..Default::default()
        };
        let outlet = match self.variant {
            Variant::ProblemI => Datum::Scalar(Arc::new(move |p, t| s.outlet(p, t)[0])),
            Variant::ProblemII => Datum::Vector(Arc::new(move |p, t| s.outlet(p, t))),
        };
        data.set_phi(Segment::G7, outlet);
        spec.data = data;
        spec
    }
}
