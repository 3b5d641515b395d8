//! Problem parameters and space–time data.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Segment};
use crate::math::{abs, Vec2};
use crate::spaces::Variant;

/// Scalar datum `g(x, t)`.
pub type ScalarFn = Arc<dyn Fn(Vec2, f64) -> f64 + Send + Sync>;
/// Vector datum `g(x, t)`.
pub type VectorFn = Arc<dyn Fn(Vec2, f64) -> Vec2 + Send + Sync>;
/// Friction matrix `α(x)`, row-major.
pub type MatrixFn = Arc<dyn Fn(Vec2) -> [[f64; 2]; 2] + Send + Sync>;

#[derive(Clone)]
pub enum Datum {
    Scalar(ScalarFn),
    Vector(VectorFn),
}

impl core::fmt::Debug for Datum {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Datum::Scalar(_) => f.write_str("Scalar(..)"),
            Datum::Vector(_) => f.write_str("Vector(..)"),
        }
    }
}

pub fn scalar(g: impl Fn(Vec2, f64) -> f64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(g)
}

pub fn vector(g: impl Fn(Vec2, f64) -> Vec2 + Send + Sync + 'static) -> VectorFn {
    Arc::new(g)
}

pub fn constant_matrix(a: [[f64; 2]; 2]) -> MatrixFn {
    Arc::new(move |_| a)
}

/// Whether the natural datum on `s` pairs with `u·n` (scalar) or with `u` (vector).
pub fn datum_is_scalar(variant: Variant, s: Segment) -> Option<bool> {
    match (variant, s.get()) {
        (_, 2) | (_, 4) => Some(true),
        (Variant::ProblemI, 7) => Some(true),
        (_, 3) | (_, 5) | (_, 6) | (_, 7) => Some(false),
        _ => None,
    }
}

#[derive(Clone, Default)]
pub struct ProblemData {
    pub f: Option<VectorFn>,
    /// Natural datum per segment, indexed by label − 1.
    pub phi: [Option<Datum>; 7],
    pub h1: Option<VectorFn>,
    pub h4: Option<ScalarFn>,
    pub h5: Option<ScalarFn>,
    pub v0: Option<VectorFn>,
}

impl core::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let present: Vec<u8> = (0..7).filter(|&i| self.phi[i].is_some()).map(|i| i as u8 + 1).collect();
        f.debug_struct("ProblemData")
            .field("f", &self.f.is_some())
            .field("phi", &present)
            .field("h1", &self.h1.is_some())
            .field("h4", &self.h4.is_some())
            .field("h5", &self.h5.is_some())
            .field("v0", &self.v0.is_some())
            .finish()
    }
}

impl ProblemData {
    pub fn phi(&self, s: Segment) -> Option<&Datum> {
        self.phi[s.idx()].as_ref()
    }

    pub fn set_phi(&mut self, s: Segment, d: Datum) {
        self.phi[s.idx()] = Some(d);
    }

    pub fn h1_at(&self, p: Vec2, t: f64) -> Vec2 {
        self.h1.as_ref().map_or([0.0, 0.0], |g| g(p, t))
    }

    pub fn h4_at(&self, p: Vec2, t: f64) -> f64 {
        self.h4.as_ref().map_or(0.0, |g| g(p, t))
    }

    pub fn h5_at(&self, p: Vec2, t: f64) -> f64 {
        self.h5.as_ref().map_or(0.0, |g| g(p, t))
    }

    pub fn has_traces(&self) -> bool {
        self.h1.is_some() || self.h4.is_some() || self.h5.is_some()
    }

    /// The same data with every component multiplied by `s`.
    pub fn scaled(&self, s: f64) -> ProblemData {
        let sv = |g: &VectorFn| -> VectorFn {
            let g = g.clone();
            Arc::new(move |p, t| {
                let v = g(p, t);
                [s * v[0], s * v[1]]
            })
        };
        let ss = |g: &ScalarFn| -> ScalarFn {
            let g = g.clone();
            Arc::new(move |p, t| s * g(p, t))
        };
        let mut phi: [Option<Datum>; 7] = Default::default();
        for (k, d) in self.phi.iter().enumerate() {
            phi[k] = d.as_ref().map(|d| match d {
                Datum::Scalar(g) => Datum::Scalar(ss(g)),
                Datum::Vector(g) => Datum::Vector(sv(g)),
            });
        }
        ProblemData {
            f: self.f.as_ref().map(sv),
            phi,
            h1: self.h1.as_ref().map(sv),
            h4: self.h4.as_ref().map(ss),
            h5: self.h5.as_ref().map(ss),
            v0: self.v0.as_ref().map(sv),
        }
    }
}

/// Uniform grid `t_k = k Δt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Self {
        Self { t_end, steps }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_end * k as f64 / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub variant: Variant,
    pub nu: f64,
    /// Friction on Γ5; `None` means `α = 0`.
    pub alpha: Option<MatrixFn>,
    pub data: ProblemData,
    pub time: TimeGrid,
}

impl core::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("variant", &self.variant)
            .field("nu", &self.nu)
            .field("alpha", &self.alpha.is_some())
            .field("data", &self.data)
            .field("time", &self.time)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(variant: Variant, nu: f64, time: TimeGrid) -> Self {
        Self { variant, nu, alpha: None, data: ProblemData::default(), time }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidData(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.time.t_end >= 0.0) || self.time.steps == 0 || !(self.time.dt() > 0.0) {
            return Err(Error::InvalidData("time grid needs T > 0 and at least one step".into()));
        }
        if self.variant == Variant::ProblemII && mesh.has_segment(Segment::G6) {
            return Err(Error::InvalidData("Γ6 must be empty for Problem II".into()));
        }
        for s in Segment::ALL {
            if let Some(d) = self.data.phi(s) {
                if !mesh.has_segment(s) {
                    return Err(Error::AbsentSegment(s));
                }
                match (datum_is_scalar(self.variant, s), d) {
                    (None, _) => return Err(Error::InvalidData(format!("segment {s} carries no natural datum"))),
                    (Some(true), Datum::Vector(_)) => return Err(Error::InvalidData(format!("datum on {s} must be scalar"))),
                    (Some(false), Datum::Scalar(_)) => return Err(Error::InvalidData(format!("datum on {s} must be a vector"))),
                    _ => {}
                }
            }
        }
        let traces = [(self.data.h1.is_some(), Segment::G1), (self.data.h4.is_some(), Segment::G4), (self.data.h5.is_some(), Segment::G5)];
        for (given, s) in traces {
            if given && !mesh.has_segment(s) {
                return Err(Error::AbsentSegment(s));
            }
        }
        if self.alpha.is_some() && !mesh.has_segment(Segment::G5) {
            return Err(Error::AbsentSegment(Segment::G5));
        }
        Ok(())
    }

    /// Largest `|α₁₂ − α₂₁|` over the Γ5 vertices (zero when α is symmetric).
    pub fn alpha_asymmetry(&self, mesh: &Mesh) -> f64 {
        let Some(a) = &self.alpha else { return 0.0 };
        mesh.boundary
            .iter()
            .filter(|e| e.label == Segment::G5)
            .flat_map(|e| e.nodes)
            .map(|v| {
                let m = a(mesh.nodes[v]);
                abs(m[0][1] - m[1][0])
            })
            .fold(0.0, f64::max)
    }
}
