//! Compatibility functionals at `t = 0` and the refinement test for
//! membership in `H`.
//!
//! Standard mode evaluates
//! `⟨w, u⟩ = d(0)(u) − [P v₀ + C₁(v₀) v₀ + k M v₀](u)`;
//! perturbation mode replaces `v₀` by `z̄₀` and adds `C₁(W₀) + C₂(W₀)`.
//! Membership in `H` is judged by the growth of the discrete L₂ Riesz norm
//! under refinement.

use alloc::vec::Vec;
use core::fmt;

use crate::banded::{BandedCholesky, Ordering};
use crate::coercivity::compute_shift;
use crate::data::ProblemSpec;
use crate::discretization::Discretization;
use crate::error::Result;
use crate::geometry::Mesh;
use crate::lifting::LiftingField;
use crate::math::{fit_slope, log, sqrt, Vec2};
use crate::spaces::{DofMap, Variant};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalId {
    /// Strain form, standard mode.
    W0Bar,
    /// Gradient form, standard mode.
    W1Bar,
    /// Strain form, perturbation mode.
    W2Bar,
    /// Gradient form, perturbation mode.
    W3,
}

impl FunctionalId {
    pub fn new(variant: Variant, perturbation: bool) -> Self {
        match (variant, perturbation) {
            (Variant::ProblemI, false) => Self::W0Bar,
            (Variant::ProblemII, false) => Self::W1Bar,
            (Variant::ProblemI, true) => Self::W2Bar,
            (Variant::ProblemII, true) => Self::W3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::W0Bar => "w0bar",
            Self::W1Bar => "w1bar",
            Self::W2Bar => "w2bar",
            Self::W3 => "w3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    InH,
    NotInH,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::InH => "in_H",
            Verdict::NotInH => "not_in_H",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub variant: Variant,
    pub functional: FunctionalId,
    /// `(h, Riesz norm)` per level, coarse to fine.
    pub levels: Vec<(f64, f64)>,
    pub growth_exponent: f64,
    pub verdict: Verdict,
    pub finest_norm: f64,
}

/// Pairings `⟨w, u⟩` for every velocity dof. `base` is `W(0)` in
/// perturbation mode, where `spec.data.v0` is the initial perturbation.
pub fn assemble_compat_functional(disc: &Discretization, spec: &ProblemSpec, shift_k: f64, base: Option<&[f64]>) -> Result<Vec<f64>> {
    let sys = &disc.sys;
    let z = disc.initial_velocity(spec);
    let mut w = sys.data_functional(&disc.mesh, &disc.frames, &disc.map, &spec.data, 0.0)?;
    let mut terms: Vec<(f64, &CsrMatrix)> = Vec::from([(1.0, &sys.principal), (shift_k, &sys.mass)]);
    let conv;
    if let Some(b) = base {
        conv = sys.convection(b);
        terms.push((1.0, &conv.0));
        terms.push((1.0, &conv.1));
    }
    let lin = CsrMatrix::combination(&terms).mul_vec(&z);
    let quad = sys.convection_transport(&z).mul_vec(&z);
    for i in 0..w.len() {
        w[i] -= lin[i] + quad[i];
    }
    Ok(w)
}

/// Operator form `F(0) − (A + A_U(0) + B(0)) z₀` with `z₀ = v₀ − U(0)`.
/// It differs from the standard functional by `−M U′(0) + k M U(0)`.
pub fn operator_form_functional(disc: &Discretization, spec: &ProblemSpec, shift_k: f64, lifting: &LiftingField) -> Result<Vec<f64>> {
    let sys = &disc.sys;
    let u = lifting.velocity(0);
    let v0 = disc.initial_velocity(spec);
    let z0: Vec<f64> = v0.iter().zip(u).map(|(a, b)| a - b).collect();
    let (c1, c2) = sys.convection(u);
    let d = sys.data_functional(&disc.mesh, &disc.frames, &disc.map, &spec.data, 0.0)?;
    let mu = sys.mass.mul_vec(&lifting.derivatives[0]);
    let pu = sys.principal.mul_vec(u);
    let cu = c1.mul_vec(u);
    let lin = CsrMatrix::combination(&[(1.0, &sys.principal), (shift_k, &sys.mass), (1.0, &c1), (1.0, &c2)]).mul_vec(&z0);
    let quad = sys.convection_transport(&z0).mul_vec(&z0);
    Ok((0..d.len()).map(|i| d[i] - mu[i] - pu[i] - cu[i] - lin[i] - quad[i]).collect())
}

/// `√(bᵀ M⁻¹ b)` on the constrained space.
pub fn riesz_l2_norm(functional: &[f64], map: &DofMap, mass: &CsrMatrix) -> Result<f64> {
    let b = map.restrict(functional);
    if b.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let m = map.reduce(mass);
    let ch = BandedCholesky::factor(&m, &Ordering::rcm(&m))?;
    let r = ch.solve(&b);
    Ok(sqrt(b.iter().zip(&r).map(|(x, y)| x * y).sum::<f64>().max(0.0)))
}

/// Growth exponent and verdict from `(h, norm)` pairs.
pub fn verdict(levels: &[(f64, f64)]) -> (f64, Verdict) {
    if levels.iter().all(|l| l.1 == 0.0) {
        return (0.0, Verdict::InH);
    }
    if levels.len() < 2 || levels.iter().any(|l| l.1 <= 0.0) {
        return (f64::NAN, Verdict::Inconclusive);
    }
    let xs: Vec<f64> = levels.iter().map(|l| -log(l.0)).collect();
    let ys: Vec<f64> = levels.iter().map(|l| log(l.1)).collect();
    let s = fit_slope(&xs, &ys);
    let v = if s <= 0.1 && levels.len() >= 3 {
        Verdict::InH
    } else if s >= 0.4 {
        Verdict::NotInH
    } else {
        Verdict::Inconclusive
    };
    (s, v)
}

/// Refinement study over `meshes` (coarse to fine). `base` is the base
/// solution at `t = 0` in perturbation mode; the shift is computed per level
/// unless given.
pub fn compat_study(meshes: &[Mesh], spec: &ProblemSpec, shift_k: Option<f64>, base: Option<&dyn Fn(Vec2) -> Vec2>) -> Result<CompatibilityReport> {
    let mut levels = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        let disc = Discretization::new(mesh.clone(), spec)?;
        let w0 = base.map(|b| disc.map.interpolate(b));
        let needs_shift = spec.data.v0.is_some();
        let k = match (shift_k, needs_shift) {
            (Some(k), _) => k,
            (None, false) => 0.0,
            (None, true) => compute_shift(&disc.sys, &disc.map, w0.as_deref())?.shift_k,
        };
        let w = assemble_compat_functional(&disc, spec, k, w0.as_deref())?;
        levels.push((mesh.h(), riesz_l2_norm(&w, &disc.map, &disc.sys.mass)?));
    }
    let (growth_exponent, verdict) = verdict(&levels);
    Ok(CompatibilityReport {
        variant: spec.variant,
        functional: FunctionalId::new(spec.variant, base.is_some()),
        finest_norm: levels.last().map_or(0.0, |l| l.1),
        levels,
        growth_exponent,
        verdict,
    })
}
