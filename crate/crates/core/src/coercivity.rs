//! Korn constant and coercivity shift.
//!
//! With `G` the H¹ Gram matrix and `P` the principal matrix, the shift `k`
//! is chosen so that `P + kM ≥ δ G` on the constrained space, `δ = β/2`.

use alloc::vec::Vec;

use crate::banded::Ordering;
use crate::eigen::{smallest_generalized, EigenOptions, EigenPair};
use crate::error::{Error, Result};
use crate::forms::{BoundaryTerm, DiscreteSystem};
use crate::spaces::{DofMap, Variant};
use crate::sparse::CsrMatrix;

/// Added to the shift whenever one is needed at all.
pub const SHIFT_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMeta {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    pub factorizations: usize,
}

impl From<&EigenPair> for EigenMeta {
    fn from(p: &EigenPair) -> Self {
        Self { value: p.value, iterations: p.iterations, residual: p.residual, factorizations: p.factorizations }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    pub variant: Variant,
    pub korn_beta: f64,
    pub shift_k: f64,
    pub margin_delta: f64,
    pub flat_shortcut: bool,
    pub korn_eig: EigenMeta,
    /// Smallest eigenvalue of `(P − δG [+ sym C(W)], M)`; absent under the shortcut.
    pub shift_eig: Option<EigenMeta>,
}

/// Reduced matrices shared by the eigen problems of one system.
pub struct Pencils {
    pub gram: CsrMatrix,
    pub mass: CsrMatrix,
    pub ordering: Ordering,
}

impl Pencils {
    pub fn new(sys: &DiscreteSystem, map: &DofMap) -> Self {
        let gram = map.reduce(&sys.h1_gram());
        let ordering = Ordering::rcm(&gram);
        Self { gram, mass: map.reduce(&sys.mass), ordering }
    }
}

/// `β = λ_min(volume form, G)`; fails with [`Error::RigidMode`] when the
/// constraints leave a rigid motion in the kernel.
pub fn estimate_korn(sys: &DiscreteSystem, map: &DofMap) -> Result<EigenPair> {
    let pen = Pencils::new(sys, map);
    korn_with(sys, map, &pen)
}

fn korn_with(sys: &DiscreteSystem, map: &DofMap, pen: &Pencils) -> Result<EigenPair> {
    let a = map.reduce(&sys.volume_form());
    let pair = smallest_generalized(&a, &pen.gram, &pen.ordering, EigenOptions::default())?;
    if pair.value < 1e-8 * sys.nu {
        return Err(Error::RigidMode(pair.value));
    }
    Ok(pair)
}

/// True when every boundary term of the principal form vanishes identically
/// (flat Γ2, Γ3, Γ7 and, for the gradient form, flat Γ5) and there is no friction.
pub fn is_flat(sys: &DiscreteSystem) -> bool {
    sys.boundary.iter().all(|p| match p.term {
        BoundaryTerm::Friction => false,
        BoundaryTerm::Curvature | BoundaryTerm::Shape => p.matrix.max_abs() <= 1e-12,
    })
}

/// Symmetric part of `C₁(w) + C₂(w)`.
pub fn convection_pencil(sys: &DiscreteSystem, w: &[f64]) -> CsrMatrix {
    let (c1, c2) = sys.convection(w);
    CsrMatrix::combination(&[(1.0, &c1), (1.0, &c2)]).symmetric_part()
}

/// Computes `β`, `δ = β/2` and the smallest admissible shift. `base` is the
/// base field `W(0)` in perturbation mode.
pub fn compute_shift(sys: &DiscreteSystem, map: &DofMap, base: Option<&[f64]>) -> Result<CoercivityReport> {
    let pen = Pencils::new(sys, map);
    let korn = korn_with(sys, map, &pen)?;
    let beta = korn.value;
    let delta = 0.5 * beta;
    let flat = base.is_none() && is_flat(sys);
    let mut report = CoercivityReport {
        variant: sys.variant,
        korn_beta: beta,
        shift_k: 0.0,
        margin_delta: delta,
        flat_shortcut: flat,
        korn_eig: EigenMeta::from(&korn),
        shift_eig: None,
    };
    if flat {
        return Ok(report);
    }
    let mut terms: Vec<(f64, &CsrMatrix)> = Vec::new();
    terms.push((1.0, &sys.principal));
    let conv;
    if let Some(w) = base {
        conv = convection_pencil(sys, w);
        terms.push((1.0, &conv));
    }
    let s = map.reduce(&CsrMatrix::combination(&terms));
    let s = CsrMatrix::combination(&[(1.0, &s), (-delta, &pen.gram)]);
    let pair = smallest_generalized(&s, &pen.mass, &pen.ordering, EigenOptions::default())?;
    if pair.value < 0.0 {
        report.shift_k = -pair.value + SHIFT_MARGIN;
    }
    report.shift_eig = Some(EigenMeta::from(&pair));
    Ok(report)
}

/// `λ_min(P + kM [+ sym C(W)], G)` on the constrained space.
pub fn min_coercivity_ratio(sys: &DiscreteSystem, map: &DofMap, shift_k: f64, base: Option<&[f64]>) -> Result<f64> {
    let pen = Pencils::new(sys, map);
    let conv = base.map(|w| convection_pencil(sys, w));
    let mut terms: Vec<(f64, &CsrMatrix)> = Vec::from([(1.0, &sys.principal), (shift_k, &sys.mass)]);
    if let Some(c) = &conv {
        terms.push((1.0, c));
    }
    let a = map.reduce(&CsrMatrix::combination(&terms));
    Ok(smallest_generalized(&a, &pen.gram, &pen.ordering, EigenOptions::default())?.value)
}
