//! Divergence-free extension `U(t)` of the essential boundary data.
//!
//! Each time sample solves a Stokes problem with the H¹ form on the
//! constrained space, `U = T r + g` with `g` the prescribed traces.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::ProblemSpec;
use crate::error::{Error, Result};
use crate::forms::{edge_points, DiscreteSystem};
use crate::geometry::{Frames, Mesh, Segment};
use crate::math::{abs, dot};
use crate::saddle::Saddle;
use crate::spaces::{DofMap, Field};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    pub t: f64,
    /// `∫_{Γ1} h₁·n ds`
    pub gamma1_flux: f64,
    /// `∫_{Γ1} max(0, −h₁·n) ds`
    pub inflow: f64,
    /// Net discrete flux of the prescribed traces through the whole boundary.
    pub net_flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftingField {
    pub times: Vec<f64>,
    pub samples: Vec<Field>,
    /// `U′(tₖ)` by second-order differences.
    pub derivatives: Vec<Vec<f64>>,
    pub flux: Vec<FluxReport>,
}

impl LiftingField {
    pub fn zero(map: &DofMap, times: &[f64]) -> Self {
        let n = times.len();
        Self {
            times: times.to_vec(),
            samples: vec![Field::zeros(map); n],
            derivatives: vec![vec![0.0; map.n_velocity()]; n],
            flux: times.iter().map(|&t| FluxReport { t, gamma1_flux: 0.0, inflow: 0.0, net_flux: 0.0 }).collect(),
        }
    }

    /// Wraps given velocity samples (a base solution `W`) on a uniform grid.
    pub fn from_samples(map: &DofMap, times: &[f64], velocities: Vec<Vec<f64>>) -> Result<Self> {
        if velocities.len() != times.len() {
            return Err(Error::Dimension { expected: times.len(), got: velocities.len() });
        }
        if let Some(v) = velocities.iter().find(|v| v.len() != map.n_velocity()) {
            return Err(Error::Dimension { expected: map.n_velocity(), got: v.len() });
        }
        let derivatives = differentiate(times, &velocities);
        let samples = velocities.into_iter().map(|v| Field { velocity: v, pressure: vec![0.0; map.n_pressure()] }).collect();
        Ok(Self {
            times: times.to_vec(),
            samples,
            derivatives,
            flux: times.iter().map(|&t| FluxReport { t, gamma1_flux: 0.0, inflow: 0.0, net_flux: 0.0 }).collect(),
        })
    }

    pub fn velocity(&self, k: usize) -> &[f64] {
        &self.samples[k].velocity
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|s| s.velocity.iter().all(|&v| v == 0.0))
    }
}

/// Second-order differences in time; one-sided at the ends, forward with a single step.
pub fn differentiate(times: &[f64], u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = u.len();
    if n < 2 {
        return u.iter().map(|v| vec![0.0; v.len()]).collect();
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let comb = |c: &[(f64, usize)]| -> Vec<f64> {
        let mut out = vec![0.0; u[0].len()];
        for &(w, k) in c {
            out.iter_mut().zip(&u[k]).for_each(|(o, v)| *o += w * v / dt);
        }
        out
    };
    if n == 2 {
        let d = comb(&[(-1.0, 0), (1.0, 1)]);
        return vec![d.clone(), d];
    }
    (0..n)
        .map(|k| {
            if k == 0 {
                comb(&[(-1.5, 0), (2.0, 1), (-0.5, 2)])
            } else if k == n - 1 {
                comb(&[(1.5, n - 1), (-2.0, n - 2), (0.5, n - 3)])
            } else {
                comb(&[(-0.5, k - 1), (0.5, k + 1)])
            }
        })
        .collect()
}

fn flux_report(mesh: &Mesh, frames: &Frames, spec: &ProblemSpec, t: f64, net_flux: f64) -> FluxReport {
    let mut gamma1_flux = 0.0;
    let mut inflow = 0.0;
    for (e, edge) in mesh.boundary.iter().enumerate() {
        if edge.label != Segment::G1 {
            continue;
        }
        for (_, p, f, w) in edge_points(mesh, frames, e, 3) {
            let q = dot(spec.data.h1_at(p, t), f.normal);
            gamma1_flux += w * q;
            inflow += w * (-q).max(0.0);
        }
    }
    FluxReport { t, gamma1_flux, inflow, net_flux }
}

/// `∫ |h₁·n|` over Γ1 plus `∫ |h₅|` over Γ5, the scale of the flux test.
fn flux_scale(mesh: &Mesh, frames: &Frames, spec: &ProblemSpec, t: f64) -> f64 {
    let mut s = 0.0;
    for (e, edge) in mesh.boundary.iter().enumerate() {
        let g: &dyn Fn(crate::math::Vec2, &crate::geometry::Frame) -> f64 = match edge.label.get() {
            1 => &|p, f| abs(dot(spec.data.h1_at(p, t), f.normal)),
            5 => &|p, _| abs(spec.data.h5_at(p, t)),
            _ => continue,
        };
        for (_, p, f, w) in edge_points(mesh, frames, e, 3) {
            s += w * g(p, &f);
        }
    }
    s
}

/// Builds `U(tₖ)` on the time grid of `spec`.
pub fn build_lifting(spec: &ProblemSpec, mesh: &Mesh, frames: &Frames, map: &DofMap, sys: &DiscreteSystem) -> Result<LiftingField> {
    let times = spec.time.times();
    if !spec.data.has_traces() {
        return Ok(LiftingField::zero(map, &times));
    }
    let saddle = Saddle::new(sys, map);
    let gram = sys.h1_gram();
    let factor = saddle.factor(&map.reduce(&gram))?;
    let mut samples = Vec::with_capacity(times.len());
    let mut flux = Vec::with_capacity(times.len());
    for &t in &times {
        let d = &spec.data;
        let g = map.prescribed(&|p| d.h1_at(p, t), &|p| d.h4_at(p, t), &|p| d.h5_at(p, t))?;
        let bg = sys.div.mul_vec(&g);
        let net = -bg.iter().sum::<f64>();
        if map.pressure_pin.is_some() && abs(net) > 1e-9 * (1.0 + flux_scale(mesh, frames, spec, t)) {
            return Err(Error::FluxIncompatible { t, flux: net });
        }
        let f: Vec<f64> = map.restrict(&gram.mul_vec(&g)).into_iter().map(|v| -v).collect();
        let rhs_p: Vec<f64> = bg.iter().map(|v| -v).collect();
        let (r, p) = factor.solve(&f, &rhs_p);
        samples.push(Field { velocity: map.expand(&r, Some(&g)), pressure: p });
        flux.push(flux_report(mesh, frames, spec, t, net));
    }
    let vel: Vec<Vec<f64>> = samples.iter().map(|s| s.velocity.clone()).collect();
    let derivatives = differentiate(&times, &vel);
    Ok(LiftingField { times, samples, derivatives, flux })
}

/// Whether `v₀ − U(0)` satisfies the homogeneous essential constraints
/// (to 10⁻⁸), with the violation norm.
pub fn check_initial_compatibility(lifting: &LiftingField, v0: &[f64], map: &DofMap) -> (bool, f64) {
    let norm = map.constraint_violation(v0, Some(lifting.velocity(0)));
    (norm <= 1e-8, norm)
}
