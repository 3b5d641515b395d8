//! Mesh, frames, dof map and assembled operators of one problem.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::ProblemSpec;
use crate::error::Result;
use crate::forms::DiscreteSystem;
use crate::geometry::{build_frames, Frames, Mesh};
use crate::spaces::DofMap;

#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub frames: Frames,
    pub map: DofMap,
    pub sys: DiscreteSystem,
}

impl Discretization {
    /// Validates `spec` against `mesh` and assembles.
    pub fn new(mesh: Mesh, spec: &ProblemSpec) -> Result<Self> {
        spec.validate(&mesh)?;
        let frames = build_frames(&mesh)?;
        let map = DofMap::build(&mesh, &frames, spec.variant)?;
        let sys = DiscreteSystem::assemble(&mesh, &frames, &map, spec.nu, spec.alpha.as_ref())?;
        Ok(Self { mesh, frames, map, sys })
    }

    /// Nodal interpolant of `v₀` (zero when absent).
    pub fn initial_velocity(&self, spec: &ProblemSpec) -> Vec<f64> {
        match &spec.data.v0 {
            Some(v0) => self.map.interpolate(&|p| v0(p, 0.0)),
            None => vec![0.0; self.map.n_velocity()],
        }
    }

    /// Orthogonal projection onto the constrained space, `T Tᵀ u`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        self.map.expand(&self.map.restrict(u), None)
    }
}
