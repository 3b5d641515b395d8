//! Finite-element core for the 2-D incompressible Navier–Stokes equations
//! with mixed boundary conditions.
//!
//! The boundary is split into up to seven segments `Γ1..Γ7`, each carrying one
//! kind of condition (velocity, static pressure, rotation, stress, Navier slip
//! with friction, do-nothing style outflow). Two variational formulations are
//! supported: the strain form ([`Variant::ProblemI`]) and the gradient form
//! ([`Variant::ProblemII`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the expression
//! language and the command line live in the `mixflow` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod banded;
pub mod boundary_calculus;
pub mod coercivity;
pub mod compat;
pub mod data;
pub mod discretization;
pub mod eigen;
pub mod error;
pub mod evolution;
pub mod forms;
pub mod geometry;
pub mod lifting;
pub mod manufactured;
pub mod math;
pub mod quadrature;
pub mod saddle;
pub mod spaces;
pub mod sparse;

pub use data::{Datum, ProblemData, ProblemSpec, ScalarFn, TimeGrid, VectorFn};
pub use error::{Error, Result};
pub use geometry::{Mesh, Segment};
pub use spaces::{DofMap, Field, Variant};
