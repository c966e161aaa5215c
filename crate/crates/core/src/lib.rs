//! Solvers for linearized bond-based peridynamics: a boundary element
//! method built on the infinite-domain Green functions (static and
//! Laplace-domain dynamic), a meshfree particle reference solver, and an
//! adaptive coupling driver for quasi-static fracture.

pub mod error;
pub mod greenfn;
pub mod material;
pub mod quad;
pub mod special;
pub mod spline;

pub use error::{PbError, Result};
