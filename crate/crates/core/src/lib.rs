//! Immersed boundary solvers for 2-D Helmholtz and Poisson boundary-value
//! problems on a periodic Cartesian grid.
//!
//! The double layer formulation (IBDL) spreads a dipole density along the
//! immersed boundary and leads to a well-conditioned boundary system; the
//! classical single layer constraint formulation (IBSL) is provided as a
//! baseline.

pub mod bem;
pub mod cli;
pub mod config;
pub mod coupling;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod krylov;
pub mod postprocess;
pub mod solvers;
