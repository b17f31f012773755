//! Nonlinear Kirchhoff–Love plates and shells on structured grids, with a
//! dual global-optimality certificate.

pub mod cli;
pub mod dual;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod loads;
pub mod model;
pub mod plate;
pub mod shell;
pub mod solver;

pub use error::{Error, Result};
