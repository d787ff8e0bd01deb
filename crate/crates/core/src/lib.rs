//! Numerical laboratory for multi-speed quasi-linear wave systems: grids and
//! stencils, vector-field operator words, system coefficients, generalized
//! energies and weighted norms, inequality checks, time integration and
//! lifespan sweeps.

pub mod algebra;
pub mod error;
pub mod grid;
pub mod inequality;
pub mod lifespan;
pub mod norms;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
