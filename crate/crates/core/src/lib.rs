//! Integrable two-dimensional lattice system arising from torus-symmetric
//! ADHM data, viewed as a discretization of the Hitchin equations.
//!
//! - [`lattice`]: field containers, residuals, lattice gauge action.
//! - [`solver`]: positive instanton data by damped Gauss-Newton with continuation.
//! - [`adhm`]: Kronecker assembly of the ADHM matrices and the Donaldson equations.
//! - [`lax`]: the lattice Lax pair and its commutator.
//! - [`continuum`]: Hitchin, curved Hitchin and Nahm limits.
//! - [`io`]: JSON data files and CSV export.

pub mod adhm;
pub mod continuum;
pub mod error;
pub mod fit;
pub mod io;
pub mod lattice;
pub mod lax;
pub mod linalg;
pub mod solver;

pub use error::{Error, Result};
pub use lattice::{
    Boundary, Grid, InstantonData, LatticeShape, MatrixLatticeField, ResidualReport,
};
