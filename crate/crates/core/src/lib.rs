//! Band-touching points, winding numbers, phase diagrams and dispersions of
//! a non-Hermitian bilayer square lattice with balanced gain and loss.
//!
//! The Bloch Hamiltonian is `h(k) = Bx σx + By σz` with
//! `Bx = 2J(cos kx + cos ky) + T` and `By = 4t cos kx cos ky + iγ`.

pub mod bloch;
pub mod btp;
pub mod dispersion;
pub mod error;
pub mod format;
pub mod model;
pub mod phase;
pub mod realspace;
pub mod ring;
pub mod symmetry;
pub mod winding;

pub use error::{Error, Result};
pub use model::{HalfInteger, ModelParams, Momentum};
