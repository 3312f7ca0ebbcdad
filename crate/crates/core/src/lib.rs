//! Fully discrete polynomial de Rham sequences on polygons and polyhedra.
//!
//! The crate builds, for a single cell and a polynomial degree `k`, the discrete spaces
//! `X_grad`, `X_curl` (`X_rot` on polygons) and `X_div`, the discrete vector operators and
//! interpolators as dense matrices, the potential reconstructions and the stabilized L2
//! products, and checks their structural properties.

pub mod ddr2d;
pub mod ddr3d;
pub mod error;
pub mod geometry;
pub mod layout;
pub mod linalg;
pub mod matrix_io;
pub mod mesh;
pub mod par;
pub mod polyspaces;
pub mod quadrature;
pub mod verify;

pub use error::{DdrError, Result};
pub use geometry::{load_cell, Cell};
pub use mesh::Mesh;
