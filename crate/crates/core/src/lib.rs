//! Variable-step discrete convolution kernels and positive definiteness.
//!
//! The crate builds kernel triangles `a[n][j]` for nonuniform time meshes
//! (L1, L1⁺, Riemann–Liouville midpoint, Volterra), constructs their
//! discrete orthogonal (DOC) and discrete complementary (DCC) companion
//! kernels, checks the algebraic sufficient conditions C1–C4 for positive
//! definiteness of the associated quadratic form, and certifies the verdict
//! independently with a Jacobi eigenvalue oracle. Three reference time
//! steppers exercise the resulting stability estimates.

pub mod analysis;
pub mod cli;
pub mod doc_dcc;
pub mod eigen;
mod error;
pub mod io;
pub mod kernels;
pub mod mesh;
pub mod quad;
pub mod solvers;
pub mod special;
pub mod triangle;

pub use error::{Error, Result};
pub use kernels::KernelFamily;
pub use mesh::TimeMesh;
pub use triangle::Triangle;
