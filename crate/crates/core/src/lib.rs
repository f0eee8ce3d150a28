//! Hybrid, mimetic and mixed discretizations of
//!
//! ```text
//! -div(Λ ∇p) = f in Ω,   p = g on ∂Ω
//! ```
//!
//! on general 2D polygonal meshes.
//!
//! The three families share a single local structure: a consistent part built
//! from the cell geometry and `Λ_K`, plus a stabilization acting on a
//! `(k_K - 2)`-dimensional complement. [`local`] builds the per-cell operators
//! and converts a stabilization between its mimetic (`U`), hybrid (`B^H`) and
//! mixed (`B^M`) parameterizations; [`scheme`] assembles the hybridized global
//! system in any of the three formulations, optionally condensing edge
//! unknowns; [`solve`] runs a Jacobi-preconditioned CG; [`post`] holds the flux
//! lifting, special-case checks and the convergence harness.
//!
//! Data-parallel loops (per-cell assembly, matrix-vector products, mesh
//! sweeps) go through [`par::Execution`]. With the default `parallel` feature
//! they run on rayon; without it every path is sequential. Results are
//! bit-identical either way.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dense;
mod error;
pub mod local;
pub mod mesh;
pub mod par;
pub mod post;
pub mod quadrature;
pub mod sampling;
pub mod scheme;
pub mod solve;

pub use error::{Error, Result};

/// Space dimension. The data model mirrors the general setting but only the
/// planar case is implemented.
pub const DIM: usize = 2;

/// A point or vector of the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

/// A 2x2 matrix, used for diffusion tensors.
pub type Tensor = nalgebra::Matrix2<f64>;
