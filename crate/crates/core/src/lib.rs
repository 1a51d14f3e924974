//! Numerical shape optimization over convex polygonal and polyhedral
//! domains.
//!
//! Domains are represented by simplicial meshes whose vertices are moved
//! along deformation fields obtained from a convex quadratic program: the
//! elasticity inner product represents the discrete shape derivative,
//! deformations are restricted to those generated by boundary normal forces,
//! and linearized convexity constraints keep the domain convex. Step sizes
//! are chosen by an Armijo backtracking on an exact-penalty merit function.

pub mod convexity;
pub mod deform;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod optimize;
pub mod qp;
pub mod shapecalc;

pub use error::{Error, Result};
pub use mesh::{SimplicialMesh, VectorFieldP1};
