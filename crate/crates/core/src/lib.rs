//! Spectral laboratory for entropy identities on weighted flat tori.
//!
//! Flows (heat, Wasserstein geodesic, Langevin deformation, damped Euler)
//! are integrated pseudospectrally; the verification harness compares
//! finite-difference time derivatives of entropy functionals against the
//! closed-form curvature integrals they are supposed to equal.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;

pub use error::{Error, Result};
pub use geometry::{
    bakry_emery, build_geometry, cd_lower_bound, torus_distance, FourierTerm, GeometryDescriptor, ScalarField,
    SymTensorField, TorusGeometry, VectorField,
};
pub mod entropy;
pub mod flows;
pub mod reference;
pub mod scenario;
pub mod verify;
