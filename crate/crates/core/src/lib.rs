//! Numerical laboratory for corrugated Riemannian metrics with prescribed
//! scalar-curvature bands.
//!
//! The crate builds rapidly oscillating perturbations of metrics on tori and
//! thick tori through a mixed corrugation process driven by two loop
//! families, and verifies — at desk scale — that the scalar curvature of the
//! result lands in a prescribed open band while the metric stays C⁰-close to
//! the original. Everything is exact to second order: fields evaluate to
//! machine-precision 2-jets, loop integrals are computed on trigonometric
//! polynomials, and an independent finite-difference oracle adjudicates the
//! tensor engine.
//!
//! Module map:
//! - [`jet`]: order-2 forward differentiation (values, gradients, Hessians).
//! - [`field`]: pure scalar fields over box×torus domains.
//! - [`loops`]: trigonometric loop families and the integral-loop operator.
//! - [`spectral`]: trigonometric/Chebyshev lifts of lattice samples.
//! - [`corrugation`]: the mixed corrugation process and its deviation laws.
//! - [`semilinear`]: jet coordinates, semilinear relations, thickenings, and
//!   the loop conditions.
//! - [`curvature`]: Christoffel/Ricci/scalar engine, split and diagonal
//!   formulas, perturbed-frame decomposition, finite-difference oracle.
//! - [`prescription`]: the flat-torus, general-torus and thick-torus
//!   constructions, frames, and coefficient extraction.
//!
//! All numerics are generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which the experiment
//! harness uses throughout.

// Index sums are written to mirror the tensor formulas they implement.
#![allow(clippy::assign_op_pattern, clippy::needless_range_loop, clippy::type_complexity)]

pub mod corrugation;
pub mod curvature;
pub mod domain;
pub mod error;
pub mod fd;
pub mod field;
pub mod jet;
pub mod linalg;
pub mod loops;
pub mod num;
pub mod prescription;
pub mod random;
pub mod semilinear;
pub mod spectral;

pub use error::{CoreError, Result};

/// `f64` jet, the working precision of the harness.
pub type Jet64 = jet::Jet2<f64>;
/// `f64` scalar field.
pub type Field64 = field::ScalarField<f64>;
/// `f64` metric field.
pub type Metric64 = curvature::MetricField<f64>;
/// `f64` domain.
pub type Domain64 = domain::DomainSpec<f64>;
