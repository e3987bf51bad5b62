//! Gradient-like vector fields for nondegenerate bilinear forms on `R^n`,
//! their integrability conditions, and the locus where a prescribed field is
//! the gradient of a given potential but fails to be integrable.
//!
//! A form `b(x, y) = x^T Q y` determines the companion map `B = Q^{-1}` with
//! `<x, y> = b(x, B y)` and its adjoint `B* = B^T`. The left and right
//! gradients of `f` are `B* ∇f` and `B ∇f`.
//!
//! ```
//! use gradlocus::fields::{left_gradient, ScalarField};
//! use gradlocus::geometry::{companion_map, standard_symplectic};
//! use nalgebra::dvector;
//!
//! let pair = companion_map(&standard_symplectic(1).unwrap()).unwrap();
//! let h = ScalarField::parse("(x1^2 + x2^2)/2", 2).unwrap();
//! // the Hamiltonian field of the harmonic oscillator
//! let x = left_gradient(&pair, &h, &dvector![1.0, 0.0]).unwrap();
//! assert_eq!(x, dvector![0.0, -1.0]);
//! ```
//!
//! Modules, roughly in dependency order:
//!
//! - [`geometry`]: forms, classification, companion maps.
//! - [`exterior`]: sparse multivectors, `Γ(M)`, its top power, Pfaffians.
//! - [`fields`]: the expression language, dual-number gradients and jet Hessians.
//! - [`integrability`]: residuals of the integrability conditions and the `Γ` obstruction.
//! - [`sampling`]: boxes and seeded low-discrepancy points.
//! - [`locus`]: `Φ = ∇f - C F`, Levenberg-Marquardt sampling, charts and box counting.
//! - [`scenario`] and [`cli`]: the JSON scenario format and the commands of the binary.

pub mod cli;
pub mod exterior;
pub mod fields;
pub mod geometry;
pub mod integrability;
pub mod locus;
pub mod sampling;
pub mod scenario;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/structures.md")]
    mod structures {}
    #[doc = include_str!("../../../book/src/exterior.md")]
    mod exterior {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/integrability.md")]
    mod integrability {}
    #[doc = include_str!("../../../book/src/locus.md")]
    mod locus {}
    #[doc = include_str!("../../../book/src/command_line.md")]
    mod command_line {}
}
