//! Numerical toolkit for the clamped-plate (Dirichlet bilaplacian)
//! eigenproblem on planar domains and balls of any dimension.
//!
//! The crate provides:
//! - Bessel evaluations and the cross-product zero gamma_nu ([`bessel`]);
//! - the closed-form principal mode of the ball ([`ballmode`]);
//! - masked-grid finite-difference solvers for the clamped plate, Poisson
//!   problems and harmonic extensions ([`grid`], [`fdsolver`]);
//! - the order-reduction diagnostics z_u, g_u and the hypothesis checkers
//!   built on them ([`reduction`]);
//! - Schwarz/decreasing rearrangements and the symmetrized-Poisson
//!   comparison ([`rearrange`]);
//! - numerical verification of shape-derivative formulas ([`shapederiv`]).

pub mod ballmode;
pub mod bessel;
pub mod error;
pub mod fdsolver;
pub mod grid;
pub mod quad;
pub mod rearrange;
pub mod reduction;
pub mod shapederiv;

mod band;

pub use error::{Error, Result};
