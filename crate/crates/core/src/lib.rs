//! Point spectra, continuous bands and invariant manifolds of the linearized
//! 2D Navier–Stokes operator about single-mode steady states.
//!
//! The spectral problem splits into tridiagonal recurrences along lattice
//! fibers `{k̂ + np}`. Eigenvalues are zeros of matching functions built from
//! two continued fractions ([`contfrac`]), located by [`eigensolver`] and
//! cross-checked against truncated matrices ([`oracle`]). The [`manifold`]
//! module runs the contraction-mapping construction of invariant manifolds on
//! Galerkin truncations.

pub mod contfrac;
mod dd;
pub mod eigensolver;
pub mod error;
pub mod lattice;
pub mod manifold;
pub mod acceptance;
pub mod cli;
pub mod oracle;
pub mod presets;

pub use error::{Error, Result};
