//! Exact computer algebra for the deformation maps of Mumford curves.
//!
//! Mumford curves over a non-archimedean field carry two kinds of deformation
//! parameters: algebraic ones (coefficients in an equation of the curve) and
//! rigid-analytic ones (entries of the Schottky group uniformizing it). This
//! crate computes the map between them as certified truncated Laurent series,
//! in three instances:
//!
//! - the Tate curve, where the 2-torsion cross ratio `lambda(t)` is an
//!   explicit infinite product in `s = 1/t` ([`tate`]);
//! - four-point covers of the projective line, where the cross ratio
//!   localises into a product of cross ratios over a group orbit
//!   ([`crossratio`]);
//! - the Artin-Schreier-Mumford curves `(x^q - x)(y^q - y) = lambda` in
//!   characteristic p, where `lambda(t)` is an infinite product of rational
//!   functions indexed by a free group of rank `(q-1)^2` ([`asm`]).
//!
//! Every headline result is paired with an independent oracle: the classical
//! `j = E4^3 / Delta` expansion checks the Tate product, and a theta-function
//! evaluation over `F_{q^2}` checks the ASM product. Truncations carry
//! explicit convergence certificates (the `e_n` valuation table).
//!
//! The building blocks are exact: finite fields `F_q` with deterministic
//! moduli ([`field`]), polynomials and rational functions over them
//! ([`poly`]), Laurent series with absolute-precision tracking ([`series`]),
//! and projective matrix groups with reduced-word enumeration ([`moebius`],
//! [`words`]).
//!
//! See the `examples/` directory for one runnable program per capability, and
//! the `schottky` binary for a batch CLI over the same operations.

pub mod asm;
pub mod cache;
pub mod cli;
pub mod crossratio;
mod error;
pub mod field;
pub mod moebius;
pub mod poly;
pub mod series;
pub mod tate;
pub mod textform;
pub mod theta;
pub mod words;

pub use error::Error;

/// Convenience result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
