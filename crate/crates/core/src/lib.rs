//! Canonical-class energy functionals and the Kähler–Ricci flow on
//! rotationally symmetric metrics over CP^n.
//!
//! The crate reduces every quantity to one dimension through the radial
//! ansatz (see [`geometry`]), evaluates the generalized energy `J`, the
//! K-energy `ν` and the energy `E_1` (see [`functionals`]), integrates the
//! flow in potential form (see [`flow`]) and checks the variational
//! identities that tie them together (see [`verification`]).

pub mod calculus;
pub mod cli;
pub mod config;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod potential;
pub mod sampling;
pub mod verification;

pub use error::{Error, Result};
