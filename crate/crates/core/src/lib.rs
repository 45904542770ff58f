//! Numerical toolkit for the nonlocal isoperimetric (liquid drop /
//! Ohta-Kawasaki) functional
//!
//! ```text
//!     J(E) = P(E) + gamma * NL(E),
//!     NL(E) = int_E int_E G(x,y) dx dy,
//! ```
//!
//! where `G` is the Newtonian kernel and `P` the perimeter. Boundaries are
//! discrete: oriented polygon loops in the plane, oriented triangle meshes in
//! space. The crate evaluates the energy and the Newtonian potential through
//! boundary-only integrals, assembles the second-variation quadratic form and
//! its constrained spectrum, drives shapes to critical sets by a
//! volume-constrained gradient flow, and computes the geometric diagnostics
//! (excess, monotonicity profiles, Willmore energy, umbilicity deficit,
//! asphericity) used to classify the results.

pub mod diagnostics;
pub mod eigen;
pub mod energy;
mod error;
pub mod flow;
pub mod geometry;
pub mod par;
pub mod potential;
pub mod quad;
pub mod remesh;
pub mod stability;

pub use error::{Error, Result};
pub use geometry::{Boundary, Dim, LaplaceOperators, ShapeSpec};
