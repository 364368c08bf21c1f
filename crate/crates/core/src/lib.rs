//! Virtual element discretisation of the acoustic vibration problem in a
//! rigid two-dimensional cavity: find displacement fields `w` with
//! `w·n = 0` on the walls and frequencies `λ` such that
//! `∫ div w div v = λ ∫ w·v` for all admissible `v`.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: structured polygonal meshes of a rectangle and quality checks,
//! * [`element`]: element-local degrees of freedom, projector and mass/stiffness,
//! * [`assembly`]: global dof numbering with wall dofs eliminated, sparse `K` and `M`,
//! * [`eigensolve`]: dense and shift-invert Lanczos solvers, kernel separation, pressures,
//! * [`interp`]: the interpolation operator and its commuting-diagram and rate checks,
//! * [`study`]: convergence studies, exact cavity eigenvalues and observed orders,
//! * [`io`]: mesh JSON, Matrix Market and legacy VTK output.

pub mod assembly;
pub mod eigensolve;
pub mod element;
pub mod error;
pub mod geometry;
pub mod interp;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod study;

pub use error::{Result, VemError};
