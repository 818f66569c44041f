//! Numerical toolkit for non-unitary quantum dynamics.
//!
//! The crate implements, at dense desk scale, the constructive machinery for
//! turning non-unitary gates into physical operations and back:
//!
//! - [`matrix`]: complex operator matrices with SVD, polar, and biorthogonal
//!   spectral decompositions, plus distance-to-unitarity measures.
//! - [`nh`]: analysis of non-Hermitian Hamiltonians — Hermitian split,
//!   pseudo-Hermitian metric search, PT canonical form, similarity factors.
//! - [`circuit`]: dense statevector/density-matrix simulation of circuits
//!   mixing unitaries, renormalized non-unitary gates, measurement, and
//!   postselection; the brute-force oracle for everything else.
//! - [`gadgets`]: postselection gadgets built from repeated non-unitary
//!   cores, with analytic failure-probability budgets.
//! - [`purification`]: unitary dilations of non-unitary operators and
//!   circuits onto system+meter registers.
//! - [`trajectories`]: Trotterized system-meter quantum trajectories, their
//!   no-jump effective Hamiltonians, and the Lindblad average.
//! - [`stabilizer`]: Clifford simulation with forced (postselected)
//!   measurement outcomes and exact dyadic record probabilities.
//! - [`conditioning`]: the error calculus for estimating conditional
//!   probabilities from additively-accurate components.

pub mod circuit;
pub mod conditioning;
pub mod error;
pub mod expm;
pub mod gadgets;
pub mod matrix;
pub mod nh;
pub mod purification;
pub mod stabilizer;
pub mod trajectories;

pub use error::{Error, Result};
pub use expm::{matrix_exp, matrix_exp_pade};
pub use matrix::{
    biorthogonal_spectrum, distance_to_unitary, embed, normalized_singular_radius,
    polar_decompose, svd, BiorthogonalSpectrum, OperatorMatrix, PolarFactors,
    SingularDecomposition, UnitaryDistance, C64,
};
