//! Optimal prediction measures for planar curves.
//!
//! An optimal prediction measure (OPM) of order `n` for a compact set `K` and an
//! exterior point `z0` is a probability measure on `K` minimizing the Bergman
//! function `B_n(nu, z0)`, equivalently maximizing the Christoffel function
//! `lambda_n(nu, z0)`. This crate computes OPMs on discretized boundaries,
//! compares them with the balayage of `delta_{z0}` (harmonic measure seen from
//! `z0`), and checks the closed-form identities available for the circle, the
//! interval and Szego functions.
//!
//! Modules:
//! - [`geometry`]: exterior conformal maps, Green function, level curves, Faber polynomials.
//! - [`measure`]: discrete probability measures, moments, pushforward, balayage.
//! - [`bergman`]: Gram matrices, Bergman/Christoffel functions, reproducing kernels.
//! - [`opm`]: the conditional-gradient OPM solver and its optimality certificate.
//! - [`szego`]: Szego functions and `lambda_inf` on the unit circle.
//! - [`cli`]: configuration-driven experiment runner used by the `opmlab` binary.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod cli;
mod error;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod opm;
pub mod szego;

pub use num_complex::Complex64;

pub use bergman::{
    bergman_function, extremal_growth_polynomial, gram_matrix, reproducing_kernel,
    tilde_monotonicity_defect, BergmanEvaluation, ExtremalPolynomial, GramMatrix, Preconditioner,
};
pub use error::{Error, Result};
pub use geometry::{
    exterior_map, faber_asymptotic_deviation, faber_polynomials, green_function, inverse_map,
    level_curve_nodes, CurveGeometry, FaberTable,
};
pub use measure::{
    balayage_point_mass, discretize_boundary, holomorphic_moments, moment_discrepancy,
    pushforward, uniform_measure, DiscreteMeasure,
};
pub use opm::{
    certificate_gap, convergence_study, solve_opm, support_diagnostic, ConvergenceRow,
    OpmOptions, OpmSolution, SupportReport,
};
pub use szego::{
    szego_function, transport_check, verify_circle_optimality, CircleDensity, OptimalityReport,
    SzegoEvaluation,
};

/// Builds a complex number; shorthand used throughout the crate and its tests.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
