use thiserror::Error;

use crate::opm::OpmSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Newton inversion of the exterior map did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// The point lies inside the curve, beyond the region where the exterior map is continued.
    #[error("point {re}{im:+}i is inside the domain (|Phi| = {modulus})")]
    InsideDomain { re: f64, im: f64, modulus: f64 },

    #[error("|w| = {modulus} is below the admissible radius {min_radius}")]
    DomainViolation { modulus: f64, min_radius: f64 },

    #[error("operation requires a closed curve, got an arc ({0})")]
    CurveRequired(&'static str),

    #[error("measure has empty support")]
    EmptySupport,

    #[error("support has {support} points, degree {degree} needs at least {}", degree + 1)]
    RankDeficient { support: usize, degree: usize },

    #[error("degree {degree} factorization is ill-conditioned (estimated condition {condition:e})")]
    IllConditioned { degree: usize, condition: f64 },

    #[error("measure is not optimal: certificate gap {gap:e} exceeds {limit:e}")]
    NotOptimal { gap: f64, limit: f64 },

    /// The solver stopped at its iteration cap; the best iterate is attached.
    #[error("solver hit the iteration cap with certificate gap {:e}", .0.certificate_gap)]
    MaxItersExceeded(Box<OpmSolution>),

    #[error("|z| = {modulus} exceeds the quadrature limit 0.99")]
    TooCloseToBoundary { modulus: f64 },

    #[error("density value {value:e} at index {index} is below the Szego-class floor")]
    NotSzegoClass { index: usize, value: f64 },
}
