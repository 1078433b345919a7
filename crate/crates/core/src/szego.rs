//! Szegő functions and `lambda_inf` on the unit circle, the random-density
//! optimality check for the Poisson density, and the transport identity
//! that moves tilde Christoffel asymptotics from a curve to the circle.
//!
//! Densities are taken with respect to normalized arclength `dt / 2 pi`, so a
//! probability density has mean 1 on a uniform grid.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::bergman_function;
use crate::geometry::{exterior_map, CurveGeometry};
use crate::measure::{poisson_kernel, DiscreteMeasure};
use crate::{Complex64, Error, Result};

/// Values below this are outside the Szegő class.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Largest `|z|` accepted by the quadrature.
pub const MAX_MODULUS: f64 = 0.99;
/// Default number of angular grid points.
pub const DEFAULT_GRID: usize = 4096;
/// Degree of the random trigonometric polynomials in the optimality check.
pub const RANDOM_DEGREE: usize = 6;
/// Tolerance for equality of `lambda_inf` with the Poisson value, and for
/// pointwise agreement of densities.
pub const EQUALITY_TOL: f64 = 1e-6;

/// A positive density on `t_j = 2 pi j / m`, normalized to mean 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleDensity {
    values: Vec<f64>,
}

impl CircleDensity {
    /// Normalizes positive samples to mean 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_szego_class(&values)?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(CircleDensity {
            values: values.into_iter().map(|v| v / mean).collect(),
        })
    }

    /// Samples `f(t_j)` and normalizes.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..m).map(|j| f(angle(j, m))).collect())
    }

    pub fn arclength(m: usize) -> Self {
        CircleDensity {
            values: vec![1.0; m],
        }
    }

    /// Poisson kernel `(1 - |w0|^2) / |e^{it} - w0|^2`, the balayage of `delta_{1/conj(w0)}`.
    pub fn poisson(w0: Complex64, m: usize) -> Result<Self> {
        if w0.norm() >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "Poisson center must lie in the open disk, |w0| = {}",
                w0.norm()
            )));
        }
        Self::from_fn(m, |t| poisson_kernel(w0, Complex64::from_polar(1.0, t)))
    }

    /// `exp` of a random real trigonometric polynomial of degree `degree`
    /// with coefficients uniform in `[-1, 1]`.
    pub fn random_smooth(rng: &mut impl Rng, degree: usize, m: usize) -> Result<Self> {
        let a: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let b: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::from_fn(m, |t| {
            (0..=degree)
                .map(|k| a[k] * (k as f64 * t).cos() + b[k] * (k as f64 * t).sin())
                .sum::<f64>()
                .exp()
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn angle(j: usize, m: usize) -> f64 {
    2.0 * PI * j as f64 / m as f64
}

fn check_szego_class(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptySupport);
    }
    for (index, &value) in values.iter().enumerate() {
        if !(value >= DENSITY_FLOOR) || !value.is_finite() {
            return Err(Error::NotSzegoClass { index, value });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SzegoEvaluation {
    pub point: Complex64,
    pub szego_value: Complex64,
    /// `(1 - |z|^2) |D(z)|^2`.
    pub lambda_inf: f64,
}

/// `D(z) = exp((1 / 2m) sum_j (e_j + z) / (e_j - z) log f_j)`, trapezoidal rule.
pub fn szego_function(f: &CircleDensity, z: Complex64) -> Result<SzegoEvaluation> {
    szego_from_samples(&f.values, z)
}

/// Same as [`szego_function`] without normalizing the samples; `D(c f) = sqrt(c) D(f)`.
pub fn szego_function_unnormalized(values: &[f64], z: Complex64) -> Result<SzegoEvaluation> {
    check_szego_class(values)?;
    szego_from_samples(values, z)
}

fn szego_from_samples(values: &[f64], z: Complex64) -> Result<SzegoEvaluation> {
    if z.norm() > MAX_MODULUS {
        return Err(Error::TooCloseToBoundary { modulus: z.norm() });
    }
    let m = values.len();
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, &f) in values.iter().enumerate() {
        let lf = f.ln();
        if lf != 0.0 {
            let e = Complex64::from_polar(1.0, angle(j, m));
            sum += (e + z) / (e - z) * lf;
        }
    }
    let d = (sum / (2.0 * m as f64)).exp();
    Ok(SzegoEvaluation {
        point: z,
        szego_value: d,
        lambda_inf: (1.0 - z.norm_sqr()) * d.norm_sqr(),
    })
}

/// Outcome of one density in [`verify_circle_optimality`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub lambda: f64,
    /// `|lambda - lambda_Poisson| <= EQUALITY_TOL`.
    pub equality: bool,
    /// The density agrees with the Poisson density within `EQUALITY_TOL` everywhere.
    pub matches_poisson: bool,
}

impl TrialOutcome {
    /// Larger than the Poisson value, or equal to it without being the Poisson density.
    pub fn is_violation(&self, poisson_lambda: f64) -> bool {
        self.lambda > poisson_lambda + 1e-10 || (self.equality && !self.matches_poisson)
    }
}

/// Compares `lambda_inf(f, w0)` with the Poisson density centered at `w0`.
pub fn evaluate_trial(f: &CircleDensity, w0: Complex64) -> Result<TrialOutcome> {
    let poisson = CircleDensity::poisson(w0, f.len())?;
    let lambda = szego_function(f, w0)?.lambda_inf;
    let poisson_lambda = szego_function(&poisson, w0)?.lambda_inf;
    let matches_poisson = f
        .values
        .iter()
        .zip(&poisson.values)
        .all(|(a, b)| (a - b).abs() <= EQUALITY_TOL);
    Ok(TrialOutcome {
        lambda,
        equality: (lambda - poisson_lambda).abs() <= EQUALITY_TOL,
        matches_poisson,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: u64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub w0: Complex64,
    pub trials: u64,
    pub seed: u64,
    pub max_lambda: f64,
    pub poisson_lambda: f64,
    pub violations: Vec<Violation>,
}

/// Draws `trials` random smooth densities (trial `k` seeded with `seed + k`)
/// and checks that none beats the Poisson density at `w0`.
pub fn verify_circle_optimality(w0: Complex64, trials: u64, seed: u64) -> Result<OptimalityReport> {
    verify_circle_optimality_on(w0, trials, seed, DEFAULT_GRID)
}

pub fn verify_circle_optimality_on(
    w0: Complex64,
    trials: u64,
    seed: u64,
    m: usize,
) -> Result<OptimalityReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".to_string()));
    }
    let poisson_lambda = szego_function(&CircleDensity::poisson(w0, m)?, w0)?.lambda_inf;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let f = CircleDensity::random_smooth(&mut rng, RANDOM_DEGREE, m)?;
            evaluate_trial(&f, w0)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_lambda = outcomes.iter().map(|o| o.lambda).fold(f64::NEG_INFINITY, f64::max);
    let violations = outcomes
        .iter()
        .zip(0..)
        .filter(|(o, _)| o.is_violation(poisson_lambda))
        .map(|(o, trial)| Violation {
            trial,
            lambda: o.lambda,
        })
        .collect();
    Ok(OptimalityReport {
        w0,
        trials,
        seed,
        max_lambda,
        poisson_lambda,
        violations,
    })
}

/// Density of `Phi_* mu` on the uniform angular grid of size `m`.
///
/// Each mass `w_i` at angle `theta_i` is spread over the half-gaps to its
/// neighbours, giving point densities `w_i * 2 pi / Delta_i` that are
/// interpolated periodically and linearly onto the grid.
pub fn pushforward_density(geom: &CurveGeometry, mu: &DiscreteMeasure, m: usize) -> Result<CircleDensity> {
    geom.require_curve("pushforward_density")?;
    let mut pts = mu
        .iter()
        .map(|(x, w)| exterior_map(geom, x).map(|e| (e.arg().rem_euclid(2.0 * PI), w)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    if pts.len() < 3 {
        return Err(Error::InvalidArgument(
            "a density needs at least three nodes".to_string(),
        ));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = pts.len();
    let theta = |i: isize| -> f64 {
        let wrapped = i.rem_euclid(k as isize) as usize;
        pts[wrapped].0 + 2.0 * PI * i.div_euclid(k as isize) as f64
    };
    let dens: Vec<f64> = (0..k as isize)
        .map(|i| {
            let delta = 0.5 * (theta(i + 1) - theta(i - 1));
            pts[i as usize].1 * 2.0 * PI / delta
        })
        .collect();
    let mut values = Vec::with_capacity(m);
    let mut seg = 0isize;
    for j in 0..m {
        let t = angle(j, m);
        // Find consecutive nodes theta(seg) <= t < theta(seg + 1), allowing wraparound.
        while theta(seg + 1) <= t {
            seg += 1;
        }
        while theta(seg) > t {
            seg -= 1;
        }
        let (t0, t1) = (theta(seg), theta(seg + 1));
        let f0 = dens[seg.rem_euclid(k as isize) as usize];
        let f1 = dens[(seg + 1).rem_euclid(k as isize) as usize];
        let s = (t - t0) / (t1 - t0);
        values.push(f0 + s * (f1 - f0));
    }
    CircleDensity::new(values)
}

/// `(lhs, rhs)` with `lhs = |Phi(z)|^{2n} lambda_n(mu, z)` at `n = n_probe`
/// and `rhs = lambda_inf(Phi_* mu, 1 / conj(Phi(z)))`.
pub fn transport_check(
    geom: &CurveGeometry,
    mu: &DiscreteMeasure,
    z: Complex64,
    n_probe: usize,
) -> Result<(f64, f64)> {
    transport_check_on(geom, mu, z, n_probe, DEFAULT_GRID)
}

pub fn transport_check_on(
    geom: &CurveGeometry,
    mu: &DiscreteMeasure,
    z: Complex64,
    n_probe: usize,
    m: usize,
) -> Result<(f64, f64)> {
    geom.require_curve("transport_check")?;
    let phi = exterior_map(geom, z)?;
    if phi.norm() <= 1.0 + 1e-12 {
        return Err(Error::InsideDomain {
            re: z.re,
            im: z.im,
            modulus: phi.norm(),
        });
    }
    let lambda = bergman_function(mu, n_probe, z)?.christoffel;
    let lhs = phi.norm().powi(2 * n_probe as i32) * lambda;
    let density = pushforward_density(geom, mu, m)?;
    let rhs = szego_function(&density, phi.conj().inv())?.lambda_inf;
    Ok((lhs, rhs))
}
