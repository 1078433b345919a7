//! Exterior conformal maps of supported curves.
//!
//! Every geometry is described by the Laurent expansion of its exterior map
//! `Psi(w) = b w + b0 + sum_{k>=1} b_k w^{-k}`, which sends `|w| > 1` onto the
//! unbounded component `Omega` of the complement of the set. `Phi = Psi^{-1}`,
//! the Green function of `Omega` is `log |Phi|`, and `b` is the logarithmic
//! capacity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Complex64, Error, Result};

const NEWTON_MAX_ITERS: usize = 50;
const NEWTON_TOL: f64 = 1e-12;
/// Relative slack used when comparing a modulus against an admissible radius.
const RADIUS_SLACK: f64 = 1e-12;
/// Points with `|Phi(z)|` below `1 - BOUNDARY_SLACK` are treated as interior.
const BOUNDARY_SLACK: f64 = 1e-10;
const INJECTIVITY_SAMPLES: usize = 512;
const INJECTIVITY_TOL: f64 = 1e-9;

/// The supported compact sets, as they appear in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    #[serde(alias = "circle")]
    UnitCircle,
    /// Ellipse centered at 0 with semi-axes `a > b > 0` along the real and imaginary axes.
    Ellipse { a: f64, b: f64 },
    /// The segment `[-1, 1]`.
    Interval,
    /// `Psi(w) = capacity * w + center + sum_k tail[k-1] * w^{-k}`.
    #[serde(alias = "laurent")]
    LaurentCurve {
        capacity: f64,
        center: Complex64,
        #[serde(default)]
        tail: Vec<Complex64>,
    },
}

/// A validated geometry. Construct through the named constructors or by
/// deserializing a [`CurveKind`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveKind", into = "CurveKind")]
pub struct CurveGeometry {
    kind: CurveKind,
}

impl TryFrom<CurveKind> for CurveGeometry {
    type Error = Error;

    fn try_from(kind: CurveKind) -> Result<Self> {
        CurveGeometry::new(kind)
    }
}

impl From<CurveGeometry> for CurveKind {
    fn from(g: CurveGeometry) -> Self {
        g.kind
    }
}

impl CurveGeometry {
    pub fn new(kind: CurveKind) -> Result<Self> {
        match &kind {
            CurveKind::UnitCircle | CurveKind::Interval => {}
            CurveKind::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite() && *b > 0.0 && a > b) {
                    return Err(Error::InvalidGeometry(format!(
                        "ellipse needs finite semi-axes a > b > 0, got a = {a}, b = {b}"
                    )));
                }
            }
            CurveKind::LaurentCurve {
                capacity,
                center,
                tail,
            } => {
                if !(capacity.is_finite() && *capacity > 0.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "capacity must be positive and finite, got {capacity}"
                    )));
                }
                if !(center.re.is_finite() && center.im.is_finite())
                    || tail.iter().any(|c| !(c.re.is_finite() && c.im.is_finite()))
                {
                    return Err(Error::InvalidGeometry(
                        "Laurent coefficients must be finite".into(),
                    ));
                }
            }
        }
        let geom = CurveGeometry { kind };
        if matches!(geom.kind, CurveKind::LaurentCurve { .. }) {
            geom.check_injective()?;
        }
        Ok(geom)
    }

    pub fn unit_circle() -> Self {
        CurveGeometry {
            kind: CurveKind::UnitCircle,
        }
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::new(CurveKind::Ellipse { a, b })
    }

    pub fn interval() -> Self {
        CurveGeometry {
            kind: CurveKind::Interval,
        }
    }

    pub fn laurent(capacity: f64, center: Complex64, tail: Vec<Complex64>) -> Result<Self> {
        Self::new(CurveKind::LaurentCurve {
            capacity,
            center,
            tail,
        })
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// Short lowercase name, used in diagnostics and file names.
    pub fn name(&self) -> &'static str {
        match self.kind {
            CurveKind::UnitCircle => "unit_circle",
            CurveKind::Ellipse { .. } => "ellipse",
            CurveKind::Interval => "interval",
            CurveKind::LaurentCurve { .. } => "laurent_curve",
        }
    }

    /// Logarithmic capacity, the leading Laurent coefficient of `Psi`.
    pub fn capacity(&self) -> f64 {
        self.laurent_coefficients().0
    }

    /// `false` for the interval, which is an arc rather than a closed curve.
    pub fn is_curve(&self) -> bool {
        !matches!(self.kind, CurveKind::Interval)
    }

    pub(crate) fn require_curve(&self, op: &'static str) -> Result<()> {
        if self.is_curve() {
            Ok(())
        } else {
            Err(Error::CurveRequired(op))
        }
    }

    /// `(b, b0, [b1, b2, ...])` with `Psi(w) = b w + b0 + sum_k b_k w^{-k}`.
    pub fn laurent_coefficients(&self) -> (f64, Complex64, Vec<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            CurveKind::UnitCircle => (1.0, zero, Vec::new()),
            CurveKind::Ellipse { a, b } => ((a + b) / 2.0, zero, vec![Complex64::from((a - b) / 2.0)]),
            CurveKind::Interval => (0.5, zero, vec![Complex64::from(0.5)]),
            CurveKind::LaurentCurve {
                capacity,
                center,
                tail,
            } => (*capacity, *center, tail.clone()),
        }
    }

    /// Smallest `|w|` at which `Psi` is used. Closed-form maps are univalent
    /// down to their inner radius; the interval and general Laurent curves are
    /// only used on `|w| >= 1`.
    pub fn min_radius(&self) -> f64 {
        match self.kind {
            CurveKind::UnitCircle => 0.0,
            CurveKind::Ellipse { a, b } => ((a - b) / (a + b)).sqrt(),
            CurveKind::Interval | CurveKind::LaurentCurve { .. } => 1.0,
        }
    }

    /// `Psi(w)` without domain checks.
    pub fn psi(&self, w: Complex64) -> Complex64 {
        match &self.kind {
            CurveKind::UnitCircle => w,
            CurveKind::Ellipse { a, b } => w * ((a + b) / 2.0) + w.inv() * ((a - b) / 2.0),
            CurveKind::Interval => (w + w.inv()) * 0.5,
            CurveKind::LaurentCurve {
                capacity,
                center,
                tail,
            } => {
                let winv = w.inv();
                // Horner in 1/w for the tail.
                let mut acc = Complex64::new(0.0, 0.0);
                for c in tail.iter().rev() {
                    acc = (acc + c) * winv;
                }
                w * *capacity + center + acc
            }
        }
    }

    /// `Psi'(w)` without domain checks.
    pub fn psi_prime(&self, w: Complex64) -> Complex64 {
        match &self.kind {
            CurveKind::UnitCircle => Complex64::new(1.0, 0.0),
            CurveKind::Ellipse { a, b } => {
                Complex64::from((a + b) / 2.0) - (w * w).inv() * ((a - b) / 2.0)
            }
            CurveKind::Interval => (Complex64::new(1.0, 0.0) - (w * w).inv()) * 0.5,
            CurveKind::LaurentCurve { capacity, tail, .. } => {
                let winv = w.inv();
                let mut acc = Complex64::new(0.0, 0.0);
                let mut pow = winv * winv;
                for (k, c) in tail.iter().enumerate() {
                    acc -= c * pow * (k as f64 + 1.0);
                    pow *= winv;
                }
                Complex64::from(*capacity) + acc
            }
        }
    }

    fn check_injective(&self) -> Result<()> {
        let m = INJECTIVITY_SAMPLES;
        let pts: Vec<Complex64> = (0..m)
            .map(|j| self.psi(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)))
            .collect();
        for i in 0..m {
            for j in (i + 1)..m {
                if (pts[i] - pts[j]).norm() <= INJECTIVITY_TOL {
                    return Err(Error::InvalidGeometry(format!(
                        "Psi is not injective on |w| = 1: samples {i} and {j} coincide"
                    )));
                }
            }
        }
        // The sampled boundary polygon must also be simple.
        for i in 0..m {
            let (p1, p2) = (pts[i], pts[(i + 1) % m]);
            for j in (i + 2)..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                let (q1, q2) = (pts[j], pts[(j + 1) % m]);
                if segments_cross(p1, p2, q1, q2) {
                    return Err(Error::InvalidGeometry(format!(
                        "boundary curve self-intersects between samples {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn check_radius(geom: &CurveGeometry, w: Complex64) -> Result<()> {
    let min = geom.min_radius();
    if w.norm() < min * (1.0 - RADIUS_SLACK) {
        return Err(Error::DomainViolation {
            modulus: w.norm(),
            min_radius: min,
        });
    }
    Ok(())
}

fn inside(z: Complex64, w: Complex64) -> Error {
    Error::InsideDomain {
        re: z.re,
        im: z.im,
        modulus: w.norm(),
    }
}

/// Exterior conformal map `Phi(z)`.
///
/// Closed forms are used for the circle, ellipse and interval (root of larger
/// modulus). Laurent curves are inverted by Newton's method started at
/// `(z - b0) / b`.
pub fn exterior_map(geom: &CurveGeometry, z: Complex64) -> Result<Complex64> {
    let w = match geom.kind() {
        CurveKind::UnitCircle => z,
        CurveKind::Ellipse { a, b } => {
            let (c, d) = ((a + b) / 2.0, (a - b) / 2.0);
            // c w^2 - z w + d = 0
            let disc = (z * z - 4.0 * c * d).sqrt();
            let (w1, w2) = ((z + disc) / (2.0 * c), (z - disc) / (2.0 * c));
            if w1.norm() >= w2.norm() {
                w1
            } else {
                w2
            }
        }
        CurveKind::Interval => {
            let s = (z * z - 1.0).sqrt();
            let (w1, w2) = (z + s, z - s);
            if w1.norm() >= w2.norm() {
                w1
            } else {
                w2
            }
        }
        CurveKind::LaurentCurve {
            capacity, center, ..
        } => {
            let mut w = (z - center) / *capacity;
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITERS {
                let step = (geom.psi(w) - z) / geom.psi_prime(w);
                w -= step;
                if !(w.re.is_finite() && w.im.is_finite()) {
                    break;
                }
                if step.norm() <= NEWTON_TOL * w.norm().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NoConvergence {
                    iterations: NEWTON_MAX_ITERS,
                });
            }
            if w.norm() < 1.0 - BOUNDARY_SLACK {
                return Err(inside(z, w));
            }
            w
        }
    };
    // On the inner edge of the continuation collar (focal segment, circle center).
    if w.norm() <= geom.min_radius() * (1.0 + RADIUS_SLACK) && w.norm() < 1.0 - BOUNDARY_SLACK {
        return Err(inside(z, w));
    }
    Ok(w)
}

/// Inverse exterior map `Psi(w)`.
pub fn inverse_map(geom: &CurveGeometry, w: Complex64) -> Result<Complex64> {
    check_radius(geom, w)?;
    Ok(geom.psi(w))
}

/// Green function of the exterior domain with pole at infinity, `log |Phi(z)|`.
pub fn green_function(geom: &CurveGeometry, z: Complex64) -> Result<f64> {
    let w = exterior_map(geom, z)?;
    if w.norm() < 1.0 - BOUNDARY_SLACK {
        return Err(inside(z, w));
    }
    Ok(w.norm().ln().max(0.0))
}

/// Nodes `Psi(r e^{2 pi i j / m})`, `j = 0..m`.
pub fn level_curve_nodes(geom: &CurveGeometry, r: f64, m: usize) -> Result<Vec<Complex64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("level curve needs m >= 1 nodes".into()));
    }
    if !r.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be finite, got {r}")));
    }
    check_radius(geom, Complex64::from(r))?;
    Ok((0..m)
        .map(|j| geom.psi(Complex64::from_polar(r, 2.0 * PI * j as f64 / m as f64)))
        .collect())
}

/// Faber polynomials `F_0..=F_{degree_max}` in monomial form.
#[derive(Clone, Debug, PartialEq)]
pub struct FaberTable {
    pub degree_max: usize,
    /// Row `n` holds the `n + 1` monomial coefficients of `F_n`, constant term first.
    pub coefficients: Vec<Vec<Complex64>>,
}

impl FaberTable {
    pub fn row(&self, n: usize) -> &[Complex64] {
        &self.coefficients[n]
    }

    /// Horner evaluation of `F_n(z)`.
    pub fn eval(&self, n: usize, z: Complex64) -> Complex64 {
        self.coefficients[n]
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }
}

/// Faber polynomials from the generating relation
/// `Psi'(w) / (Psi(w) - z) = sum_n F_n(z) w^{-n-1}`, which gives
/// `b F_n = (z - b0) F_{n-1} - sum_{k=1}^{n-1} b_k F_{n-1-k} - (n-1) b_{n-1}`.
pub fn faber_polynomials(geom: &CurveGeometry, n_max: usize) -> FaberTable {
    let (b, b0, tail) = geom.laurent_coefficients();
    let tail_at = |k: usize| -> Complex64 {
        if k >= 1 && k <= tail.len() {
            tail[k - 1]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(n_max + 1);
    rows.push(vec![Complex64::new(1.0, 0.0)]);
    for n in 1..=n_max {
        let mut row = vec![Complex64::new(0.0, 0.0); n + 1];
        let prev = &rows[n - 1];
        for (k, c) in prev.iter().enumerate() {
            row[k + 1] += c;
            row[k] -= b0 * c;
        }
        for k in 1..n {
            let bk = tail_at(k);
            if bk == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, c) in rows[n - 1 - k].iter().enumerate() {
                row[j] -= bk * c;
            }
        }
        row[0] -= tail_at(n - 1) * (n as f64 - 1.0);
        for c in row.iter_mut() {
            *c /= b;
        }
        rows.push(row);
    }
    FaberTable {
        degree_max: n_max,
        coefficients: rows,
    }
}

/// Values `F_0(z)..=F_{n_max}(z)` by running the Faber recurrence on values.
pub fn faber_values(geom: &CurveGeometry, n_max: usize, z: Complex64) -> Vec<Complex64> {
    let (b, b0, tail) = geom.laurent_coefficients();
    let mut vals = Vec::with_capacity(n_max + 1);
    vals.push(Complex64::new(1.0, 0.0));
    for n in 1..=n_max {
        let mut v = (z - b0) * vals[n - 1];
        for k in 1..n.min(tail.len() + 1) {
            v -= tail[k - 1] * vals[n - 1 - k];
        }
        if n >= 2 && n - 1 <= tail.len() {
            v -= tail[n - 2] * (n as f64 - 1.0);
        }
        vals.push(v / b);
    }
    vals
}

/// `max_j |F_n(z_j) / Phi(z_j)^n - 1|` over `m` points `z_j` of the level curve `Gamma_R`.
pub fn faber_asymptotic_deviation(
    geom: &CurveGeometry,
    n: usize,
    radius: f64,
    m: usize,
) -> Result<f64> {
    geom.require_curve("faber_asymptotic_deviation")?;
    if !(radius > 1.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "level-curve radius must exceed 1, got {radius}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need m >= 1 sample points".into()));
    }
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let w = Complex64::from_polar(radius, 2.0 * PI * j as f64 / m as f64);
        let z = geom.psi(w);
        let f = faber_values(geom, n, z)[n];
        worst = worst.max((f / w.powu(n as u32) - 1.0).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn exterior_map_examples() {
        let circle = CurveGeometry::unit_circle();
        assert!(close(exterior_map(&circle, c64(2.0, 0.0)).unwrap(), c64(2.0, 0.0), 1e-15));

        let interval = CurveGeometry::interval();
        let w = exterior_map(&interval, c64(2.0, 0.0)).unwrap();
        assert!(close(w, c64(2.0 + 3f64.sqrt(), 0.0), 1e-12));

        let ellipse = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        assert!(close(exterior_map(&ellipse, c64(2.0, 0.0)).unwrap(), c64(1.0, 0.0), 1e-12));
    }

    #[test]
    fn inverse_map_examples() {
        let circle = CurveGeometry::unit_circle();
        let w = c64(0.3, -1.7);
        assert_eq!(inverse_map(&circle, w).unwrap(), w);

        let ellipse = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        assert!(close(inverse_map(&ellipse, c64(1.0, 0.0)).unwrap(), c64(2.0, 0.0), 1e-15));

        // Joukowski: (w + 1/w) / 2 at w = 2 + sqrt 3.
        let interval = CurveGeometry::interval();
        let w = c64(2.0 + 3f64.sqrt(), 0.0);
        let oracle = (w + w.inv()) / 2.0;
        assert!(close(oracle, c64(2.0, 0.0), 1e-14));
        assert!(close(inverse_map(&interval, w).unwrap(), oracle, 1e-14));

        assert!(matches!(
            inverse_map(&interval, c64(0.5, 0.0)),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn green_function_examples() {
        let circle = CurveGeometry::unit_circle();
        assert!((green_function(&circle, c64(2.0, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        let interval = CurveGeometry::interval();
        let g = green_function(&interval, c64(2.0, 0.0)).unwrap();
        assert!((g - (2.0 + 3f64.sqrt()).ln()).abs() < 1e-14);
        let ellipse = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        for z in level_curve_nodes(&ellipse, 1.0, 16).unwrap() {
            assert!(green_function(&ellipse, z).unwrap().abs() < 1e-12);
        }
        assert!(matches!(
            green_function(&circle, c64(0.5, 0.0)),
            Err(Error::InsideDomain { .. })
        ));
    }

    #[test]
    fn ellipse_interior_rejected() {
        let ellipse = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        // The focal segment is where the closed form reaches its inner radius.
        assert!(matches!(
            exterior_map(&ellipse, c64(0.0, 0.0)),
            Err(Error::InsideDomain { .. })
        ));
        // Inside the ellipse but outside the focal segment: continuation collar.
        let w = exterior_map(&ellipse, c64(0.0, 0.9)).unwrap();
        assert!(w.norm() < 1.0 && w.norm() > ellipse.min_radius());
    }

    #[test]
    fn laurent_newton_inversion() {
        let g = CurveGeometry::laurent(1.2, c64(0.3, -0.1), vec![c64(0.2, 0.05), c64(-0.03, 0.02)])
            .unwrap();
        let z = c64(2.5, 1.0);
        let w = exterior_map(&g, z).unwrap();
        assert!((g.psi(w) - z).norm() <= 1e-10);
        assert!(w.norm() > 1.0);
    }

    #[test]
    fn laurent_rejects_self_intersection() {
        // b1 = capacity makes Psi degenerate (a slit) on |w| = 1.
        let err = CurveGeometry::laurent(1.0, c64(0.0, 0.0), vec![c64(0.0, 0.0), c64(1.5, 0.0)]);
        assert!(matches!(err, Err(Error::InvalidGeometry(_))));
        assert!(CurveGeometry::laurent(0.0, c64(0.0, 0.0), vec![]).is_err());
        assert!(CurveGeometry::ellipse(1.0, 2.0).is_err());
    }

    #[test]
    fn level_curve_examples() {
        let circle = CurveGeometry::unit_circle();
        let nodes = level_curve_nodes(&circle, 1.0, 4).unwrap();
        for (n, e) in nodes.iter().zip([c64(1.0, 0.0), c64(0.0, 1.0), c64(-1.0, 0.0), c64(0.0, -1.0)]) {
            assert!(close(*n, e, 1e-15));
        }
        let ellipse = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        let nodes = level_curve_nodes(&ellipse, 1.0, 2).unwrap();
        assert!(close(nodes[0], c64(2.0, 0.0), 1e-15) && close(nodes[1], c64(-2.0, 0.0), 1e-15));

        let interval = CurveGeometry::interval();
        let m = 12;
        for (j, z) in level_curve_nodes(&interval, 1.0, m).unwrap().into_iter().enumerate() {
            let t = 2.0 * PI * j as f64 / m as f64;
            assert!(close(z, c64(t.cos(), 0.0), 1e-15));
        }
        assert!(matches!(
            level_curve_nodes(&interval, 0.9, 4),
            Err(Error::DomainViolation { .. })
        ));
        // Sub-unit level curves are available for the closed-form ellipse.
        assert!(level_curve_nodes(&ellipse, 0.8, 4).is_ok());
    }

    /// Taylor coefficient of `Psi'/(Psi - z)` at `w^{-n-1}` by the trapezoid rule
    /// on a circle enclosing `Phi(z)`.
    fn faber_by_contour(geom: &CurveGeometry, n: usize, z: Complex64) -> Complex64 {
        let rho = 3.0 * exterior_map(geom, z).map(|w| w.norm()).unwrap_or(1.0).max(2.0);
        let m = 2048;
        let mut acc = c64(0.0, 0.0);
        for j in 0..m {
            let w = Complex64::from_polar(rho, 2.0 * PI * j as f64 / m as f64);
            acc += w.powu(n as u32 + 1) * geom.psi_prime(w) / (geom.psi(w) - z);
        }
        acc / m as f64
    }

    #[test]
    fn faber_interval_matches_contour_oracle() {
        let interval = CurveGeometry::interval();
        let table = faber_polynomials(&interval, 6);
        // Oracle values at a few points reproduce F_1 = 2z, F_2 = 4z^2 - 2.
        for z in [c64(0.3, 0.1), c64(-0.7, 0.4), c64(1.1, -0.2)] {
            let f1 = faber_by_contour(&interval, 1, z);
            let f2 = faber_by_contour(&interval, 2, z);
            assert!(close(f1, z * 2.0, 1e-10));
            assert!(close(f2, z * z * 4.0 - 2.0, 1e-10));
            for n in 0..=6 {
                assert!(close(table.eval(n, z), faber_by_contour(&interval, n, z), 1e-9));
            }
        }
        assert_eq!(table.row(1), &[c64(0.0, 0.0), c64(2.0, 0.0)]);
        assert_eq!(table.row(2), &[c64(-2.0, 0.0), c64(0.0, 0.0), c64(4.0, 0.0)]);
    }

    #[test]
    fn faber_laurent_matches_contour_oracle() {
        let g = CurveGeometry::laurent(1.3, c64(0.2, 0.1), vec![c64(0.25, 0.1), c64(0.0, -0.05), c64(0.02, 0.0)])
            .unwrap();
        let table = faber_polynomials(&g, 8);
        let z = c64(0.4, -0.3);
        for n in 0..=8 {
            let oracle = faber_by_contour(&g, n, z);
            assert!(close(table.eval(n, z), oracle, 1e-9 * oracle.norm().max(1.0)), "n = {n}");
            assert!(close(faber_values(&g, n, z)[n], oracle, 1e-9 * oracle.norm().max(1.0)));
        }
    }

    #[test]
    fn faber_circle_is_monomial() {
        let table = faber_polynomials(&CurveGeometry::unit_circle(), 7);
        for n in 0..=7 {
            for (k, c) in table.row(n).iter().enumerate() {
                let expect = if k == n { 1.0 } else { 0.0 };
                assert_eq!(*c, c64(expect, 0.0));
            }
        }
        let dev = faber_asymptotic_deviation(&CurveGeometry::unit_circle(), 9, 1.3, 64).unwrap();
        assert!(dev < 1e-14);
    }

    #[test]
    fn faber_leading_coefficient_is_capacity_power() {
        let geoms = [
            CurveGeometry::ellipse(2.0, 1.0).unwrap(),
            CurveGeometry::interval(),
            CurveGeometry::laurent(0.7, c64(0.1, 0.0), vec![c64(0.1, 0.2)]).unwrap(),
        ];
        for g in &geoms {
            let table = faber_polynomials(g, 25);
            for n in 0..=25 {
                let row = table.row(n);
                assert_eq!(row.len(), n + 1);
                let expect = g.capacity().powi(-(n as i32));
                assert!((row[n].norm() - expect).abs() <= 1e-10 * expect);
            }
        }
    }

    #[test]
    fn faber_deviation_decays_on_ellipse() {
        let e = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        let devs: Vec<f64> = [5, 10, 15, 20]
            .iter()
            .map(|&n| faber_asymptotic_deviation(&e, n, 1.5, 256).unwrap())
            .collect();
        for pair in devs.windows(2) {
            assert!(pair[1] <= 2.0 * pair[0], "{devs:?}");
        }
        assert!(devs[3] < 1e-3);
        assert!(matches!(
            faber_asymptotic_deviation(&CurveGeometry::interval(), 5, 1.5, 16),
            Err(Error::CurveRequired(_))
        ));
    }

    #[test]
    fn config_roundtrip_of_kinds() {
        let json = r#"{"kind":"laurent_curve","capacity":1.0,"center":[0.0,0.0],"tail":[[0.1,0.0]]}"#;
        let g: CurveGeometry = serde_json::from_str(json).unwrap();
        let back: CurveGeometry = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(g, back);
        let bad = r#"{"kind":"ellipse","a":1.0,"b":3.0}"#;
        assert!(serde_json::from_str::<CurveGeometry>(bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn geometries() -> Vec<CurveGeometry> {
            vec![
                CurveGeometry::unit_circle(),
                CurveGeometry::ellipse(2.0, 1.0).unwrap(),
                CurveGeometry::ellipse(1.3, 0.4).unwrap(),
                CurveGeometry::interval(),
                CurveGeometry::laurent(1.0, c64(0.5, 0.2), vec![c64(0.2, 0.1), c64(0.05, 0.0)]).unwrap(),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn roundtrip_phi_psi(r in 1.05f64..3.0, t in 0.0f64..(2.0 * PI)) {
                let w = Complex64::from_polar(r, t);
                for g in geometries() {
                    let z = inverse_map(&g, w).unwrap();
                    let back = exterior_map(&g, z).unwrap();
                    prop_assert!((back - w).norm() <= 1e-8, "{} {w} {back}", g.name());
                    prop_assert!(green_function(&g, z).unwrap() >= 0.0);
                }
            }
        }
    }
}
