//! Moment matrices, Bergman and Christoffel functions, reproducing kernels.
//!
//! `B_n(mu, z) = v(z)^* G^{-1} v(z)` is never formed through `G^{-1}`. Nodes
//! are first mapped by an affine [`Preconditioner`]; an Arnoldi process on the
//! preconditioned nodes produces a polynomial basis of `P_n` that is
//! orthonormal for the uniform measure on the nodes; the `sqrt(w)`-weighted
//! basis matrix is then reduced by Householder QR to a triangular `R`, and
//! `B_n(z) = |R^{-*} conj(phi(z))|^2`. Because `P_n` is closed under affine
//! substitution and basis changes, the result is the Bergman function of the
//! original measure.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::geometry::{exterior_map, CurveGeometry};
use crate::measure::DiscreteMeasure;
use crate::{Complex64, Error, Result};

/// Factorizations whose triangular factor exceeds this condition number are refused.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative size below which an Arnoldi subdiagonal counts as breakdown.
const BREAKDOWN_TOL: f64 = 1e-13;
/// Certificate gap above which a measure is not treated as optimal.
pub const NOT_OPTIMAL_GAP: f64 = 1e-2;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Affine change of variable `u = (z - center) / scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preconditioner {
    pub center: Complex64,
    pub scale: f64,
}

impl Preconditioner {
    pub fn identity() -> Self {
        Preconditioner {
            center: ZERO,
            scale: 1.0,
        }
    }

    /// Centroid of the nodes and their largest distance to it.
    pub fn from_nodes(nodes: &[Complex64]) -> Self {
        let center = centroid(nodes);
        let radius = nodes.iter().map(|x| (x - center).norm()).fold(0.0, f64::max);
        Preconditioner {
            center,
            scale: if radius > 0.0 { radius } else { 1.0 },
        }
    }

    /// Centroid of the nodes, scaled by the capacity of the geometry.
    pub fn for_geometry(nodes: &[Complex64], geom: &CurveGeometry) -> Self {
        Preconditioner {
            center: centroid(nodes),
            scale: geom.capacity(),
        }
    }

    #[inline]
    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z - self.center) / self.scale
    }
}

fn centroid(nodes: &[Complex64]) -> Complex64 {
    if nodes.is_empty() {
        return ZERO;
    }
    nodes.iter().sum::<Complex64>() / nodes.len() as f64
}

/// Polynomial basis `phi_0..phi_n` produced by Arnoldi on a node set.
///
/// `phi_k(u) = (u phi_{k-1}(u) - sum_{j<k} h[j][k-1] phi_j(u)) / h[k][k-1]`.
#[derive(Clone, Debug)]
pub struct ArnoldiBasis {
    precond: Preconditioner,
    degree: usize,
    /// Column `k - 1` of the Hessenberg matrix: `h[k-1][j]`, `j = 0..=k`.
    hess: Vec<Vec<Complex64>>,
}

impl ArnoldiBasis {
    /// Builds the basis and returns it with its values at the nodes (`m x (n+1)`).
    pub fn build(
        nodes: &[Complex64],
        precond: Preconditioner,
        degree: usize,
    ) -> Result<(Self, DMatrix<Complex64>)> {
        let m = nodes.len();
        if m == 0 {
            return Err(Error::EmptySupport);
        }
        let u: Vec<Complex64> = nodes.iter().map(|&z| precond.apply(z)).collect();
        let inv_m = 1.0 / m as f64;
        let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
            a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * inv_m
        };
        let mut q: Vec<Vec<Complex64>> = vec![vec![ONE; m]];
        let mut hess = Vec::with_capacity(degree);
        for k in 1..=degree {
            let mut v: Vec<Complex64> = u.iter().zip(&q[k - 1]).map(|(a, b)| a * b).collect();
            let start = dot(&v, &v).re.sqrt();
            let mut h = vec![ZERO; k + 1];
            // Two Gram-Schmidt passes keep the columns orthogonal to working precision.
            for _ in 0..2 {
                for (j, qj) in q.iter().enumerate() {
                    let c = dot(qj, &v);
                    h[j] += c;
                    for (vi, qi) in v.iter_mut().zip(qj) {
                        *vi -= c * qi;
                    }
                }
            }
            let norm = dot(&v, &v).re.sqrt();
            if !(norm > BREAKDOWN_TOL * start.max(f64::MIN_POSITIVE)) {
                return Err(Error::RankDeficient {
                    support: k,
                    degree,
                });
            }
            h[k] = Complex64::from(norm);
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            q.push(v);
            hess.push(h);
        }
        let values = DMatrix::from_fn(m, degree + 1, |i, k| q[k][i]);
        Ok((
            ArnoldiBasis {
                precond,
                degree,
                hess,
            },
            values,
        ))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn preconditioner(&self) -> Preconditioner {
        self.precond
    }

    /// `(phi_0(z), ..., phi_n(z))`.
    pub fn eval(&self, z: Complex64) -> DVector<Complex64> {
        let u = self.precond.apply(z);
        let mut out = DVector::from_element(self.degree + 1, ONE);
        for k in 1..=self.degree {
            let h = &self.hess[k - 1];
            let mut v = u * out[k - 1];
            for j in 0..k {
                v -= h[j] * out[j];
            }
            out[k] = v / h[k];
        }
        out
    }

    /// Monomial coefficients (in the original variable `z`) of every basis polynomial.
    pub fn monomial_coefficients(&self) -> Vec<Vec<Complex64>> {
        let s = self.precond.scale;
        let c = self.precond.center;
        // u = z / s - c / s
        let u = [-c / s, Complex64::from(1.0 / s)];
        let mut polys: Vec<Vec<Complex64>> = vec![vec![ONE]];
        for k in 1..=self.degree {
            let h = &self.hess[k - 1];
            let mut p = vec![ZERO; k + 1];
            for (i, a) in polys[k - 1].iter().enumerate() {
                p[i] += u[0] * a;
                p[i + 1] += u[1] * a;
            }
            for (j, pj) in polys.iter().enumerate() {
                for (i, a) in pj.iter().enumerate() {
                    p[i] -= h[j] * a;
                }
            }
            for x in p.iter_mut() {
                *x /= h[k];
            }
            polys.push(p);
        }
        polys
    }
}

/// Triangular factor of `diag(sqrt(w)) Phi` for a measure at a fixed degree.
///
/// Orthonormal polynomials of the measure are nested, so the leading
/// `(k+1) x (k+1)` block of `R` is the factor at degree `k`, and one
/// factorization yields `B_k` for all `k <= n`.
#[derive(Clone, Debug)]
pub struct ChristoffelFactorization {
    basis: ArnoldiBasis,
    r: DMatrix<Complex64>,
    condition: f64,
}

impl ChristoffelFactorization {
    pub fn new(mu: &DiscreteMeasure, n: usize) -> Result<Self> {
        Self::with_preconditioner(mu, n, Preconditioner::from_nodes(mu.nodes()))
    }

    pub fn with_preconditioner(
        mu: &DiscreteMeasure,
        n: usize,
        precond: Preconditioner,
    ) -> Result<Self> {
        let support = mu.support_size();
        if support < n + 1 {
            return Err(Error::RankDeficient { support, degree: n });
        }
        let (basis, values) = ArnoldiBasis::build(mu.nodes(), precond, n)?;
        Self::from_basis(basis, &values, mu.weights())
    }

    /// Factorizes `diag(sqrt(w)) values` for a prebuilt basis.
    pub fn from_basis(
        basis: ArnoldiBasis,
        values: &DMatrix<Complex64>,
        weights: &[f64],
    ) -> Result<Self> {
        let n = basis.degree();
        let r = weighted_triangular_factor(values, weights, n)?;
        let condition = condition_number(&r);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                degree: n,
                condition,
            });
        }
        Ok(ChristoffelFactorization {
            basis,
            r,
            condition,
        })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn basis(&self) -> &ArnoldiBasis {
        &self.basis
    }

    /// `y(z) = R^{-*} conj(phi(z))`; then `K_n(x, z) = y(x)^* y(z)`.
    pub fn kernel_vector(&self, z: Complex64) -> DVector<Complex64> {
        let a = self.basis.eval(z).map(|c| c.conj());
        solve_adjoint_lower(&self.r, a)
    }

    pub fn bergman(&self, z: Complex64) -> f64 {
        self.kernel_vector(z).norm_squared()
    }

    /// `[B_0(z), B_1(z), ..., B_n(z)]`.
    pub fn bergman_by_degree(&self, z: Complex64) -> Vec<f64> {
        let y = self.kernel_vector(z);
        let mut acc = 0.0;
        y.iter()
            .map(|c| {
                acc += c.norm_sqr();
                acc
            })
            .collect()
    }

    pub fn kernel(&self, x: Complex64, z: Complex64) -> Complex64 {
        self.kernel_vector(x).dotc(&self.kernel_vector(z))
    }

    /// Coefficients, in the Arnoldi basis, of `K_n(., z)`.
    pub fn kernel_coefficients(&self, z: Complex64) -> DVector<Complex64> {
        solve_upper(&self.r, self.kernel_vector(z))
    }
}

/// Upper-triangular factor of `diag(sqrt(w)) values` using only rows with positive weight.
pub(crate) fn weighted_triangular_factor(
    values: &DMatrix<Complex64>,
    weights: &[f64],
    n: usize,
) -> Result<DMatrix<Complex64>> {
    let rows: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    if rows.len() < n + 1 {
        return Err(Error::RankDeficient {
            support: rows.len(),
            degree: n,
        });
    }
    let a = DMatrix::from_fn(rows.len(), n + 1, |i, k| {
        values[(rows[i], k)] * weights[rows[i]].sqrt()
    });
    Ok(a.qr().r())
}

pub(crate) fn condition_number(r: &DMatrix<Complex64>) -> f64 {
    let sv = r.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Solves `R^* y = a` by forward substitution.
pub(crate) fn solve_adjoint_lower(r: &DMatrix<Complex64>, mut a: DVector<Complex64>) -> DVector<Complex64> {
    let n = r.nrows();
    for i in 0..n {
        let mut s = a[i];
        for j in 0..i {
            s -= r[(j, i)].conj() * a[j];
        }
        a[i] = s / r[(i, i)].conj();
    }
    a
}

/// Solves `R x = b` by back substitution.
pub(crate) fn solve_upper(r: &DMatrix<Complex64>, mut b: DVector<Complex64>) -> DVector<Complex64> {
    let n = r.nrows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in (i + 1)..n {
            s -= r[(i, j)] * b[j];
        }
        b[i] = s / r[(i, i)];
    }
    b
}

/// Moment matrix `m_{j,k} = sum_i w_i u_i^j conj(u_i)^k` in the preconditioned variable.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub degree: usize,
    pub entries: DMatrix<Complex64>,
    pub preconditioner: Preconditioner,
}

impl GramMatrix {
    /// Numerical rank from a diagonally pivoted Cholesky factorization.
    pub fn rank(&self) -> usize {
        let mut a = self.entries.clone();
        let n = a.nrows();
        let scale = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, a[(perm[i], perm[i])].re))
                .fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= tol {
                return k;
            }
            perm.swap(k, p);
            let pk = perm[k];
            let d = best.sqrt();
            for &pi in &perm[k + 1..] {
                a[(pi, pk)] /= d;
            }
            for i in (k + 1)..n {
                for j in (k + 1)..=i {
                    let (pi, pj) = (perm[i], perm[j]);
                    let upd = a[(pi, pk)] * a[(pj, pk)].conj();
                    a[(pi, pj)] -= upd;
                    if i != j {
                        a[(pj, pi)] = a[(pi, pj)].conj();
                    }
                }
            }
        }
        n
    }

    pub fn is_positive_definite(&self) -> bool {
        self.rank() == self.degree + 1
    }
}

pub fn gram_matrix(mu: &DiscreteMeasure, n: usize) -> GramMatrix {
    let precond = Preconditioner::from_nodes(mu.nodes());
    let mut entries = DMatrix::from_element(n + 1, n + 1, ZERO);
    let mut powers = vec![ZERO; n + 1];
    for (x, w) in mu.iter() {
        let u = precond.apply(x);
        let mut p = ONE;
        for slot in powers.iter_mut() {
            *slot = p;
            p *= u;
        }
        for j in 0..=n {
            for k in j..=n {
                entries[(j, k)] += powers[j] * powers[k].conj() * w;
            }
        }
    }
    for j in 0..=n {
        entries[(j, j)].im = 0.0;
        for k in (j + 1)..=n {
            entries[(k, j)] = entries[(j, k)].conj();
        }
    }
    GramMatrix {
        degree: n,
        entries,
        preconditioner: precond,
    }
}

/// `B_n`, `lambda_n` and, when a geometry is supplied, their tilde versions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BergmanEvaluation {
    pub degree: usize,
    pub point: Complex64,
    pub bergman: f64,
    pub christoffel: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tilde_bergman: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tilde_christoffel: Option<f64>,
}

pub fn bergman_function(mu: &DiscreteMeasure, n: usize, z: Complex64) -> Result<BergmanEvaluation> {
    let b = ChristoffelFactorization::new(mu, n)?.bergman(z);
    Ok(BergmanEvaluation {
        degree: n,
        point: z,
        bergman: b,
        christoffel: 1.0 / b,
        tilde_bergman: None,
        tilde_christoffel: None,
    })
}

/// As [`bergman_function`], adding `B_n / |Phi(z)|^{2n}` and its reciprocal.
pub fn bergman_function_on(
    geom: &CurveGeometry,
    mu: &DiscreteMeasure,
    n: usize,
    z: Complex64,
) -> Result<BergmanEvaluation> {
    let mut eval = bergman_function(mu, n, z)?;
    let phi = exterior_map(geom, z)?.norm();
    let tilde = eval.bergman / phi.powi(2 * n as i32);
    eval.tilde_bergman = Some(tilde);
    eval.tilde_christoffel = Some(1.0 / tilde);
    Ok(eval)
}

/// Reproducing kernel `K_n(z, w) = sum_k q_k(z) conj(q_k(w))`.
pub fn reproducing_kernel(
    mu: &DiscreteMeasure,
    n: usize,
    z: Complex64,
    w: Complex64,
) -> Result<Complex64> {
    Ok(ChristoffelFactorization::new(mu, n)?.kernel(z, w))
}

/// Polynomial of extremal growth at `z0`, normalized to unit sup norm on a grid.
#[derive(Clone, Debug)]
pub struct ExtremalPolynomial {
    basis: ArnoldiBasis,
    coefficients: DVector<Complex64>,
    /// `M_n = |p_n(z0)|` with `max_grid |p_n| = 1`.
    pub growth: f64,
    /// Certificate gap of the measure the polynomial was built from.
    pub certificate_gap: f64,
}

impl ExtremalPolynomial {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.basis
            .eval(z)
            .iter()
            .zip(self.coefficients.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Monomial coefficients in `z`, constant term first.
    pub fn monomial_coefficients(&self) -> Vec<Complex64> {
        let polys = self.basis.monomial_coefficients();
        let mut out = vec![ZERO; self.basis.degree() + 1];
        for (c, p) in self.coefficients.iter().zip(&polys) {
            for (i, a) in p.iter().enumerate() {
                out[i] += c * a;
            }
        }
        out
    }
}

/// Builds `p_n = k / max_grid |k|` from the Christoffel minimizer
/// `k(z) = K_n(z, z0) / K_n(z0, z0)` of an (approximately) optimal measure.
pub fn extremal_growth_polynomial(
    nu: &DiscreteMeasure,
    n: usize,
    z0: Complex64,
    grid: &[Complex64],
) -> Result<ExtremalPolynomial> {
    let fac = ChristoffelFactorization::new(nu, n)?;
    let y0 = fac.kernel_vector(z0);
    let b = y0.norm_squared();
    let kernel_max = grid
        .iter()
        .map(|&x| fac.kernel_vector(x).dotc(&y0).norm())
        .fold(0.0, f64::max);
    let gap = kernel_max * kernel_max / b - 1.0;
    if gap > NOT_OPTIMAL_GAP {
        return Err(Error::NotOptimal {
            gap,
            limit: NOT_OPTIMAL_GAP,
        });
    }
    // k(x) = K(x, z0) / B, so max_grid |k| = kernel_max / B and M_n = B / kernel_max.
    let coefficients = fac.kernel_coefficients(z0) / Complex64::from(kernel_max);
    Ok(ExtremalPolynomial {
        basis: fac.basis.clone(),
        coefficients,
        growth: b / kernel_max,
        certificate_gap: gap,
    })
}

/// `tilde_B_{N-n} / tilde_B_N - 1` given `|Phi(z)|` directly. Works for arcs too.
pub fn tilde_defect_with_modulus(
    mu: &DiscreteMeasure,
    phi_modulus: f64,
    big_n: usize,
    n: usize,
    z: Complex64,
) -> Result<f64> {
    if n == 0 || n >= big_n {
        return Err(Error::InvalidArgument(format!(
            "need 0 < n < N, got n = {n}, N = {big_n}"
        )));
    }
    let b = ChristoffelFactorization::new(mu, big_n)?.bergman_by_degree(z);
    // tilde_B_{N-n} / tilde_B_N = B_{N-n} |Phi|^{2n} / B_N
    Ok(b[big_n - n] * phi_modulus.powi(2 * n as i32) / b[big_n] - 1.0)
}

/// `tilde_B_{N-n}(mu, z) / tilde_B_N(mu, z) - 1`; nonpositive on the circle.
pub fn tilde_monotonicity_defect(
    geom: &CurveGeometry,
    mu: &DiscreteMeasure,
    big_n: usize,
    n: usize,
    z: Complex64,
) -> Result<f64> {
    geom.require_curve("tilde_monotonicity_defect")?;
    let phi = exterior_map(geom, z)?.norm();
    tilde_defect_with_modulus(mu, phi, big_n, n, z)
}
