//! Optimal prediction measures: minimizing `B_n(nu, z0)` over probability
//! measures on a boundary grid.
//!
//! The solver is a vertex-direction (Frank-Wolfe) method with Wolfe away
//! steps. With `M(w) = sum_i w_i a_i a_i^*`, `a_i = conj(phi(x_i))` in an
//! Arnoldi basis, the objective is `B(w) = a_0^* M(w)^{-1} a_0` and its
//! gradient coordinates are `-|K_i|^2` with `K_i = a_i^* M^{-1} a_0`. The
//! inverse is carried through Sherman-Morrison updates and rebuilt from a QR
//! factorization every [`REFACTOR_EVERY`] updates.
//!
//! Vertex steps alone converge slowly near the optimum, so whenever the
//! weights on the current support are not yet balanced (`|K_i|^2` unequal
//! there) the solver takes a damped Newton step for `B` restricted to that
//! face instead. Vertex steps then only add new support points.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::{
    condition_number, extremal_growth_polynomial, weighted_triangular_factor, ArnoldiBasis,
    ChristoffelFactorization, Preconditioner, MAX_CONDITION, NOT_OPTIMAL_GAP,
};
use crate::geometry::{exterior_map, CurveGeometry};
use crate::io::fmt_f64;
use crate::measure::{balayage_point_mass, discretize_boundary, moment_discrepancy, DiscreteMeasure};
use crate::{Complex64, Error, Result};

/// Weights below this are zeroed (and the rest renormalized) in the output.
pub const WEIGHT_FLOOR: f64 = 1e-8;
/// Rank-one updates between full refactorizations.
pub const REFACTOR_EVERY: usize = 50;
/// Largest support on which Newton steps are taken; larger supports are first
/// thinned by away steps.
const NEWTON_MAX_SUPPORT: usize = 1500;
/// Number of holomorphic moments compared against the balayage.
pub const MOMENT_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpmOptions {
    pub gap_tol: f64,
    pub max_iters: usize,
}

impl Default for OpmOptions {
    fn default() -> Self {
        OpmOptions {
            gap_tol: 1e-6,
            max_iters: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpmSolution {
    pub degree: usize,
    pub point: Complex64,
    pub measure: DiscreteMeasure,
    pub objective: f64,
    pub certificate_gap: f64,
    pub iterations: usize,
    /// Grid indices with weight above [`WEIGHT_FLOOR`].
    pub support: Vec<usize>,
}

struct Solver<'a> {
    values: &'a DMatrix<Complex64>,
    a0: DVector<Complex64>,
    weights: Vec<f64>,
    minv: DMatrix<Complex64>,
    updates: usize,
}

impl<'a> Solver<'a> {
    fn refactor(&mut self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        for w in self.weights.iter_mut() {
            *w /= total;
        }
        let n = self.values.ncols() - 1;
        let r = weighted_triangular_factor(self.values, &self.weights, n)?;
        let condition = condition_number(&r);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned {
                degree: n,
                condition,
            });
        }
        let rinv = r
            .solve_upper_triangular(&DMatrix::identity(n + 1, n + 1))
            .ok_or(Error::RankDeficient {
                support: self.weights.iter().filter(|&&w| w > 0.0).count(),
                degree: n,
            })?;
        self.minv = &rinv * rinv.adjoint();
        self.updates = 0;
        Ok(())
    }

    /// One damped Newton step for `B` restricted to the face spanned by the
    /// current support. Returns `false` when the step does not decrease `B`;
    /// the iterate is then left unchanged.
    fn newton_step(&mut self, b: f64, c: &[f64]) -> Result<bool> {
        let support: Vec<usize> = (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect();
        let s = support.len();
        let np1 = self.values.ncols();
        let a = DMatrix::from_fn(np1, s, |k, j| self.values[(support[j], k)].conj());
        let minv_a = &self.minv * &a;
        let gram = a.adjoint() * &minv_a;
        let kern = minv_a.adjoint() * &self.a0;
        // Hessian 2 Re(conj(K_i) G_ij K_j), gradient -|K_i|^2.
        let mut kkt = DMatrix::<f64>::zeros(s + 1, s + 1);
        let mut rhs = DVector::<f64>::zeros(s + 1);
        for i in 0..s {
            for j in 0..s {
                kkt[(i, j)] = 2.0 * (kern[i].conj() * gram[(i, j)] * kern[j]).re;
            }
            kkt[(i, s)] = 1.0;
            kkt[(s, i)] = 1.0;
            rhs[i] = c[support[i]];
        }
        let scale = (0..s).map(|i| kkt[(i, i)]).fold(0.0, f64::max);
        for i in 0..s {
            kkt[(i, i)] += 1e-12 * scale;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else {
            return Ok(false);
        };
        let d: Vec<f64> = sol.iter().take(s).cloned().collect();
        let slope: f64 = -(0..s).map(|i| c[support[i]] * d[i]).sum::<f64>();
        if !(slope < 0.0) {
            return Ok(false);
        }
        let mut alpha_max = f64::INFINITY;
        let mut blocking = usize::MAX;
        for i in 0..s {
            if d[i] < 0.0 {
                let r = -self.weights[support[i]] / d[i];
                if r < alpha_max {
                    alpha_max = r;
                    blocking = i;
                }
            }
        }
        let saved = (self.weights.clone(), self.minv.clone(), self.updates);
        // First a full step clipped to the face, which can drop many support
        // points at once; then backtracking inside the feasible segment,
        // dropping the blocking point when the boundary is reached.
        let mut candidates = vec![(1.0, true)];
        let mut alpha = alpha_max.min(1.0);
        while alpha > 1e-12 {
            candidates.push((alpha, false));
            alpha *= 0.5;
        }
        for (alpha, clip) in candidates {
            if clip && alpha <= alpha_max {
                continue;
            }
            let mut total = 0.0;
            for (i, &idx) in support.iter().enumerate() {
                let w = saved.0[idx] + alpha * d[i];
                self.weights[idx] = if w > 0.0 && !(alpha == alpha_max && i == blocking) {
                    w
                } else {
                    0.0
                };
                total += self.weights[idx];
            }
            for &idx in &support {
                self.weights[idx] /= total;
            }
            let accepted = match self.refactor() {
                Ok(()) => {
                    let trial = self.a0.dotc(&(&self.minv * &self.a0)).re;
                    trial < b && trial <= b + 1e-4 * alpha.min(alpha_max) * slope
                }
                Err(Error::IllConditioned { .. }) | Err(Error::RankDeficient { .. }) => false,
                Err(e) => return Err(e),
            };
            if accepted {
                return Ok(true);
            }
        }
        (self.weights, self.minv, self.updates) = saved;
        Ok(false)
    }

    /// `(B, |K_i|^2 for every node)` at the current weights.
    fn kernel_state(&self) -> (f64, Vec<f64>) {
        let g = &self.minv * &self.a0;
        let b = self.a0.dotc(&g).re;
        // K_i = a_i^* g = sum_k phi_k(x_i) g_k
        let k = self.values * g;
        (b, k.iter().map(|c| c.norm_sqr()).collect())
    }

    fn row(&self, i: usize) -> DVector<Complex64> {
        self.values.row(i).transpose().map(|c| c.conj())
    }

    /// Moves mass toward (`t > 0`) or away from (`t < 0`) vertex `i`, where
    /// `w <- (w + t e_i) / (1 + t)`.
    fn step(&mut self, i: usize, t: f64, u: &DVector<Complex64>, d: f64) {
        let scale = 1.0 + t;
        for w in self.weights.iter_mut() {
            *w /= scale;
        }
        if t <= -self.weights[i] * scale {
            self.weights[i] = 0.0;
        } else {
            self.weights[i] += t / scale;
        }
        let coef = Complex64::from(t / (1.0 + t * d));
        self.minv.gerc(-coef, u, u, Complex64::from(1.0));
        self.minv *= Complex64::from(scale);
        self.updates += 1;
    }
}

/// Exact line search along `t`: minimizes `(1 + t)(B + t A) / (1 + t d)`,
/// `A = B d - c`, over `t >= lo`.
fn line_search(b: f64, c: f64, d: f64, lo: f64) -> f64 {
    let a = b * d - c;
    let disc = if a > 0.0 { c * (d - 1.0) / a } else { f64::NAN };
    let t = if disc >= 0.0 {
        (disc.sqrt() - 1.0) / d
    } else if c > b {
        // Degenerate direction (a_i parallel to M^{-1} a_0 direction); take a
        // large but finite step.
        1e6
    } else {
        lo
    };
    t.max(lo)
}

/// Minimizes `B_n(nu, z0)` over probability measures `nu` on `nodes`.
pub fn solve_opm(nodes: &[Complex64], z0: Complex64, n: usize, opts: &OpmOptions) -> Result<OpmSolution> {
    if !(opts.gap_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap_tol must be positive, got {}",
            opts.gap_tol
        )));
    }
    if nodes.len() < n + 1 {
        return Err(Error::RankDeficient {
            support: nodes.len(),
            degree: n,
        });
    }
    if nodes.iter().any(|x| (x - z0).norm() <= 1e-12 * (1.0 + z0.norm())) {
        return Err(Error::InvalidArgument(
            "z0 coincides with a grid node".to_string(),
        ));
    }
    let uniform = DiscreteMeasure::from_unnormalized(nodes.to_vec(), vec![1.0; nodes.len()])?;
    if uniform.len() != nodes.len() {
        return Err(Error::InvalidArgument("grid nodes must be distinct".to_string()));
    }
    let (basis, values) = ArnoldiBasis::build(nodes, Preconditioner::from_nodes(nodes), n)?;
    let a0 = basis.eval(z0).map(|c| c.conj());
    let m = nodes.len();
    let mut solver = Solver {
        values: &values,
        a0,
        weights: vec![1.0 / m as f64; m],
        minv: DMatrix::zeros(n + 1, n + 1),
        updates: 0,
    };
    solver.refactor()?;

    let mut iterations = 0;
    let converged = loop {
        let (b, c) = solver.kernel_state();
        let mut best = 0;
        for (i, &ci) in c.iter().enumerate() {
            if ci > c[best] {
                best = i;
            }
        }
        let gap = c[best] / b - 1.0;
        if gap <= opts.gap_tol {
            if solver.updates == 0 {
                break true;
            }
            // Confirm with a fresh factorization before stopping.
            solver.refactor()?;
            continue;
        }
        if iterations >= opts.max_iters {
            break false;
        }
        iterations += 1;

        let mut worst = usize::MAX;
        for (i, &wi) in solver.weights.iter().enumerate() {
            if wi > 0.0 && (worst == usize::MAX || c[i] < c[worst]) {
                worst = i;
            }
        }
        let support = solver.weights.iter().filter(|&&w| w > 0.0).count();
        if support <= NEWTON_MAX_SUPPORT && worst != usize::MAX {
            let top = solver
                .weights
                .iter()
                .zip(&c)
                .filter(|(&w, _)| w > 0.0)
                .map(|(_, &ci)| ci)
                .fold(0.0, f64::max);
            if (top - c[worst]) / b > 0.25 * opts.gap_tol && solver.newton_step(b, &c)? {
                continue;
            }
        }
        let toward = worst == usize::MAX || c[best] - b >= b - c[worst];
        let i = if toward { best } else { worst };
        let ai = solver.row(i);
        let u = &solver.minv * &ai;
        let d = ai.dotc(&u).re;
        let t = if toward {
            line_search(b, c[i], d, 0.0)
        } else {
            let wi = solver.weights[i];
            let t = line_search(b, c[i], d, -wi).min(0.0);
            // Dropping a vertex whose removal would make M singular is never optimal;
            // stay strictly inside.
            if 1.0 + t * d <= 1e-12 {
                0.5 * t
            } else {
                t
            }
        };
        if t == 0.0 {
            // No progress possible along the chosen direction; fall back to a toward step.
            let ai = solver.row(best);
            let u = &solver.minv * &ai;
            let d = ai.dotc(&u).re;
            let t = line_search(b, c[best], d, 0.0);
            solver.step(best, t, &u, d);
        } else {
            solver.step(i, t, &u, d);
        }
        if solver.updates >= REFACTOR_EVERY {
            solver.refactor()?;
        }
    };

    let solution = finish(nodes, z0, n, &solver.weights, iterations)?;
    if converged {
        Ok(solution)
    } else {
        Err(Error::MaxItersExceeded(Box::new(solution)))
    }
}

fn finish(
    nodes: &[Complex64],
    z0: Complex64,
    n: usize,
    weights: &[f64],
    iterations: usize,
) -> Result<OpmSolution> {
    let mut w: Vec<f64> = weights
        .iter()
        .map(|&x| if x < WEIGHT_FLOOR { 0.0 } else { x })
        .collect();
    let total: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= total;
    }
    let support = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    let measure = DiscreteMeasure::from_unnormalized(nodes.to_vec(), w)?;
    let fac = ChristoffelFactorization::new(&measure, n)?;
    let (objective, certificate_gap) = certificate_from(&fac, z0, nodes);
    Ok(OpmSolution {
        degree: n,
        point: z0,
        measure,
        objective,
        certificate_gap,
        iterations,
        support,
    })
}

fn certificate_from(fac: &ChristoffelFactorization, z0: Complex64, grid: &[Complex64]) -> (f64, f64) {
    let y0 = fac.kernel_vector(z0);
    let b = y0.norm_squared();
    let max = grid
        .iter()
        .map(|&x| fac.kernel_vector(x).dotc(&y0).norm_sqr())
        .fold(0.0, f64::max);
    (b, max / b - 1.0)
}

/// `max_{x in grid} |K_n(x, z0)|^2 / B_n(mu, z0) - 1`.
///
/// Since `sum_i w_i |K_n(x_i, z0)|^2 = B_n(mu, z0)`, the gap is nonnegative
/// whenever the grid contains the support, and it vanishes exactly at an
/// optimal measure on the grid.
pub fn certificate_gap(mu: &DiscreteMeasure, z0: Complex64, n: usize, grid: &[Complex64]) -> Result<f64> {
    let fac = ChristoffelFactorization::new(mu, n)?;
    Ok(certificate_from(&fac, z0, grid).1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub index: usize,
    pub node: Complex64,
    pub weight: f64,
    /// `|p_n(node)| / max_grid |p_n|`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub entries: Vec<SupportEntry>,
    /// `max_entries (1 - ratio)`.
    pub max_deviation: f64,
}

/// Checks that the extremal growth polynomial attains its grid maximum on the support.
pub fn support_diagnostic(sol: &OpmSolution, grid: &[Complex64], tau: f64) -> Result<SupportReport> {
    if sol.certificate_gap > NOT_OPTIMAL_GAP {
        return Err(Error::NotOptimal {
            gap: sol.certificate_gap,
            limit: NOT_OPTIMAL_GAP,
        });
    }
    let p = extremal_growth_polynomial(&sol.measure, sol.degree, sol.point, grid)?;
    let entries: Vec<SupportEntry> = sol
        .measure
        .iter()
        .enumerate()
        .filter(|(_, (_, w))| *w > tau)
        .map(|(index, (node, weight))| SupportEntry {
            index,
            node,
            weight,
            ratio: p.eval(node).norm(),
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptySupport);
    }
    let max_deviation = entries.iter().map(|e| 1.0 - e.ratio).fold(0.0, f64::max);
    Ok(SupportReport {
        entries,
        max_deviation,
    })
}

/// One degree of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub objective: f64,
    /// `B_n(nu_n, z0) / |Phi(z0)|^{2n}`.
    pub tilde_b: f64,
    /// `M_n / |Phi(z0)|^n = sqrt(tilde_b)`.
    pub growth_ratio: f64,
    /// Distance of the first [`MOMENT_ORDER`] moments to the balayage; absent on arcs.
    pub moment_discrepancy: Option<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub seconds: f64,
    /// `ok`, `max_iters`, or the error that stopped the row.
    pub status: String,
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str =
        "n,objective,tilde_B,growth_ratio,moment_discrepancy,gap,iterations,seconds,status";

    pub fn to_csv_record(&self) -> String {
        let md = self.moment_discrepancy.map(fmt_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            fmt_f64(self.objective),
            fmt_f64(self.tilde_b),
            fmt_f64(self.growth_ratio),
            md,
            fmt_f64(self.gap),
            self.iterations,
            fmt_f64(self.seconds),
            csv_field(&self.status)
        )
    }

    fn failed(n: usize, status: String, seconds: f64) -> Self {
        ConvergenceRow {
            n,
            objective: f64::NAN,
            tilde_b: f64::NAN,
            growth_ratio: f64::NAN,
            moment_discrepancy: None,
            gap: f64::NAN,
            iterations: 0,
            seconds,
            status,
        }
    }
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from(ConvergenceRow::CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_record());
        out.push('\n');
    }
    out
}

/// Checks the degree list and grid size used by [`convergence_study`].
pub fn validate_degrees(degrees: &[usize], m: usize) -> Result<()> {
    let Some(&max) = degrees.last() else {
        return Err(Error::InvalidArgument("degrees must be nonempty".to_string()));
    };
    if degrees[0] == 0 || degrees.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidArgument(
            "degrees must be strictly ascending and at least 1".to_string(),
        ));
    }
    if m < 20 * (max + 1) {
        return Err(Error::InvalidArgument(format!(
            "grid size {m} is below 20 * (max degree + 1) = {}",
            20 * (max + 1)
        )));
    }
    Ok(())
}

/// Solves the OPM problem on a fixed grid of `m` boundary nodes for every
/// degree. Degrees run in parallel; rows come back in degree order and a
/// failing degree yields a row with its status instead of an error.
pub fn convergence_study(
    geom: &CurveGeometry,
    z0: Complex64,
    degrees: &[usize],
    m: usize,
    opts: &OpmOptions,
) -> Result<Vec<ConvergenceRow>> {
    validate_degrees(degrees, m)?;
    let phi = exterior_map(geom, z0)?.norm();
    if phi <= 1.0 + 1e-12 {
        return Err(Error::InsideDomain {
            re: z0.re,
            im: z0.im,
            modulus: phi,
        });
    }
    let grid = discretize_boundary(geom, m);
    let balayage = if geom.is_curve() {
        Some(balayage_point_mass(geom, z0, m)?)
    } else {
        None
    };
    Ok(degrees
        .par_iter()
        .map(|&n| {
            let start = Instant::now();
            let (sol, status) = match solve_opm(&grid, z0, n, opts) {
                Ok(sol) => (sol, "ok".to_string()),
                Err(Error::MaxItersExceeded(sol)) => (*sol, "max_iters".to_string()),
                Err(e) => {
                    return ConvergenceRow::failed(n, e.to_string(), start.elapsed().as_secs_f64())
                }
            };
            let tilde_b = sol.objective / phi.powi(2 * n as i32);
            ConvergenceRow {
                n,
                objective: sol.objective,
                tilde_b,
                growth_ratio: tilde_b.sqrt(),
                moment_discrepancy: balayage
                    .as_ref()
                    .map(|bal| moment_discrepancy(&sol.measure, bal, MOMENT_ORDER)),
                gap: sol.certificate_gap,
                iterations: sol.iterations,
                seconds: start.elapsed().as_secs_f64(),
                status,
            }
        })
        .collect())
}
