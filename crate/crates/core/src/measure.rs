//! Discrete probability measures on boundary discretizations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{exterior_map, level_curve_nodes, CurveGeometry, CurveKind};
use crate::io::fmt_f64;
use crate::{Complex64, Error, Result};

/// Nodes closer than this are merged when a measure is built.
pub const NODE_DEDUP_TOL: f64 = 1e-12;
/// Allowed deviation of the total mass from 1.
pub const MASS_TOL: f64 = 1e-12;

/// A probability measure `sum_i w_i delta_{x_i}` with pairwise distinct nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct DiscreteMeasure {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Validates and builds a measure. Weights must be nonnegative and sum to 1
    /// within [`MASS_TOL`]; coincident nodes are merged.
    pub fn new(nodes: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        check_inputs(&nodes, &weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(dedup(nodes, weights))
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn from_unnormalized(nodes: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        check_inputs(&nodes, &weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(dedup(nodes, weights))
    }

    pub fn point_mass(z: Complex64) -> Self {
        DiscreteMeasure {
            nodes: vec![z],
            weights: vec![1.0],
        }
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes carrying positive weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// CSV with header `re_node,im_node,weight`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_node,im_node,weight\n");
        for (x, w) in self.iter() {
            out.push_str(&format!("{},{},{}\n", fmt_f64(x.re), fmt_f64(x.im), fmt_f64(w)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty measure CSV".into()))?;
        if header.trim() != "re_node,im_node,weight" {
            return Err(Error::InvalidArgument(format!("unexpected CSV header {header:?}")));
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("row {}: cannot parse {s:?}: {e}", lineno + 1))
                })
            };
            if fields.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} fields, expected 3",
                    lineno + 1,
                    fields.len()
                )));
            }
            nodes.push(Complex64::new(parse(fields[0])?, parse(fields[1])?));
            weights.push(parse(fields[2])?);
        }
        DiscreteMeasure::new(nodes, weights)
    }

    /// JSON array of `[re, im, weight]` triples.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

impl TryFrom<Vec<[f64; 3]>> for DiscreteMeasure {
    type Error = Error;

    fn try_from(rows: Vec<[f64; 3]>) -> Result<Self> {
        let (nodes, weights) = rows
            .into_iter()
            .map(|[re, im, w]| (Complex64::new(re, im), w))
            .unzip();
        DiscreteMeasure::new(nodes, weights)
    }
}

impl From<DiscreteMeasure> for Vec<[f64; 3]> {
    fn from(mu: DiscreteMeasure) -> Self {
        mu.iter().map(|(x, w)| [x.re, x.im, w]).collect()
    }
}

fn check_inputs(nodes: &[Complex64], weights: &[f64]) -> Result<()> {
    if nodes.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} nodes but {} weights",
            nodes.len(),
            weights.len()
        )));
    }
    if nodes.is_empty() {
        return Err(Error::EmptySupport);
    }
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "weight {i} is {}, expected a finite nonnegative value",
            weights[i]
        )));
    }
    if nodes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidArgument("nodes must be finite".into()));
    }
    Ok(())
}

/// Merges nodes within [`NODE_DEDUP_TOL`], keeping first-occurrence order.
fn dedup(nodes: Vec<Complex64>, weights: Vec<f64>) -> DiscreteMeasure {
    let n = nodes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| nodes[i].re.total_cmp(&nodes[j].re));
    // group[i] = smallest original index among the nodes merged with i
    let mut group: Vec<Option<usize>> = vec![None; n];
    for (a, &i) in order.iter().enumerate() {
        if group[i].is_some() {
            continue;
        }
        let mut members = vec![i];
        for &j in &order[a + 1..] {
            if nodes[j].re - nodes[i].re > NODE_DEDUP_TOL {
                break;
            }
            if group[j].is_none() && (nodes[j] - nodes[i]).norm() <= NODE_DEDUP_TOL {
                members.push(j);
            }
        }
        let head = *members.iter().min().unwrap();
        for m in members {
            group[m] = Some(head);
        }
    }
    if group.iter().enumerate().all(|(i, g)| *g == Some(i)) {
        return DiscreteMeasure { nodes, weights };
    }
    let mut slot = vec![usize::MAX; n];
    let mut out_nodes = Vec::new();
    let mut out_weights: Vec<f64> = Vec::new();
    for i in 0..n {
        let head = group[i].unwrap();
        if slot[head] == usize::MAX {
            slot[head] = out_nodes.len();
            out_nodes.push(nodes[head]);
            out_weights.push(0.0);
        }
        out_weights[slot[head]] += weights[i];
    }
    DiscreteMeasure {
        nodes: out_nodes,
        weights: out_weights,
    }
}

/// Boundary grid: the level curve `r = 1`, or Chebyshev extrema
/// `cos(pi j / (m - 1))` for the interval.
pub fn discretize_boundary(geom: &CurveGeometry, m: usize) -> Vec<Complex64> {
    if m == 0 {
        return Vec::new();
    }
    match geom.kind() {
        CurveKind::Interval => {
            if m == 1 {
                return vec![Complex64::new(1.0, 0.0)];
            }
            (0..m)
                .map(|j| {
                    let x = (PI * j as f64 / (m - 1) as f64).cos();
                    // Exact symmetric values, e.g. the midpoint is 0 rather than 6e-17.
                    let x = if 2 * j == m - 1 { 0.0 } else { x };
                    Complex64::new(x, 0.0)
                })
                .collect()
        }
        _ => level_curve_nodes(geom, 1.0, m).expect("r = 1 is admissible for every geometry"),
    }
}

pub fn uniform_measure(nodes: &[Complex64]) -> Result<DiscreteMeasure> {
    if nodes.is_empty() {
        return Err(Error::EmptySupport);
    }
    let w = 1.0 / nodes.len() as f64;
    DiscreteMeasure::from_unnormalized(nodes.to_vec(), vec![w; nodes.len()])
}

/// `m_k = sum_i w_i x_i^k` for `k = 0..=k_max`.
pub fn holomorphic_moments(mu: &DiscreteMeasure, k_max: usize) -> Vec<Complex64> {
    let mut moments = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for (x, w) in mu.iter() {
        let mut p = Complex64::new(w, 0.0);
        for m in moments.iter_mut() {
            *m += p;
            p *= x;
        }
    }
    moments
}

/// `Phi_* mu`: nodes mapped by the exterior map and projected onto `|w| = 1`.
pub fn pushforward(mu: &DiscreteMeasure, geom: &CurveGeometry) -> Result<DiscreteMeasure> {
    let nodes = mu
        .nodes()
        .iter()
        .map(|&x| exterior_map(geom, x).map(|w| w / w.norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(dedup(nodes, mu.weights().to_vec()))
}

/// Trapezoidal discretization of the balayage of `delta_{z0}` onto the curve:
/// nodes `Psi(e^{i t_j})` weighted by the Poisson kernel at `w0 = 1 / conj(Phi(z0))`.
pub fn balayage_point_mass(geom: &CurveGeometry, z0: Complex64, m: usize) -> Result<DiscreteMeasure> {
    geom.require_curve("balayage_point_mass")?;
    if m == 0 {
        return Err(Error::EmptySupport);
    }
    let w = exterior_map(geom, z0)?;
    if w.norm() <= 1.0 + 1e-12 {
        return Err(Error::InsideDomain {
            re: z0.re,
            im: z0.im,
            modulus: w.norm(),
        });
    }
    let w0 = w.conj().inv();
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for j in 0..m {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        nodes.push(geom.psi(e));
        weights.push(poisson_kernel(w0, e));
    }
    DiscreteMeasure::from_unnormalized(nodes, weights)
}

/// Poisson kernel of the disk, `(1 - |w0|^2) / |e - w0|^2`, density w.r.t. `dt / 2 pi`.
pub fn poisson_kernel(w0: Complex64, e: Complex64) -> f64 {
    (1.0 - w0.norm_sqr()) / (e - w0).norm_sqr()
}

/// `max_{1 <= k <= k_max} |m_k(mu) - m_k(nu)|`.
pub fn moment_discrepancy(mu: &DiscreteMeasure, nu: &DiscreteMeasure, k_max: usize) -> f64 {
    let a = holomorphic_moments(mu, k_max);
    let b = holomorphic_moments(nu, k_max);
    (1..=k_max)
        .map(|k| (a[k] - b[k]).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    #[test]
    fn discretize_examples() {
        let circle = discretize_boundary(&CurveGeometry::unit_circle(), 4);
        let expect = [c64(1.0, 0.0), c64(0.0, 1.0), c64(-1.0, 0.0), c64(0.0, -1.0)];
        for (a, b) in circle.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        let interval = discretize_boundary(&CurveGeometry::interval(), 3);
        assert_eq!(interval, vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)]);
        let ellipse = discretize_boundary(&CurveGeometry::ellipse(2.0, 1.0).unwrap(), 2);
        assert!((ellipse[0] - c64(2.0, 0.0)).norm() < 1e-15);
        assert!((ellipse[1] - c64(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn uniform_examples() {
        let nodes = discretize_boundary(&CurveGeometry::unit_circle(), 4);
        assert_eq!(uniform_measure(&nodes).unwrap().weights(), &[0.25; 4]);
        assert_eq!(uniform_measure(&[c64(1.0, 2.0)]).unwrap().weights(), &[1.0]);
        assert!(matches!(uniform_measure(&[]), Err(Error::EmptySupport)));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(DiscreteMeasure::new(vec![c64(0.0, 0.0)], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![c64(0.0, 0.0), c64(1.0, 0.0)], vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![c64(0.0, 0.0)], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn coincident_nodes_merge() {
        let mu = DiscreteMeasure::new(
            vec![c64(1.0, 0.0), c64(0.0, 1.0), c64(1.0 + 1e-14, 0.0), c64(0.0, 1.0)],
            vec![0.1, 0.2, 0.3, 0.4],
        )
        .unwrap();
        assert_eq!(mu.len(), 2);
        assert!((mu.weights()[0] - 0.4).abs() < 1e-15);
        assert!((mu.weights()[1] - 0.6).abs() < 1e-15);
        // The interval level curve visits each interior point twice.
        let nodes = level_curve_nodes(&CurveGeometry::interval(), 1.0, 8).unwrap();
        assert_eq!(uniform_measure(&nodes).unwrap().len(), 5);
    }

    #[test]
    fn moments_examples() {
        let circle = CurveGeometry::unit_circle();
        let bal = balayage_point_mass(&circle, c64(2.0, 0.0), 64).unwrap();
        let m = holomorphic_moments(&bal, 3);
        assert!((m[0] - 1.0).norm() < 1e-14);
        assert!((m[1] - 0.5).norm() < 1e-10);
        assert!((m[3] - 0.125).norm() < 1e-10);
        let uni = uniform_measure(&discretize_boundary(&circle, 4)).unwrap();
        assert!(holomorphic_moments(&uni, 1)[1].norm() < 1e-15);
    }

    #[test]
    fn balayage_moments_match_reflected_powers() {
        // Moments of the Poisson measure at 1/conj(z0) are conj(z0)^{-k}.
        let z0 = c64(1.3, 1.1);
        let bal = balayage_point_mass(&CurveGeometry::unit_circle(), z0, 512).unwrap();
        let m = holomorphic_moments(&bal, 8);
        for (k, mk) in m.iter().enumerate() {
            let expect = z0.conj().powi(-(k as i32));
            assert!((mk - expect).norm() < 1e-9, "k = {k}");
        }
        let total: f64 = bal.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn balayage_grid_converged() {
        let g = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        let z0 = c64(2.5, 1.0);
        let a = balayage_point_mass(&g, z0, 256).unwrap();
        let b = balayage_point_mass(&g, z0, 512).unwrap();
        assert!(moment_discrepancy(&a, &b, 8) < 1e-10);
    }

    #[test]
    fn balayage_errors() {
        assert!(matches!(
            balayage_point_mass(&CurveGeometry::interval(), c64(2.0, 0.0), 16),
            Err(Error::CurveRequired(_))
        ));
        assert!(matches!(
            balayage_point_mass(&CurveGeometry::unit_circle(), c64(0.5, 0.0), 16),
            Err(Error::InsideDomain { .. })
        ));
        assert!(matches!(
            balayage_point_mass(&CurveGeometry::unit_circle(), c64(1.0, 0.0), 16),
            Err(Error::InsideDomain { .. })
        ));
    }

    #[test]
    fn pushforward_examples() {
        let circle = CurveGeometry::unit_circle();
        let mu = balayage_point_mass(&circle, c64(0.0, 3.0), 32).unwrap();
        let pushed = pushforward(&mu, &circle).unwrap();
        assert_eq!(pushed.weights(), mu.weights());
        for (a, b) in pushed.nodes().iter().zip(mu.nodes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let e = CurveGeometry::ellipse(2.0, 1.0).unwrap();
        let pm = pushforward(&DiscreteMeasure::point_mass(c64(2.0, 0.0)), &e).unwrap();
        assert!((pm.nodes()[0] - c64(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(pm.weights(), &[1.0]);
    }

    #[test]
    fn discrepancy_examples() {
        let a = DiscreteMeasure::point_mass(c64(1.0, 0.0));
        let b = DiscreteMeasure::point_mass(c64(-1.0, 0.0));
        assert_eq!(moment_discrepancy(&a, &a, 5), 0.0);
        assert!((moment_discrepancy(&a, &b, 1) - 2.0).abs() < 1e-15);
        let c = balayage_point_mass(&CurveGeometry::unit_circle(), c64(2.0, 1.0), 16).unwrap();
        assert_eq!(moment_discrepancy(&a, &c, 4), moment_discrepancy(&c, &a, 4));
    }

    #[test]
    fn csv_and_json_are_bit_exact() {
        let mu = balayage_point_mass(&CurveGeometry::ellipse(2.0, 1.0).unwrap(), c64(3.0, 0.5), 37).unwrap();
        let back = DiscreteMeasure::from_csv(&mu.to_csv()).unwrap();
        assert_eq!(back, mu);
        let back = DiscreteMeasure::from_json(&mu.to_json()).unwrap();
        assert_eq!(back, mu);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pushforward_preserves_mass_and_circle_moments(
                raw in proptest::collection::vec((0.0f64..(2.0 * PI), 0.01f64..1.0), 1..40)
            ) {
                let nodes: Vec<Complex64> = raw.iter().map(|(t, _)| Complex64::from_polar(1.0, *t)).collect();
                let weights: Vec<f64> = raw.iter().map(|(_, w)| *w).collect();
                let mu = DiscreteMeasure::from_unnormalized(nodes, weights).unwrap();
                let pushed = pushforward(&mu, &CurveGeometry::unit_circle()).unwrap();
                let mass: f64 = pushed.weights().iter().sum();
                prop_assert!((mass - 1.0).abs() < 1e-12);
                prop_assert!(moment_discrepancy(&mu, &pushed, 8) < 1e-12);
            }
        }
    }
}
