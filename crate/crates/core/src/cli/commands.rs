//! Subcommand bodies. Each writes its files into `output_dir`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ConfigError, ExperimentConfig};
use super::Failure;
use crate::bergman::{bergman_function, tilde_monotonicity_defect};
use crate::geometry::{exterior_map, faber_asymptotic_deviation, faber_polynomials, CurveGeometry};
use crate::io::{fmt_f64, write_atomic};
use crate::measure::{balayage_point_mass, discretize_boundary, holomorphic_moments, uniform_measure, DiscreteMeasure};
use crate::opm::{convergence_csv, convergence_study, solve_opm, support_diagnostic, OpmSolution, WEIGHT_FLOOR};
use crate::szego::{
    szego_function, szego_function_unnormalized, transport_check_on, verify_circle_optimality_on,
    CircleDensity, RANDOM_DEGREE,
};
use crate::{Complex64, Error};

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    write_atomic(&dir.join(name), contents.as_bytes()).map_err(|e| Failure::Io(dir.join(name), e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn fmt_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

#[derive(Serialize)]
struct CertificateReport {
    degree: usize,
    z0: [f64; 2],
    objective: f64,
    tilde_b: f64,
    certificate_gap: f64,
    gap_tol: f64,
    iterations: usize,
    converged: bool,
    support_size: usize,
    /// `max (1 - |p_n(x)| / max_grid |p_n|)` over support nodes.
    support_max_deviation: Option<f64>,
}

pub fn cmd_opm(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let grid = discretize_boundary(&cfg.geometry, cfg.grid_size);
    let z0 = cfg.z0();
    let phi = exterior_map(&cfg.geometry, z0)?.norm();
    let opts = cfg.opm_options();
    let results: Vec<(usize, Result<OpmSolution, Error>)> = cfg
        .degrees
        .par_iter()
        .map(|&n| (n, solve_opm(&grid, z0, n, &opts)))
        .collect();

    let mut summary = String::new();
    writeln!(summary, "geometry: {}", cfg.geometry.name()).unwrap();
    writeln!(summary, "z0: {}", fmt_complex(z0)).unwrap();
    writeln!(summary, "grid_size: {}", cfg.grid_size).unwrap();
    writeln!(summary, "gap_tol: {}", fmt_f64(cfg.gap_tol)).unwrap();
    let mut failures = Vec::new();
    for (n, result) in results {
        let (sol, converged) = match result {
            Ok(sol) => (sol, true),
            Err(Error::MaxItersExceeded(sol)) => (*sol, false),
            Err(e) => {
                writeln!(summary, "n = {n}: failed: {e}").unwrap();
                failures.push(format!("n = {n}: {e}"));
                continue;
            }
        };
        let deviation = support_diagnostic(&sol, &grid, WEIGHT_FLOOR)
            .ok()
            .map(|r| r.max_deviation);
        let tilde_b = sol.objective / phi.powi(2 * n as i32);
        write(&cfg.output_dir, &format!("opm_n{n}_measure.csv"), &sol.measure.to_csv())?;
        let report = CertificateReport {
            degree: n,
            z0: cfg.z0,
            objective: sol.objective,
            tilde_b,
            certificate_gap: sol.certificate_gap,
            gap_tol: cfg.gap_tol,
            iterations: sol.iterations,
            converged,
            support_size: sol.support.len(),
            support_max_deviation: deviation,
        };
        write(&cfg.output_dir, &format!("opm_n{n}_certificate.json"), &json(&report))?;
        writeln!(
            summary,
            "n = {n}: objective = {}, tilde_B = {}, certificate_gap = {}, iterations = {}, support = {}, status = {}",
            fmt_f64(sol.objective),
            fmt_f64(tilde_b),
            fmt_f64(sol.certificate_gap),
            sol.iterations,
            sol.support.len(),
            if converged { "ok" } else { "max_iters" }
        )
        .unwrap();
        if !converged {
            failures.push(format!("n = {n}: iteration cap reached"));
        }
    }
    write(&cfg.output_dir, "summary.txt", &summary)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(failures.join("; ")))
    }
}

pub fn cmd_convergence(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let rows = convergence_study(&cfg.geometry, cfg.z0(), &cfg.degrees, cfg.grid_size, &cfg.opm_options())?;
    write(&cfg.output_dir, "convergence.csv", &convergence_csv(&rows))?;
    // Whitespace-separated columns for plotting tools; wall time is left out
    // so that the file is reproducible.
    let mut plot = String::from("# n objective tilde_B growth_ratio moment_discrepancy gap iterations\n");
    for r in &rows {
        writeln!(
            plot,
            "{} {} {} {} {} {} {}",
            r.n,
            fmt_f64(r.objective),
            fmt_f64(r.tilde_b),
            fmt_f64(r.growth_ratio),
            fmt_f64(r.moment_discrepancy.unwrap_or(f64::NAN)),
            fmt_f64(r.gap),
            r.iterations
        )
        .unwrap();
    }
    write(&cfg.output_dir, "convergence_plot.dat", &plot)
}

pub fn cmd_balayage(cfg: &ExperimentConfig) -> Result<(), Failure> {
    if !cfg.geometry.is_curve() {
        return Err(ConfigError::new("geometry", "balayage requires a closed curve, got the interval").into());
    }
    let mu = balayage_point_mass(&cfg.geometry, cfg.z0(), cfg.grid_size)?;
    write(&cfg.output_dir, "balayage_measure.csv", &mu.to_csv())?;
    let mut moments = String::from("k,re,im\n");
    for (k, m) in holomorphic_moments(&mu, 8).iter().enumerate() {
        writeln!(moments, "{k},{},{}", fmt_f64(m.re), fmt_f64(m.im)).unwrap();
    }
    write(&cfg.output_dir, "balayage_moments.csv", &moments)
}

pub fn cmd_faber(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let n_max = *cfg.degrees.last().expect("validated degrees are nonempty");
    let table = faber_polynomials(&cfg.geometry, n_max);
    let mut coeffs = String::from("n,k,re,im\n");
    for n in 0..=n_max {
        for (k, c) in table.row(n).iter().enumerate() {
            writeln!(coeffs, "{n},{k},{},{}", fmt_f64(c.re), fmt_f64(c.im)).unwrap();
        }
    }
    write(&cfg.output_dir, "faber_coefficients.csv", &coeffs)?;
    if cfg.geometry.is_curve() {
        let mut dev = String::from("n,radius,deviation\n");
        for &n in &cfg.degrees {
            let d = faber_asymptotic_deviation(&cfg.geometry, n, cfg.faber_radius, cfg.grid_size)?;
            writeln!(dev, "{n},{},{}", fmt_f64(cfg.faber_radius), fmt_f64(d)).unwrap();
        }
        write(&cfg.output_dir, "faber_deviation.csv", &dev)?;
    }
    Ok(())
}

pub fn cmd_szego(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let w0 = exterior_map(&cfg.geometry, cfg.z0())?.conj().inv();
    let report = verify_circle_optimality_on(w0, cfg.trials, cfg.seed, cfg.szego_grid)?;
    write(&cfg.output_dir, "szego_report.json", &json(&report))?;
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "{} random densities beat the Poisson density",
            report.violations.len()
        )))
    }
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: f64,
    pub observed: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, tolerance: f64, observed: f64) -> Self {
        Check {
            name,
            tolerance,
            observed,
            passed: observed <= tolerance,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_passed: bool,
}

fn random_circle_measure(rng: &mut ChaCha8Rng, m: usize) -> DiscreteMeasure {
    let nodes: Vec<Complex64> = (0..m)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * (j as f64 + rng.random_range(-0.3..0.3)) / m as f64;
            Complex64::from_polar(1.0, t)
        })
        .collect();
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    DiscreteMeasure::from_unnormalized(nodes, weights).expect("positive weights")
}

fn random_exterior_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.random_range(1.1..2.0), rng.random_range(0.0..2.0 * std::f64::consts::PI))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs the invariant suite. The geometries are fixed; the configuration
/// supplies the seed, grid sizes, trial count and fault injection.
pub fn verify_report(cfg: &ExperimentConfig) -> Result<VerifyReport, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let circle = CurveGeometry::unit_circle();
    let mut checks = Vec::new();

    // Reflection identity on random measures, and lambda_n(mu_P, 1 / conj z0) = 1.
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mu = random_circle_measure(&mut rng, 64);
        let n = rng.random_range(1..=15);
        let z = random_exterior_point(&mut rng);
        let lhs = z.norm().powi(2 * n as i32) * bergman_function(&mu, n, z)?.christoffel;
        let rhs = bergman_function(&mu, n, z.conj().inv())?.christoffel;
        worst = worst.max(rel(lhs, rhs));
    }
    let z0 = Complex64::new(2.0, 0.0);
    let mut poisson = balayage_point_mass(&circle, z0, cfg.grid_size)?;
    if cfg.fault_injection.as_deref() == Some("poisson_weight") {
        let mut w = poisson.weights().to_vec();
        w[0] *= 1.5;
        poisson = DiscreteMeasure::from_unnormalized(poisson.nodes().to_vec(), w)?;
    }
    for n in [1, 5, 10] {
        let lam = bergman_function(&poisson, n, z0.conj().inv())?.christoffel;
        worst = worst.max((lam - 1.0).abs());
    }
    checks.push(Check::at_most("christinv", 1e-8, worst));

    // D(2f) = sqrt(2) D(f).
    let f = CircleDensity::random_smooth(&mut rng, RANDOM_DEGREE, cfg.szego_grid)?;
    let z = Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(0.0..2.0 * std::f64::consts::PI));
    let d1 = szego_function(&f, z)?.szego_value;
    let doubled: Vec<f64> = f.values().iter().map(|v| 2.0 * v).collect();
    let d2 = szego_function_unnormalized(&doubled, z)?.szego_value;
    checks.push(Check::at_most(
        "szego_scaling",
        1e-12,
        (d2 - d1 * 2f64.sqrt()).norm() / d1.norm(),
    ));

    // Random densities never beat the Poisson density.
    let report = verify_circle_optimality_on(Complex64::new(0.5, 0.0), cfg.trials, cfg.seed, cfg.szego_grid)?;
    let margin = report.max_lambda - report.poisson_lambda;
    checks.push(Check {
        name: "circle_optimality",
        tolerance: 0.0,
        observed: margin,
        passed: margin < 0.0 && report.violations.is_empty(),
    });

    // Ellipse Faber polynomials: F_n(Psi(w)) / w^n - 1 = (q / w^2)^n, q = (a - b) / (a + b).
    let ellipse = CurveGeometry::ellipse(2.0, 1.0)?;
    let r = cfg.faber_radius;
    let mut worst: f64 = 0.0;
    for n in [2, 5, 8] {
        let exact = (1.0 / (3.0 * r * r)).powi(n as i32);
        let dev = faber_asymptotic_deviation(&ellipse, n, r, 256)?;
        worst = worst.max(rel(dev, exact));
    }
    checks.push(Check::at_most("faber_decay", 1e-6, worst));

    // tilde_B_{N-1} <= tilde_B_N on the circle.
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let mu = random_circle_measure(&mut rng, 64);
        let big_n = rng.random_range(2..=20);
        let z = random_exterior_point(&mut rng);
        worst = worst.max(tilde_monotonicity_defect(&circle, &mu, big_n, 1, z)?);
    }
    checks.push(Check::at_most("tilde_monotonicity", 1e-10, worst));

    // Transport identity: circle against 1 - 1/4, ellipse lhs against rhs.
    let arclength = uniform_measure(&discretize_boundary(&circle, cfg.grid_size))?;
    let (lhs, rhs) = transport_check_on(&circle, &arclength, z0, 30, cfg.szego_grid)?;
    checks.push(Check::at_most(
        "transport_circle",
        0.02,
        (lhs - 0.75).abs().max((rhs - 0.75).abs()),
    ));
    let nodes = discretize_boundary(&ellipse, cfg.grid_size);
    let weights: Vec<f64> = (0..nodes.len())
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / nodes.len() as f64;
            ellipse.psi_prime(Complex64::from_polar(1.0, t)).norm()
        })
        .collect();
    let mu = DiscreteMeasure::from_unnormalized(nodes, weights)?;
    let (lhs, rhs) = transport_check_on(&ellipse, &mu, Complex64::new(3.0, 0.0), 40, cfg.szego_grid)?;
    checks.push(Check::at_most("transport_ellipse", 0.05, rel(lhs, rhs)));

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        seed: cfg.seed,
        checks,
        all_passed,
    })
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let report = verify_report(cfg)?;
    write(&cfg.output_dir, "verify_report.json", &json(&report))?;
    for c in &report.checks {
        println!(
            "{} {:<20} observed {:e} (tolerance {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.observed,
            c.tolerance
        );
    }
    if report.all_passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}
