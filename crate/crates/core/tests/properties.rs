use std::f64::consts::PI;

use opmlab::bergman::{bergman_function, ChristoffelFactorization};
use opmlab::measure::{uniform_measure, DiscreteMeasure};
use opmlab::opm::{certificate_gap, solve_opm, OpmOptions};
use opmlab::szego::{szego_function, szego_function_unnormalized, CircleDensity};
use opmlab::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn circle_measure(weights: &[f64]) -> DiscreteMeasure {
    let m = weights.len();
    let nodes = (0..m).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect();
    DiscreteMeasure::from_unnormalized(nodes, weights.to_vec()).unwrap()
}

fn exterior_point() -> impl Strategy<Value = Complex64> {
    (1.1f64..3.0, 0.0f64..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn christoffel_function_is_at_most_one_on_the_support(
        weights in prop::collection::vec(0.05f64..1.0, 40),
        n in 1usize..12,
        j in 0usize..40,
    ) {
        let mu = circle_measure(&weights);
        let x = mu.nodes()[j];
        let w = mu.weights()[j];
        let lambda = bergman_function(&mu, n, x).unwrap().christoffel;
        prop_assert!(w <= lambda * (1.0 + 1e-9));
    }

    #[test]
    fn bergman_is_nondecreasing_in_degree(
        weights in prop::collection::vec(0.05f64..1.0, 48),
        z in exterior_point(),
    ) {
        let f = ChristoffelFactorization::new(&circle_measure(&weights), 14).unwrap();
        let by_degree = f.bergman_by_degree(z);
        for pair in by_degree.windows(2) {
            prop_assert!(pair[1] >= pair[0] * (1.0 - 1e-12));
        }
        let direct = f.bergman(z);
        prop_assert!((by_degree[14] - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn kernel_reproduces_its_diagonal(
        weights in prop::collection::vec(0.05f64..1.0, 32),
        z in exterior_point(),
        n in 1usize..10,
    ) {
        let mu = circle_measure(&weights);
        let f = ChristoffelFactorization::new(&mu, n).unwrap();
        let b = f.bergman(z);
        // ∫ |K(x, z)|^2 dmu(x) = K(z, z)
        let integral: f64 = mu.iter().map(|(x, w)| w * f.kernel(x, z).norm_sqr()).sum();
        prop_assert!((integral - b).abs() <= 1e-9 * b);
    }

    #[test]
    fn affine_images_share_christoffel_values(
        weights in prop::collection::vec(0.05f64..1.0, 30),
        z in exterior_point(),
        a in exterior_point(),
        shift in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let mu = circle_measure(&weights);
        let b = Complex64::new(shift.0, shift.1);
        let moved = DiscreteMeasure::new(
            mu.nodes().iter().map(|&x| a * x + b).collect(),
            mu.weights().to_vec(),
        ).unwrap();
        let lhs = bergman_function(&mu, 6, z).unwrap().bergman;
        let rhs = bergman_function(&moved, 6, a * z + b).unwrap().bergman;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn opm_beats_uniform_and_certifies(
        z0 in exterior_point(),
        n in 1usize..6,
        jitter in prop::collection::vec(-0.3f64..0.3, 64),
    ) {
        let m = jitter.len();
        let grid: Vec<Complex64> = jitter
            .iter()
            .enumerate()
            .map(|(j, d)| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + d) / m as f64))
            .collect();
        let opts = OpmOptions::default();
        let sol = solve_opm(&grid, z0, n, &opts).unwrap();
        let uniform = bergman_function(&uniform_measure(&grid).unwrap(), n, z0).unwrap().bergman;
        prop_assert!(sol.objective <= uniform * (1.0 + 1e-12));
        prop_assert!(sol.certificate_gap <= opts.gap_tol);
        let gap = certificate_gap(&sol.measure, z0, n, &grid).unwrap();
        prop_assert!((gap - sol.certificate_gap).abs() <= 1e-9);
    }

    #[test]
    fn szego_scales_with_the_square_root_of_the_density(
        seed in 0u64..1000,
        c in 0.1f64..10.0,
        z in (0.0f64..0.9, 0.0f64..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t)),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = CircleDensity::random_smooth(&mut rng, 6, 1024).unwrap();
        let scaled: Vec<f64> = f.values().iter().map(|v| c * v).collect();
        let d = szego_function(&f, z).unwrap().szego_value;
        let dc = szego_function_unnormalized(&scaled, z).unwrap().szego_value;
        prop_assert!((dc - c.sqrt() * d).norm() <= 1e-12 * dc.norm().max(1.0));
    }

    #[test]
    fn poisson_density_maximizes_lambda(
        seed in 0u64..1000,
        w0 in (0.0f64..0.9, 0.0f64..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t)),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = CircleDensity::random_smooth(&mut rng, 6, 2048).unwrap();
        let lambda = szego_function(&f, w0).unwrap().lambda_inf;
        let poisson = szego_function(&CircleDensity::poisson(w0, 2048).unwrap(), w0).unwrap().lambda_inf;
        prop_assert!(lambda <= poisson * (1.0 + 1e-9));
    }
}
