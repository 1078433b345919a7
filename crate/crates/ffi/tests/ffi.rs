use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use opmlab_ffi::*;

fn c(re: f64, im: f64) -> OpmComplex {
    OpmComplex { re, im }
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { opm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(opm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn solve_on_circle_through_handles() {
    unsafe {
        let mut geom = ptr::null_mut();
        assert_eq!(opm_geometry_circle(&mut geom), OpmStatus::Ok);
        let mut grid = vec![c(0.0, 0.0); 256];
        assert_eq!(opm_discretize_boundary(geom, grid.len(), grid.as_mut_ptr()), OpmStatus::Ok);

        let mut sol = ptr::null_mut();
        let status = opm_solve(grid.as_ptr(), grid.len(), c(2.0, 0.0), 4, 0.0, 0, &mut sol);
        assert_eq!(status, OpmStatus::Ok);
        let mut info = OpmSolutionInfo {
            degree: 0,
            objective: 0.0,
            certificate_gap: 0.0,
            iterations: 0,
            support_size: 0,
            grid_size: 0,
        };
        assert_eq!(opm_solution_info(sol, &mut info), OpmStatus::Ok);
        assert_eq!(info.degree, 4);
        assert_eq!(info.grid_size, 256);
        assert!((info.objective - 256.0).abs() < 1e-6 * 256.0);
        assert!(info.certificate_gap <= 1e-6);

        let mut mu = ptr::null_mut();
        assert_eq!(opm_solution_measure(sol, &mut mu), OpmStatus::Ok);
        let len = opm_measure_len(mu);
        let mut nodes = vec![c(0.0, 0.0); len];
        let mut weights = vec![0.0; len];
        assert_eq!(opm_measure_copy(mu, nodes.as_mut_ptr(), weights.as_mut_ptr(), len), OpmStatus::Ok);
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let (mut b, mut lambda) = (0.0, 0.0);
        assert_eq!(opm_bergman(mu, 4, c(2.0, 0.0), &mut b, &mut lambda), OpmStatus::Ok);
        assert!((b - info.objective).abs() < 1e-9 * b);
        assert!((b * lambda - 1.0).abs() < 1e-12);

        let mut small = vec![0.0; 1];
        let status = opm_measure_copy(mu, nodes.as_mut_ptr(), small.as_mut_ptr(), 1);
        assert_eq!(status, OpmStatus::BufferTooSmall);

        opm_measure_free(mu);
        opm_solution_free(sol);
        opm_geometry_free(geom);
    }
}

#[test]
fn balayage_and_exterior_map() {
    unsafe {
        let mut geom = ptr::null_mut();
        assert_eq!(opm_geometry_ellipse(2.0, 1.0, &mut geom), OpmStatus::Ok);
        let mut w = c(0.0, 0.0);
        assert_eq!(opm_exterior_map(geom, c(3.0, 0.0), &mut w), OpmStatus::Ok);
        // Psi(w) = 1.5 w + 0.5 / w, so Phi(3) is the larger root of 1.5 w^2 - 3 w + 0.5.
        let expected = (3.0 + (9.0f64 - 3.0).sqrt()) / 3.0;
        assert!((w.re - expected).abs() < 1e-12 && w.im.abs() < 1e-12);

        let mut mu = ptr::null_mut();
        assert_eq!(opm_measure_balayage(geom, c(3.0, 0.0), 300, &mut mu), OpmStatus::Ok);
        assert_eq!(opm_measure_len(mu), 300);
        opm_measure_free(mu);

        let status = opm_exterior_map(geom, c(0.1, 0.0), &mut w);
        assert_eq!(status, OpmStatus::OutsideDomain);
        assert!(!last_error().is_empty());
        opm_geometry_free(geom);
    }
}

#[test]
fn errors_are_reported_with_messages() {
    unsafe {
        let mut geom = ptr::null_mut();
        assert_eq!(opm_geometry_ellipse(1.0, 2.0, &mut geom), OpmStatus::InvalidGeometry);
        assert!(geom.is_null());
        assert!(last_error().contains("geometry"));

        assert_eq!(opm_geometry_circle(ptr::null_mut()), OpmStatus::NullPointer);
        assert!(last_error().contains("out"));

        let mut interval = ptr::null_mut();
        assert_eq!(opm_geometry_interval(&mut interval), OpmStatus::Ok);
        assert_eq!(opm_last_error_message(ptr::null_mut(), 0), 0);
        let mut mu = ptr::null_mut();
        let status = opm_measure_balayage(interval, c(2.0, 0.0), 100, &mut mu);
        assert_eq!(status, OpmStatus::CurveRequired);
        opm_geometry_free(interval);

        let nodes = [c(1.0, 0.0), c(-1.0, 0.0)];
        let weights = [0.5, 0.5];
        assert_eq!(opm_measure_new(nodes.as_ptr(), weights.as_ptr(), 2, &mut mu), OpmStatus::Ok);
        let mut b = 0.0;
        assert_eq!(opm_bergman(mu, 3, c(2.0, 0.0), &mut b, ptr::null_mut()), OpmStatus::RankDeficient);
        opm_measure_free(mu);

        // Null handles are accepted by the destructors.
        opm_measure_free(ptr::null_mut());
        opm_solution_free(ptr::null_mut());
        opm_geometry_free(ptr::null_mut());
    }
}

#[test]
fn max_iters_still_returns_the_iterate() {
    unsafe {
        let mut geom = ptr::null_mut();
        assert_eq!(opm_geometry_ellipse(2.0, 1.0, &mut geom), OpmStatus::Ok);
        let mut grid = vec![c(0.0, 0.0); 400];
        assert_eq!(opm_discretize_boundary(geom, grid.len(), grid.as_mut_ptr()), OpmStatus::Ok);
        let mut sol = ptr::null_mut();
        let status = opm_solve(grid.as_ptr(), grid.len(), c(3.0, 0.0), 12, 1e-10, 1, &mut sol);
        assert_eq!(status, OpmStatus::MaxIters);
        assert!(!sol.is_null());
        opm_solution_free(sol);
        opm_geometry_free(geom);
    }
}

#[test]
fn szego_of_constant_density() {
    let values = vec![4.0; 512];
    let (mut d, mut lambda) = (c(0.0, 0.0), 0.0);
    let status = unsafe { opm_szego(values.as_ptr(), values.len(), c(0.5, 0.0), &mut d, &mut lambda) };
    assert_eq!(status, OpmStatus::Ok);
    assert!((d.re - 2.0).abs() < 1e-12 && d.im.abs() < 1e-12);
    assert!((lambda - 0.75 * 4.0).abs() < 1e-12);

    let status = unsafe { opm_szego(values.as_ptr(), values.len(), c(0.995, 0.0), &mut d, &mut lambda) };
    assert_eq!(status, OpmStatus::TooCloseToBoundary);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/opmlab.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn ").or(l.trim().strip_prefix("pub extern \"C\" fn ")))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["typedef struct OpmGeometry OpmGeometry;", "OPM_STATUS_OK = 0", "typedef struct OpmComplex"] {
        assert!(header.contains(ty), "{ty}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = tempfile::TempDir::new().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(&src, "#include \"opmlab.h\"\nint main(void) { OpmComplex z = {2.0, 0.0}; (void)z; return opm_version() == 0; }\n").unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
