use num_complex::Complex64;

use ssq_core::grid::{gaussian, plateau_window};
use ssq_core::harness::loglog_slope;
use ssq_core::star::{
    moyal_series, nu_of_hbar, operator_norm_estimate, poisson_bracket, weyl_product_fft, MAX_MOYAL_ORDER,
};
use ssq_core::{run_suite, EsetStructure, Method, PhaseSpaceGrid, StarParams, Status, SuiteConfig};

fn pair(hbar: f64) -> (PhaseSpaceGrid, PhaseSpaceGrid) {
    let u = gaussian(1, 64, 8.0, hbar, &[0.4, -0.2], 1.2, 1.0).unwrap();
    let v = gaussian(1, 64, 8.0, hbar, &[-0.3, 0.5], 1.0, 1.3).unwrap();
    (u, v)
}

#[test]
fn moyal_truncation_error_has_the_right_order() {
    let hbars = [0.02, 0.04, 0.08, 0.16, 0.2];
    for order in 1..=3 {
        let errs: Vec<f64> = hbars
            .iter()
            .map(|&h| {
                let (u, v) = pair(h);
                let exact = weyl_product_fft(&u, &v, h).unwrap();
                let series = moyal_series(&u, &v, nu_of_hbar(h), order).unwrap();
                series.sub(&exact).norm_l2()
            })
            .collect();
        let nus: Vec<f64> = hbars.iter().map(|h| h / 2.0).collect();
        let slope = loglog_slope(&nus, &errs);
        assert!((slope - (order as f64 + 1.0)).abs() < 0.3, "order {order}: slope {slope}, errors {errs:?}");
    }
}

#[test]
fn moyal_order_is_capped() {
    let (u, v) = pair(0.1);
    assert!(moyal_series(&u, &v, nu_of_hbar(0.1), MAX_MOYAL_ORDER + 1).is_err());
    let zeroth = moyal_series(&u, &v, nu_of_hbar(0.1), 0).unwrap();
    assert!(zeroth.rel_l2_diff(&u.mul(&v)) < 1e-15);
}

#[test]
fn canonical_bracket_is_one() {
    let win = |x: &[f64]| plateau_window(x, 5.5, 0.5);
    let p = PhaseSpaceGrid::from_fn(1, 128, 8.0, 1.0, |a, l| Complex64::new(a[0] * win(&[a[0], l[0]]), 0.0)).unwrap();
    let q = PhaseSpaceGrid::from_fn(1, 128, 8.0, 1.0, |a, l| Complex64::new(l[0] * win(&[a[0], l[0]]), 0.0)).unwrap();
    let b = poisson_bracket(&p, &q).unwrap();
    for i in 0..b.data.len() {
        let x = b.coords(i);
        if x.iter().all(|v| v.abs() <= 3.0) {
            assert!((b.data[i] - Complex64::new(1.0, 0.0)).norm() < 1e-6, "{:?} at {x:?}", b.data[i]);
        }
    }
}

#[test]
fn bracket_is_antisymmetric_and_satisfies_jacobi() {
    let (u, v) = pair(1.0);
    let w = gaussian(1, 64, 8.0, 1.0, &[0.1, 0.2], 1.1, 0.9).unwrap();
    let uv = poisson_bracket(&u, &v).unwrap();
    let vu = poisson_bracket(&v, &u).unwrap();
    assert!(uv.add(&vu).max_abs() < 1e-12 * uv.max_abs());
    let a = poisson_bracket(&u, &poisson_bracket(&v, &w).unwrap()).unwrap();
    let b = poisson_bracket(&v, &poisson_bracket(&w, &u).unwrap()).unwrap();
    let c = poisson_bracket(&w, &uv).unwrap();
    let j = a.add(&b).add(&c).max_abs();
    assert!(j < 1e-6, "jacobiator {j}");
}

#[test]
fn operator_norm_is_homogeneous() {
    let e = EsetStructure::example_2d();
    let params = StarParams::new(1.0).with_method(Method::Flat);
    let u = gaussian(1, 64, 8.0, 1.0, &[0.2, 0.1], 1.0, 1.0).unwrap();
    let n1 = operator_norm_estimate(&e, &u, &params).unwrap();
    let n3 = operator_norm_estimate(&e, &u.scale(Complex64::new(0.0, 3.0)), &params).unwrap();
    assert!(n1 > 0.0);
    assert!((n3 - 3.0 * n1).abs() < 1e-10 * n3, "{n1} {n3}");
}

#[test]
fn invalid_structure_skips_dependents() {
    // pairing B = 0: ρ(A) sends 𝔨 into 𝔨 only
    let e = EsetStructure::new("singular", 1, 1, 1, vec![vec![vec![0.0, 0.0], vec![1.0, 0.0]]], vec![1.0]).unwrap();
    let cfg = SuiteConfig::default().with_checks(&["eset_validate", "symmetric_space_axioms", "weyl_idempotent"]);
    let r = run_suite(&e, &cfg).unwrap();
    assert_eq!(r.check("eset_validate").unwrap().status, Status::Fail);
    assert_eq!(r.check("symmetric_space_axioms").unwrap().status, Status::Skipped);
    assert_eq!(r.check("weyl_idempotent").unwrap().status, Status::Skipped);
    assert!(!r.passed());
}

#[test]
fn suite_is_deterministic() {
    let e = EsetStructure::example_2d();
    let cfg = SuiteConfig::default().with_checks(&["symmetric_space_axioms", "phase_admissibility", "symmetry_liouville"]);
    let a = run_suite(&e, &cfg).unwrap();
    let b = run_suite(&e, &cfg).unwrap();
    for (x, y) in a.checks.iter().zip(&b.checks) {
        assert_eq!(x.residual.to_bits(), y.residual.to_bits(), "{}", x.name);
    }
    let json = a.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["checks"][0]["status"], "pass");
}
