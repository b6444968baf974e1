use proptest::prelude::*;

use ssq_core::geometry::{
    group_act, group_inv, group_mul, midpoint, phase_s, project_pi, section_gamma, symmetry,
};
use ssq_core::grid::gaussian;
use ssq_core::{EsetStructure, GroupElement, PhaseSpaceGrid, Point};

fn pt() -> impl Strategy<Value = Point> {
    (-2.0..2.0f64, -3.0..3.0f64).prop_map(|(a, l)| Point::new(vec![a], vec![l]))
}

fn elem() -> impl Strategy<Value = GroupElement> {
    (-1.5..1.5f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, k, l)| GroupElement { a: vec![a], k: vec![k], l: vec![l] })
}

fn tol(x: &Point) -> f64 {
    1e-11 * (1.0 + x.norm_inf())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn symmetry_is_an_involution(x in pt(), y in pt()) {
        let e = EsetStructure::example_2d();
        let z = symmetry(&e, &x, &symmetry(&e, &x, &y));
        prop_assert!(z.dist_inf(&y) < tol(&y) * 10.0);
        prop_assert!(symmetry(&e, &x, &x).dist_inf(&x) < tol(&x));
    }

    #[test]
    fn midpoint_maps_origin(x in pt()) {
        let e = EsetStructure::example_2d();
        let m = midpoint(&e, &x).unwrap();
        let o = symmetry(&e, &m, &Point::origin(1));
        prop_assert!(o.dist_inf(&x) < tol(&x));
    }

    #[test]
    fn action_is_a_group_action(g in elem(), h in elem(), x in pt()) {
        let e = EsetStructure::example_2d();
        let lhs = group_act(&e, &group_mul(&e, &g, &h), &x);
        let rhs = group_act(&e, &g, &group_act(&e, &h, &x));
        prop_assert!(lhs.dist_inf(&rhs) < 1e-10 * (1.0 + rhs.norm_inf()));
        let id = group_mul(&e, &g, &group_inv(&e, &g));
        prop_assert!(id.dist_inf(&GroupElement::identity(&e)) < 1e-10);
    }

    #[test]
    fn section_projects_back(x in pt()) {
        let e = EsetStructure::example_2d();
        prop_assert!(project_pi(&e, &section_gamma(&e, &x)).dist_inf(&x) < tol(&x));
    }

    #[test]
    fn phase_is_alternating_and_invariant(x in pt(), y in pt(), z in pt(), g in elem()) {
        let e = EsetStructure::example_2d();
        let s = phase_s(&e, &x, &y, &z);
        let scale = 1e-10 * (1.0 + s.abs());
        prop_assert!((phase_s(&e, &y, &z, &x) - s).abs() < scale);
        prop_assert!((phase_s(&e, &y, &x, &z) + s).abs() < scale);
        let m = symmetry(&e, &x, &Point::origin(1));
        let sym = phase_s(&e, &symmetry(&e, &m, &x), &symmetry(&e, &m, &y), &symmetry(&e, &m, &z));
        prop_assert!((sym - s).abs() < 1e-8 * (1.0 + s.abs()));
        let gs = phase_s(&e, &group_act(&e, &g, &x), &group_act(&e, &g, &y), &group_act(&e, &g, &z));
        prop_assert!((gs - s).abs() < 1e-8 * (1.0 + s.abs()));
    }

    #[test]
    fn twist_inverse_round_trips(a in -8.0..8.0f64) {
        let e = EsetStructure::example_2d();
        let x = e.twist_inverse(&[a]).unwrap();
        let back = e.twist(&x).unwrap()[0];
        prop_assert!((back - a).abs() < 1e-12 * (1.0 + a.abs()));
        prop_assert!(e.lemma_sinh_residual(&[a]).unwrap() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn product_structure_twist_round_trips(a in proptest::collection::vec(-3.0..3.0f64, 2)) {
        let e = EsetStructure::example_product(2);
        let x = e.twist_inverse(&a).unwrap();
        let back = e.twist(&x).unwrap();
        for (p, q) in back.iter().zip(&a) {
            prop_assert!((p - q).abs() < 1e-12 * (1.0 + q.abs()));
        }
    }

    #[test]
    fn grid_file_round_trips(c in -1.0..1.0f64, w in 0.5..2.0f64, hbar in 0.1..3.0f64) {
        let g = gaussian(1, 16, 4.0, hbar, &[c, -c], w, w).unwrap();
        let g = g.map(|z| z * num_complex::Complex64::new(1.0, c));
        let back = PhaseSpaceGrid::from_bytes(&g.to_bytes()).unwrap();
        prop_assert_eq!(back, g);
    }
}
