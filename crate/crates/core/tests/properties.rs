use approx::assert_relative_eq;
use proptest::prelude::*;
use srl_core::potential::{potential_from_weight, potential_htype};
use srl_core::sublevel::cylinder_radius;
use srl_core::*;

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn heis_point() -> impl Strategy<Value = GroupPoint> {
    (coord(), coord(), coord()).prop_map(|(a, b, c)| GroupPoint::new(&[a, b], &[c]))
}

fn wide_point() -> impl Strategy<Value = GroupPoint> {
    (prop::collection::vec(coord(), 4), coord()).prop_map(|(x, t)| GroupPoint::new(&x, &[t]))
}

fn non_htype() -> MetivierStructure {
    make_block_diagonal(&[1.0, 2.0]).unwrap()
}

fn scale(p: &GroupPoint) -> f64 {
    p.x.iter().chain(&p.t).fold(1.0_f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn associativity(p in wide_point(), q in wide_point(), r in wide_point()) {
        let s = non_htype();
        let a = multiply(&s, &multiply(&s, &p, &q).unwrap(), &r).unwrap();
        let b = multiply(&s, &p, &multiply(&s, &q, &r).unwrap()).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12 * scale(&a));
    }

    #[test]
    fn inverse_is_two_sided(p in heis_point()) {
        let s = make_heisenberg();
        let e1 = multiply(&s, &p, &inverse(&p)).unwrap();
        let e2 = multiply(&s, &inverse(&p), &p).unwrap();
        prop_assert!(e1.max_abs_diff(&s.identity()) <= 1e-12 * scale(&p));
        prop_assert!(e2.max_abs_diff(&s.identity()) <= 1e-12 * scale(&p));
    }

    #[test]
    fn dilations_are_automorphisms(p in wide_point(), q in wide_point(), r in 0.05..20.0f64) {
        let s = non_htype();
        let a = dilate(r, &multiply(&s, &p, &q).unwrap()).unwrap();
        let b = multiply(&s, &dilate(r, &p).unwrap(), &dilate(r, &q).unwrap()).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12 * scale(&a));
    }

    #[test]
    fn dilations_compose(p in heis_point(), r in 0.1..10.0f64, u in 0.1..10.0f64) {
        let a = dilate(r, &dilate(u, &p).unwrap()).unwrap();
        let b = dilate(r * u, &p).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12 * scale(&b));
    }

    #[test]
    fn norm_is_homogeneous(p in wide_point(), r in 0.05..20.0f64) {
        let s = non_htype();
        let n = kaplan_norm(&s, &p);
        let nr = kaplan_norm(&s, &dilate(r, &p).unwrap());
        prop_assert!((nr - r * n).abs() <= 1e-12 * (r * n).max(1.0));
    }

    #[test]
    fn distance_is_left_invariant_and_symmetric(g in heis_point(), p in heis_point(), q in heis_point()) {
        let s = make_heisenberg();
        let d = quasi_distance(&s, &p, &q);
        let dg = quasi_distance(&s, &multiply(&s, &g, &p).unwrap(), &multiply(&s, &g, &q).unwrap());
        prop_assert!((d - dg).abs() <= 1e-12 * d.max(1.0));
        prop_assert!((d - quasi_distance(&s, &q, &p)).abs() <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn htype_closed_form(p in heis_point(), alpha in 0.5..5.0f64) {
        let s = make_heisenberg();
        prop_assume!(!p.is_identity());
        let v = potential_value(alpha, &s, &p).unwrap();
        let c = potential_htype(alpha, &s, &p).unwrap();
        prop_assert!((v - c).abs() <= 1e-10 * v.abs().max(c.abs()).max(1.0));
    }

    #[test]
    fn ground_state_routes_agree(x1 in -1.5..1.5f64, x2 in -1.5..1.5f64, t in -1.0..1.0f64, alpha in 1.0..4.0f64) {
        let s = make_heisenberg();
        let p = GroupPoint::new(&[x1, x2], &[t]);
        prop_assume!(kaplan_norm(&s, &p) > 0.1);
        let a = potential_value(alpha, &s, &p).unwrap();
        let b = potential_from_weight(alpha, &s, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn sandwich_holds_off_htype(p in wide_point(), alpha in 0.5..5.0f64) {
        let s = non_htype();
        prop_assume!(!p.is_identity());
        let est = verify_metivier(&s, 200, 0).unwrap();
        let k = potential_bounds(alpha, &est, &s).unwrap();
        let rep = check_sandwich(alpha, &s, &k, std::slice::from_ref(&p)).unwrap();
        prop_assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }

    #[test]
    fn sublevel_is_monotone_in_level(p in heis_point(), m1 in -50.0..50.0f64, dm in 0.0..50.0f64) {
        let s = make_heisenberg();
        prop_assume!(!p.is_identity());
        let lo = in_sublevel(&SublevelSpec::new(3.0, m1).unwrap(), &s, &p).unwrap();
        let hi = in_sublevel(&SublevelSpec::new(3.0, m1 + dm).unwrap(), &s, &p).unwrap();
        prop_assert!(!lo || hi);
    }

    #[test]
    fn sublevel_lies_in_cylinder(p in heis_point(), alpha in 2.2..6.0f64, m in -5.0..30.0f64) {
        let s = make_heisenberg();
        prop_assume!(!p.is_identity());
        let spec = SublevelSpec::new(alpha, m).unwrap();
        let est = verify_metivier(&s, 10, 0).unwrap();
        if in_sublevel(&spec, &s, &p).unwrap() {
            prop_assert!(p.x_norm_sq().sqrt() <= cylinder_radius(&spec, &s, &est).unwrap());
        }
    }

    #[test]
    fn weight_is_in_unit_interval(p in heis_point(), alpha in 0.1..6.0f64) {
        let s = make_heisenberg();
        let w = weight(alpha, &s, &p).unwrap();
        prop_assert!(w > 0.0 || kaplan_norm(&s, &p).powf(alpha) > 700.0);
        prop_assert!(w <= 1.0);
    }
}

#[test]
fn structure_json_round_trip() {
    for s in [make_heisenberg(), non_htype(), make_block_diagonal(&[1.0, 1.0, 1.0]).unwrap()] {
        let text = s.to_json_string();
        let back = MetivierStructure::from_json_str(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.is_h_type(), s.is_h_type());
    }
}

#[test]
fn structure_json_accepts_row_lists() {
    let text = r#"{"n": 1, "m": 1, "J": [[[0, 1], [-1, 0]]], "h_type": true}"#;
    let s = MetivierStructure::from_json_str(text).unwrap();
    assert_eq!(s, make_heisenberg());
    let lie = r#"{"n": 2, "m": 1, "J": [[0,1,0,0, -1,0,0,0, 0,0,0,2, 0,0,-2,0]], "h_type": true}"#;
    assert!(MetivierStructure::from_json_str(lie).is_err());
}

#[test]
fn gamma_estimate_is_at_least_one_and_monotone() {
    let s = non_htype();
    let a = estimate_gamma(&s, 500, 2).unwrap();
    let b = estimate_gamma(&s, 5000, 2).unwrap();
    assert!(a.gamma_hat >= 1.0);
    assert!(b.gamma_hat >= a.gamma_hat);
    assert_relative_eq!(estimate_gamma(&make_heisenberg(), 5000, 1).unwrap().gamma_hat, 1.0, epsilon = 1e-12);
}
